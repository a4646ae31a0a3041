#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stratum/geometry.hpp"

namespace stratum {

enum class BoundaryTag { Interior, Inflow, Outflow, NoFlow, SlitPlus, SlitMinus };

std::string to_string(BoundaryTag tag);

/// Geometric side of the domain boundary, used to assign inflow/outflow regions.
enum class DomainSide { Left, Right, Bottom, Top };

enum class Side : int { Minus = 0, Plus = 1 };
inline int side_index(Side s) { return static_cast<int>(s); }

struct Face {
    int n0 = -1;              // node pair, n0 < n1
    int n1 = -1;
    int cell_in = -1;         // cell for which `normal` points outward
    int cell_out = -1;        // opposite cell, -1 on the boundary
    double area = 0.0;        // length of the edge
    Vec2 normal;              // unit normal, fixed orientation (outward of cell_in)
    Vec2 centroid;
    BoundaryTag tag = BoundaryTag::Interior;
};

/// Conforming triangulation of the 2D matrix domain. Slit faces along the
/// fracture come in geometrically coincident plus/minus pairs that are
/// topologically disconnected (nodes along the slit are duplicated).
struct TriangleMesh {
    std::vector<Vec2> nodes;
    std::vector<std::array<int, 3>> cells;       // CCW node triples
    std::vector<Face> faces;
    std::vector<double> cell_volumes;            // triangle areas
    std::vector<Vec2> cell_centroids;
    std::vector<std::array<int, 3>> cell_faces;  // face ids per cell
    std::vector<std::array<int, 3>> cell_face_sign;  // +1 if face normal is outward of the cell

    int num_cells() const { return static_cast<int>(cells.size()); }
    int num_faces() const { return static_cast<int>(faces.size()); }
    int num_nodes() const { return static_cast<int>(nodes.size()); }

    /// Signed orientation of face f relative to cell c (+1 outward, -1 inward).
    int sign(int c, int f) const;
};

/// 1D grid embedded in the plane (fracture centre line or reactive layer).
struct LowerDimGrid {
    std::vector<double> arc;            // arc-length coordinate per vertex, strictly increasing
    std::vector<Vec2> positions;        // embedded vertex positions
    std::vector<std::array<int, 2>> segments;
    std::vector<double> lengths;        // per segment
    std::vector<Vec2> tangents;         // unit, along increasing arc
    std::vector<Vec2> normals;          // unit, tangent rotated +90 deg (points to the plus side)
    bool start_on_boundary = false;     // first vertex lies on the domain boundary
    bool end_on_boundary = false;

    int num_segments() const { return static_cast<int>(segments.size()); }
    int num_vertices() const { return static_cast<int>(arc.size()); }
    Vec2 segment_midpoint(int s) const {
        return (positions[segments[s][0]] + positions[segments[s][1]]) * 0.5;
    }
};

/// One matched entity pair of an interface. For conforming meshes the
/// projection weight is always 1.
struct InterfacePair {
    int lower = -1;   // segment id in the lower-dimensional grid
    int other = -1;   // matrix slit-face id (M interfaces) or segment id (Gamma interfaces)
    double weight = 1.0;
};

struct InterfaceMap {
    Side side = Side::Minus;
    std::vector<InterfacePair> pairs;

    int size() const { return static_cast<int>(pairs.size()); }
};

enum class MeshMode { FractureOnly, Multilayer };

/// Mixed-dimensional mesh: 2D matrix with an internal slit, 1D fracture,
/// optional 1D layers, and the interface maps carrying mortar degrees of
/// freedom.
///
/// In multilayer mode maps_M couple matrix slit faces to layer segments and
/// maps_Gamma couple layer segments to fracture segments. In fracture-only
/// mode the layers are absent and maps_M couples matrix slit faces directly
/// to fracture segments.
struct MixedDimMesh {
    TriangleMesh matrix;
    LowerDimGrid fracture;
    std::array<LowerDimGrid, 2> layers;   // [minus, plus]
    std::array<InterfaceMap, 2> maps_M;
    std::array<InterfaceMap, 2> maps_Gamma;
    MeshMode mode = MeshMode::Multilayer;

    bool has_fracture() const { return fracture.num_segments() > 0; }
};

struct MeshError : std::runtime_error {
    explicit MeshError(const std::string& what) : std::runtime_error(what) {}
};

/// Build a structured diagonal triangulation of the unit square with a
/// conforming slit along the given fracture segment. The fracture endpoints
/// must be lattice nodes of spacing 1/n_per_unit and the segment must be
/// parallel to (1,1)/sqrt(2). Pass identical endpoints for a fracture-free
/// mesh.
MixedDimMesh build_structured(int n_per_unit, Vec2 fracture_p0, Vec2 fracture_p1,
                              MeshMode mode = MeshMode::Multilayer);

/// Fracture-free structured mesh of the unit square.
MixedDimMesh build_structured(int n_per_unit);

/// Assign inflow/outflow tags to outer boundary faces by domain side; faces
/// on unlisted sides become no-flow. Slit tags are left untouched.
void apply_boundary_tags(MixedDimMesh& mesh, const std::vector<DomainSide>& inflow,
                         const std::vector<DomainSide>& outflow);

/// Parse a mesh from the plain-text `mdmesh 1` format.
MixedDimMesh import_mesh(const std::string& text, MeshMode mode = MeshMode::Multilayer);

/// Serialize to the `mdmesh 1` format (slit representation, nodes sorted by id).
std::string export_mesh(const MixedDimMesh& mesh);

/// Interface identity for the jump/average operators. GammaCentred is the
/// fracture-only convention; the multilayer conventions take the fracture
/// pressure and the matrix trace (mu) or the two layer values (gamma).
enum class InterfaceConvention { GammaCentred, MuMinus, MuPlus, GammaMultilayer };

struct JumpAverage {
    double jump = 0.0;
    double average = 0.0;
};

/// Jump and average of a scalar across an interface.
///  - GammaCentred / GammaMultilayer: value_plus, value_minus are the two side
///    traces; jump = plus - minus, average = (plus + minus)/2.
///  - MuMinus: value_plus = fracture value, value_minus = matrix trace at M-,
///    mid = layer value; jump = fracture - trace, average = (mid + trace)/2.
///  - MuPlus: value_plus = matrix trace at M+, value_minus = fracture value,
///    mid = layer value; jump = trace - fracture, average = (trace - mid)/2.
JumpAverage jump_average(InterfaceConvention conv, double value_plus, double value_minus,
                         std::optional<double> mid = std::nullopt);

}  // namespace stratum
