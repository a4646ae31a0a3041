#include "stratum/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace stratum {

namespace {

constexpr double kGeomTol = 1e-12;

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Fills faces, centroids, volumes and adjacency of a triangle soup.
void finalize_triangle_mesh(TriangleMesh& m) {
    const int nc = m.num_cells();
    m.cell_volumes.assign(nc, 0.0);
    m.cell_centroids.assign(nc, Vec2{});
    for (int c = 0; c < nc; ++c) {
        const auto& [a, b, d] = m.cells[c];
        const Vec2 pa = m.nodes[a], pb = m.nodes[b], pd = m.nodes[d];
        const double signed_area = 0.5 * (pb - pa).cross(pd - pa);
        if (std::abs(signed_area) < 1e-14)
            throw MeshError("cell " + std::to_string(c) + " has zero area");
        if (signed_area < 0.0) std::swap(m.cells[c][1], m.cells[c][2]);
        m.cell_volumes[c] = std::abs(signed_area);
        m.cell_centroids[c] = (pa + pb + pd) / 3.0;
    }

    std::map<std::pair<int, int>, int> face_of;
    m.faces.clear();
    m.cell_faces.assign(nc, {-1, -1, -1});
    m.cell_face_sign.assign(nc, {0, 0, 0});
    for (int c = 0; c < nc; ++c) {
        for (int e = 0; e < 3; ++e) {
            const int a = m.cells[c][e];
            const int b = m.cells[c][(e + 1) % 3];
            const auto key = std::minmax(a, b);
            auto it = face_of.find(key);
            int f;
            if (it == face_of.end()) {
                f = static_cast<int>(m.faces.size());
                face_of.emplace(key, f);
                Face face;
                face.n0 = key.first;
                face.n1 = key.second;
                const Vec2 p0 = m.nodes[face.n0], p1 = m.nodes[face.n1];
                face.area = distance(p0, p1);
                face.centroid = (p0 + p1) * 0.5;
                face.normal = ((p1 - p0) / face.area).rot90();
                m.faces.push_back(face);
            } else {
                f = it->second;
            }
            Face& face = m.faces[f];
            const int sgn = face.normal.dot(face.centroid - m.cell_centroids[c]) > 0.0 ? 1 : -1;
            if (sgn > 0) {
                if (face.cell_in != -1)
                    throw MeshError("face " + std::to_string(f) + " is shared by more than two cells");
                face.cell_in = c;
            } else {
                if (face.cell_out != -1)
                    throw MeshError("face " + std::to_string(f) + " is shared by more than two cells");
                face.cell_out = c;
            }
            for (int k = 0; k < 3; ++k)
                if (m.cell_faces[c][k] == -1) {
                    m.cell_faces[c][k] = f;
                    m.cell_face_sign[c][k] = sgn;
                    break;
                }
        }
    }
    for (int f = 0; f < m.num_faces(); ++f) {
        Face& face = m.faces[f];
        if (face.cell_in == -1 && face.cell_out == -1)
            throw MeshError("face " + std::to_string(f) + " has no adjacent cell");
        // Keep the stored normal outward of cell_in; swap roles if only cell_out is set.
        if (face.cell_in == -1) {
            face.cell_in = face.cell_out;
            face.cell_out = -1;
            face.normal = face.normal * -1.0;
        }
    }
}

LowerDimGrid build_polyline_grid(const std::vector<Vec2>& pts) {
    LowerDimGrid g;
    g.positions = pts;
    g.arc.resize(pts.size());
    g.arc[0] = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const double len = distance(pts[i - 1], pts[i]);
        if (len <= 0.0) throw MeshError("fracture polyline has a zero-length segment");
        g.arc[i] = g.arc[i - 1] + len;
        g.segments.push_back({static_cast<int>(i - 1), static_cast<int>(i)});
        g.lengths.push_back(len);
        const Vec2 t = (pts[i] - pts[i - 1]) / len;
        g.tangents.push_back(t);
        g.normals.push_back(t.rot90());
    }
    return g;
}

struct SlitResult {
    std::vector<Vec2> polyline;              // vertex positions along the fracture
    std::vector<int> plus_faces;             // slit face ids per segment, plus side
    std::vector<int> minus_faces;
    std::vector<std::pair<int, int>> dup_to_orig;  // duplicated node -> source node
    bool start_on_boundary = false;
    bool end_on_boundary = false;
};

/// Duplicates nodes along the fracture polyline (given as a node-id chain in
/// the unslit mesh) and reassigns minus-side cells to the duplicates.
/// Endpoints strictly inside the domain are immersed tips and stay shared.
SlitResult slit_mesh(TriangleMesh& m, const std::vector<int>& chain,
                     const std::vector<bool>& node_on_boundary) {
    const int npts = static_cast<int>(chain.size());
    if (npts < 2) throw MeshError("fracture polyline needs at least two nodes");

    SlitResult res;
    res.start_on_boundary = node_on_boundary[chain.front()];
    res.end_on_boundary = node_on_boundary[chain.back()];
    if (npts == 2 && !res.start_on_boundary && !res.end_on_boundary)
        throw MeshError("a single-segment fracture with both tips immersed cannot be slit");

    for (int v : chain) res.polyline.push_back(m.nodes[v]);

    // Segment normals (plus side is the rot90 of the arc direction).
    std::vector<Vec2> seg_normal(npts - 1);
    for (int s = 0; s + 1 < npts; ++s)
        seg_normal[s] = (m.nodes[chain[s + 1]] - m.nodes[chain[s]]).normalized().rot90();

    std::vector<std::vector<int>> cells_of_node(m.num_nodes());
    for (int c = 0; c < m.num_cells(); ++c)
        for (int v : m.cells[c]) cells_of_node[v].push_back(c);

    // minus-side duplicate of each chain node (or the shared node at a tip)
    std::vector<int> minus_id(npts);
    for (int k = 0; k < npts; ++k) {
        const int v = chain[k];
        const bool endpoint = (k == 0 || k == npts - 1);
        const bool tip = endpoint && !node_on_boundary[v];
        if (tip) {
            minus_id[k] = v;
            continue;
        }
        const Vec2 n = k == 0              ? seg_normal[0]
                       : k == npts - 1     ? seg_normal[npts - 2]
                                           : (seg_normal[k - 1] + seg_normal[k]).normalized();
        const int dup = m.num_nodes();
        m.nodes.push_back(m.nodes[v]);
        minus_id[k] = dup;
        res.dup_to_orig.emplace_back(dup, v);
        for (int c : cells_of_node[v]) {
            const Vec2 cc =
                (m.nodes[m.cells[c][0]] + m.nodes[m.cells[c][1]] + m.nodes[m.cells[c][2]]) / 3.0;
            if ((cc - m.nodes[v]).dot(n) < 0.0)
                for (int& w : m.cells[c])
                    if (w == v) w = dup;
        }
    }

    finalize_triangle_mesh(m);

    // Locate and tag the slit faces per segment on both sides.
    std::map<std::pair<int, int>, int> face_of;
    for (int f = 0; f < m.num_faces(); ++f)
        face_of[{m.faces[f].n0, m.faces[f].n1}] = f;
    auto find_face = [&](int a, int b, const char* side) {
        auto it = face_of.find(std::minmax(a, b));
        if (it == face_of.end())
            throw MeshError(std::string("missing ") + side + " slit face between nodes " +
                            std::to_string(a) + " and " + std::to_string(b));
        const Face& face = m.faces[it->second];
        if (face.cell_out != -1)
            throw MeshError(std::string(side) + " slit face " + std::to_string(it->second) +
                            " is not a boundary face after slitting");
        return it->second;
    };
    for (int s = 0; s + 1 < npts; ++s) {
        const int fp = find_face(chain[s], chain[s + 1], "plus");
        const int fm = find_face(minus_id[s], minus_id[s + 1], "minus");
        m.faces[fp].tag = BoundaryTag::SlitPlus;
        m.faces[fm].tag = BoundaryTag::SlitMinus;
        res.plus_faces.push_back(fp);
        res.minus_faces.push_back(fm);
    }
    return res;
}

/// Assembles the lower-dimensional grids and interface maps from a slit result.
void attach_lower_dims(MixedDimMesh& mesh, const SlitResult& slit) {
    mesh.fracture = build_polyline_grid(slit.polyline);
    mesh.fracture.start_on_boundary = slit.start_on_boundary;
    mesh.fracture.end_on_boundary = slit.end_on_boundary;

    const int ns = mesh.fracture.num_segments();
    for (int side = 0; side < 2; ++side) {
        mesh.maps_M[side].side = static_cast<Side>(side);
        mesh.maps_M[side].pairs.clear();
        mesh.maps_Gamma[side].side = static_cast<Side>(side);
        mesh.maps_Gamma[side].pairs.clear();
    }
    const auto& wall = [&](int side) -> const std::vector<int>& {
        return side == side_index(Side::Minus) ? slit.minus_faces : slit.plus_faces;
    };
    if (mesh.mode == MeshMode::Multilayer) {
        mesh.layers[0] = mesh.fracture;
        mesh.layers[1] = mesh.fracture;
        for (int side = 0; side < 2; ++side)
            for (int j = 0; j < ns; ++j) {
                mesh.maps_M[side].pairs.push_back({j, wall(side)[j], 1.0});
                mesh.maps_Gamma[side].pairs.push_back({j, j, 1.0});
            }
    } else {
        mesh.layers[0] = LowerDimGrid{};
        mesh.layers[1] = LowerDimGrid{};
        for (int side = 0; side < 2; ++side)
            for (int j = 0; j < ns; ++j)
                mesh.maps_M[side].pairs.push_back({j, wall(side)[j], 1.0});
    }
}

std::vector<bool> boundary_node_flags(const TriangleMesh& m) {
    std::vector<bool> on_boundary(m.num_nodes(), false);
    for (const Face& f : m.faces)
        if (f.cell_out == -1) {
            on_boundary[f.n0] = true;
            on_boundary[f.n1] = true;
        }
    return on_boundary;
}

}  // namespace

std::string to_string(BoundaryTag tag) {
    switch (tag) {
        case BoundaryTag::Interior: return "interior";
        case BoundaryTag::Inflow: return "inflow";
        case BoundaryTag::Outflow: return "outflow";
        case BoundaryTag::NoFlow: return "noflow";
        case BoundaryTag::SlitPlus: return "slit_plus";
        case BoundaryTag::SlitMinus: return "slit_minus";
    }
    return "?";
}

int TriangleMesh::sign(int c, int f) const {
    for (int k = 0; k < 3; ++k)
        if (cell_faces[c][k] == f) return cell_face_sign[c][k];
    throw MeshError("face " + std::to_string(f) + " does not belong to cell " + std::to_string(c));
}

MixedDimMesh build_structured(int n_per_unit) {
    return build_structured(n_per_unit, Vec2{0, 0}, Vec2{0, 0});
}

MixedDimMesh build_structured(int n_per_unit, Vec2 p0, Vec2 p1, MeshMode mode) {
    if (n_per_unit < 1) throw MeshError("n_per_unit must be positive");
    const int n = n_per_unit;
    const double h = 1.0 / n;

    MixedDimMesh mesh;
    mesh.mode = mode;
    TriangleMesh& m = mesh.matrix;

    const auto vid = [n](int i, int j) { return j * (n + 1) + i; };
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) m.nodes.push_back({i * h, j * h});
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            m.cells.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
            m.cells.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
        }

    const bool no_fracture = distance(p0, p1) < kGeomTol;
    if (no_fracture) {
        finalize_triangle_mesh(m);
        for (Face& f : m.faces)
            if (f.cell_out == -1) f.tag = BoundaryTag::NoFlow;
        return mesh;
    }

    // Canonical arc direction: lexicographically smaller endpoint first.
    if (p1.x < p0.x || (p1.x == p0.x && p1.y < p0.y)) std::swap(p0, p1);

    const auto lattice_index = [&](double v, const char* axis) {
        const double scaled = v * n;
        const double rounded = std::round(scaled);
        if (std::abs(scaled - rounded) > 1e-9 * n)
            throw MeshError("fracture endpoint coordinate " + format_double(v) + " (" + axis +
                            ") is not on the 1/" + std::to_string(n) + " lattice");
        const int idx = static_cast<int>(rounded);
        if (idx < 0 || idx > n)
            throw MeshError("fracture endpoint coordinate " + format_double(v) + " (" + axis +
                            ") lies outside the unit square");
        return idx;
    };
    const int i0 = lattice_index(p0.x, "x"), j0 = lattice_index(p0.y, "y");
    const int i1 = lattice_index(p1.x, "x"), j1 = lattice_index(p1.y, "y");
    if (i1 - i0 != j1 - j0 || i1 <= i0)
        throw MeshError("fracture segment (" + format_double(p0.x) + "," + format_double(p0.y) +
                        ")-(" + format_double(p1.x) + "," + format_double(p1.y) +
                        ") is not parallel to the (1,1) lattice diagonal");

    std::vector<int> chain;
    for (int k = 0; k <= i1 - i0; ++k) chain.push_back(vid(i0 + k, j0 + k));

    const auto on_boundary = [&](int i, int j) { return i == 0 || i == n || j == 0 || j == n; };
    std::vector<bool> node_bdry(m.nodes.size(), false);
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) node_bdry[vid(i, j)] = on_boundary(i, j);

    const SlitResult slit = slit_mesh(m, chain, node_bdry);
    for (Face& f : m.faces)
        if (f.cell_out == -1 && f.tag == BoundaryTag::Interior) f.tag = BoundaryTag::NoFlow;
    attach_lower_dims(mesh, slit);
    return mesh;
}

void apply_boundary_tags(MixedDimMesh& mesh, const std::vector<DomainSide>& inflow,
                         const std::vector<DomainSide>& outflow) {
    TriangleMesh& m = mesh.matrix;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const Vec2& p : m.nodes) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    const double tol = 1e-9 * std::max(xmax - xmin, ymax - ymin);
    const auto side_of = [&](const Face& f) -> std::optional<DomainSide> {
        if (std::abs(f.centroid.x - xmin) < tol) return DomainSide::Left;
        if (std::abs(f.centroid.x - xmax) < tol) return DomainSide::Right;
        if (std::abs(f.centroid.y - ymin) < tol) return DomainSide::Bottom;
        if (std::abs(f.centroid.y - ymax) < tol) return DomainSide::Top;
        return std::nullopt;
    };
    const auto contains = [](const std::vector<DomainSide>& v, DomainSide s) {
        return std::find(v.begin(), v.end(), s) != v.end();
    };
    for (Face& f : m.faces) {
        if (f.cell_out != -1) continue;
        if (f.tag == BoundaryTag::SlitPlus || f.tag == BoundaryTag::SlitMinus) continue;
        f.tag = BoundaryTag::NoFlow;
        if (auto s = side_of(f)) {
            if (contains(inflow, *s)) f.tag = BoundaryTag::Inflow;
            if (contains(outflow, *s)) f.tag = BoundaryTag::Outflow;
        }
    }
}

namespace {

/// Orders fracture face node-pairs into a vertex chain; throws on branching
/// or disconnected input.
std::vector<int> chain_from_edges(const std::vector<std::pair<int, int>>& edges,
                                  int num_nodes) {
    std::unordered_map<int, std::vector<int>> adj;
    for (const auto& [a, b] : edges) {
        if (a < 0 || a >= num_nodes || b < 0 || b >= num_nodes)
            throw MeshError("fracface references unknown node " + std::to_string(std::max(a, b)));
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::vector<int> ends;
    for (const auto& [v, nb] : adj) {
        if (nb.size() > 2)
            throw MeshError("fracture faces branch at node " + std::to_string(v) +
                            "; the polyline must not self-intersect");
        if (nb.size() == 1) ends.push_back(v);
    }
    if (ends.size() != 2)
        throw MeshError("fracture faces do not form a single connected polyline");
    std::sort(ends.begin(), ends.end());
    std::vector<int> chain{ends[0]};
    int prev = -1;
    while (true) {
        const int cur = chain.back();
        int next = -1;
        for (int nb : adj[cur])
            if (nb != prev) next = nb;
        if (next == -1) break;
        chain.push_back(next);
        prev = cur;
    }
    if (chain.size() != edges.size() + 1)
        throw MeshError("fracture faces do not form a single connected polyline");
    return chain;
}

}  // namespace

MixedDimMesh import_mesh(const std::string& text, MeshMode mode) {
    std::istringstream in(text);
    std::string line;
    bool header_seen = false;

    std::map<int, Vec2> node_records;
    std::map<int, std::array<int, 3>> cell_records;
    struct BFace {
        int a, b;
        std::string tag;
    };
    std::vector<BFace> bfaces;
    std::vector<std::pair<int, int>> fracfaces;

    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string kind;
        if (!(ls >> kind) || kind.empty() || kind[0] == '#') continue;
        const auto fail = [&](const std::string& msg) {
            throw MeshError("mesh line " + std::to_string(lineno) + ": " + msg);
        };
        if (kind == "mdmesh") {
            int version = 0;
            if (!(ls >> version) || version != 1) fail("unsupported mdmesh version");
            header_seen = true;
        } else if (kind == "node") {
            int id;
            double x, y;
            if (!(ls >> id >> x >> y)) fail("malformed node record");
            if (!node_records.emplace(id, Vec2{x, y}).second)
                fail("duplicate node id " + std::to_string(id));
        } else if (kind == "cell") {
            int id, a, b, c;
            if (!(ls >> id >> a >> b >> c)) fail("malformed cell record");
            if (!cell_records.emplace(id, std::array<int, 3>{a, b, c}).second)
                fail("duplicate cell id " + std::to_string(id));
        } else if (kind == "bface") {
            int a, b;
            std::string tag;
            if (!(ls >> a >> b >> tag)) fail("malformed bface record");
            bfaces.push_back({a, b, tag});
        } else if (kind == "fracface") {
            int a, b;
            if (!(ls >> a >> b)) fail("malformed fracface record");
            fracfaces.emplace_back(a, b);
        } else {
            fail("unknown record '" + kind + "'");
        }
    }
    if (!header_seen) throw MeshError("missing 'mdmesh 1' header");
    if (node_records.empty() || cell_records.empty())
        throw MeshError("mesh has no nodes or no cells");

    // Dense renumbering by sorted id.
    std::unordered_map<int, int> node_index;
    MixedDimMesh mesh;
    mesh.mode = mode;
    TriangleMesh& m = mesh.matrix;
    for (const auto& [id, p] : node_records) {
        node_index.emplace(id, m.num_nodes());
        m.nodes.push_back(p);
    }
    const auto resolve = [&](int id, const std::string& what) {
        auto it = node_index.find(id);
        if (it == node_index.end())
            throw MeshError(what + " references unknown node " + std::to_string(id));
        return it->second;
    };
    for (const auto& [id, tri] : cell_records) {
        const std::string what = "cell " + std::to_string(id);
        m.cells.push_back({resolve(tri[0], what), resolve(tri[1], what), resolve(tri[2], what)});
    }

    finalize_triangle_mesh(m);

    std::map<std::pair<int, int>, int> face_of;
    for (int f = 0; f < m.num_faces(); ++f)
        face_of[{m.faces[f].n0, m.faces[f].n1}] = f;

    bool has_slit_tags = false;
    std::vector<std::pair<int, int>> frac_chain_edges;
    for (const BFace& bf : bfaces) {
        const int a = resolve(bf.a, "bface"), b = resolve(bf.b, "bface");
        auto it = face_of.find(std::minmax(a, b));
        if (it == face_of.end())
            throw MeshError("bface " + std::to_string(bf.a) + " " + std::to_string(bf.b) +
                            " does not match any mesh face");
        Face& face = m.faces[it->second];
        if (face.cell_out != -1)
            throw MeshError("bface " + std::to_string(bf.a) + " " + std::to_string(bf.b) +
                            " is an interior face");
        if (bf.tag == "inflow") face.tag = BoundaryTag::Inflow;
        else if (bf.tag == "outflow") face.tag = BoundaryTag::Outflow;
        else if (bf.tag == "noflow") face.tag = BoundaryTag::NoFlow;
        else if (bf.tag == "slit_plus") { face.tag = BoundaryTag::SlitPlus; has_slit_tags = true; }
        else if (bf.tag == "slit_minus") { face.tag = BoundaryTag::SlitMinus; has_slit_tags = true; }
        else
            throw MeshError("unknown boundary tag '" + bf.tag + "'");
    }
    for (Face& f : m.faces)
        if (f.cell_out == -1 && f.tag == BoundaryTag::Interior) f.tag = BoundaryTag::NoFlow;

    if (has_slit_tags && !fracfaces.empty())
        throw MeshError("mesh mixes fracface records with slit_plus/slit_minus tags");

    if (!fracfaces.empty()) {
        // Unslit representation: chain, slit, rebuild. Slitting rebuilds the
        // face list, so boundary tags are saved by node pair and re-applied
        // through the node-duplication map afterwards.
        std::vector<std::pair<int, int>> edges;
        for (auto [a, b] : fracfaces)
            edges.emplace_back(resolve(a, "fracface"), resolve(b, "fracface"));
        for (auto [a, b] : edges) {
            auto it = face_of.find(std::minmax(a, b));
            if (it == face_of.end() || m.faces[it->second].cell_out == -1)
                throw MeshError("fracface " + std::to_string(a) + " " + std::to_string(b) +
                                " is not an interior mesh face");
        }
        std::map<std::pair<int, int>, BoundaryTag> saved_tags;
        for (const Face& f : m.faces)
            if (f.cell_out == -1) saved_tags[{f.n0, f.n1}] = f.tag;

        const std::vector<int> chain = chain_from_edges(edges, m.num_nodes());
        const SlitResult slit = slit_mesh(m, chain, boundary_node_flags(m));

        std::unordered_map<int, int> orig_of;
        for (auto [dup, orig] : slit.dup_to_orig) orig_of.emplace(dup, orig);
        const auto original_id = [&](int v) {
            auto it = orig_of.find(v);
            return it == orig_of.end() ? v : it->second;
        };
        for (Face& f : m.faces) {
            if (f.cell_out != -1 || f.tag != BoundaryTag::Interior) continue;
            auto it = saved_tags.find(std::minmax(original_id(f.n0), original_id(f.n1)));
            f.tag = it != saved_tags.end() ? it->second : BoundaryTag::NoFlow;
        }
        attach_lower_dims(mesh, slit);
        return mesh;
    }

    if (has_slit_tags) {
        // Already-slit representation: pair coincident plus/minus faces.
        std::vector<int> plus, minus;
        for (int f = 0; f < m.num_faces(); ++f) {
            if (m.faces[f].tag == BoundaryTag::SlitPlus) plus.push_back(f);
            if (m.faces[f].tag == BoundaryTag::SlitMinus) minus.push_back(f);
        }
        std::vector<int> partner(m.num_faces(), -1);
        for (int fp : plus) {
            for (int fm : minus)
                if (distance(m.faces[fp].centroid, m.faces[fm].centroid) < kGeomTol &&
                    partner[fm] == -1) {
                    partner[fp] = fm;
                    partner[fm] = fp;
                    break;
                }
            if (partner[fp] == -1)
                throw MeshError("slit face " + std::to_string(m.faces[fp].n0) + " " +
                                std::to_string(m.faces[fp].n1) +
                                " tagged slit_plus has no coincident slit_minus partner");
        }
        for (int fm : minus)
            if (partner[fm] == -1)
                throw MeshError("slit face " + std::to_string(m.faces[fm].n0) + " " +
                                std::to_string(m.faces[fm].n1) +
                                " tagged slit_minus has no coincident slit_plus partner");

        std::vector<std::pair<int, int>> edges;
        for (int fp : plus) edges.emplace_back(m.faces[fp].n0, m.faces[fp].n1);
        std::vector<int> chain = chain_from_edges(edges, m.num_nodes());

        // Orient so that the plus-side cells sit on the rot90 side of the arc.
        {
            const int fp = plus.front();
            const Vec2 t = (m.nodes[chain[1]] - m.nodes[chain[0]]).normalized();
            const Vec2 cc = m.cell_centroids[m.faces[fp].cell_in];
            // Find the chain position of this face to test against the local tangent.
            Vec2 local_t = t;
            for (std::size_t s = 0; s + 1 < chain.size(); ++s) {
                const auto key = std::minmax(chain[s], chain[s + 1]);
                if (key == std::minmax(m.faces[fp].n0, m.faces[fp].n1)) {
                    local_t = (m.nodes[chain[s + 1]] - m.nodes[chain[s]]).normalized();
                    break;
                }
            }
            if ((cc - m.faces[fp].centroid).dot(local_t.rot90()) < 0.0)
                std::reverse(chain.begin(), chain.end());
        }

        SlitResult slit;
        const auto bdry = boundary_node_flags(m);
        slit.start_on_boundary = bdry[chain.front()];
        slit.end_on_boundary = bdry[chain.back()];
        for (int v : chain) slit.polyline.push_back(m.nodes[v]);
        for (std::size_t s = 0; s + 1 < chain.size(); ++s) {
            const auto key = std::minmax(chain[s], chain[s + 1]);
            const int fp = face_of.at(key);
            slit.plus_faces.push_back(fp);
            slit.minus_faces.push_back(partner[fp]);
        }
        attach_lower_dims(mesh, slit);
        return mesh;
    }

    return mesh;  // no fracture
}

std::string export_mesh(const MixedDimMesh& mesh) {
    const TriangleMesh& m = mesh.matrix;
    std::ostringstream out;
    out << "mdmesh 1\n";
    for (int i = 0; i < m.num_nodes(); ++i)
        out << "node " << i << ' ' << format_double(m.nodes[i].x) << ' '
            << format_double(m.nodes[i].y) << '\n';
    for (int c = 0; c < m.num_cells(); ++c)
        out << "cell " << c << ' ' << m.cells[c][0] << ' ' << m.cells[c][1] << ' '
            << m.cells[c][2] << '\n';
    for (const Face& f : m.faces)
        if (f.cell_out == -1)
            out << "bface " << f.n0 << ' ' << f.n1 << ' ' << to_string(f.tag) << '\n';
    return out.str();
}

JumpAverage jump_average(InterfaceConvention conv, double value_plus, double value_minus,
                         std::optional<double> mid) {
    switch (conv) {
        case InterfaceConvention::GammaCentred:
        case InterfaceConvention::GammaMultilayer:
            return {value_plus - value_minus, 0.5 * (value_plus + value_minus)};
        case InterfaceConvention::MuMinus: {
            const double m_val = mid.value_or(0.5 * (value_plus + value_minus));
            return {value_plus - value_minus, 0.5 * (m_val + value_minus)};
        }
        case InterfaceConvention::MuPlus: {
            const double m_val = mid.value_or(0.5 * (value_plus + value_minus));
            return {value_plus - value_minus, 0.5 * (value_plus - m_val)};
        }
    }
    return {};
}

}  // namespace stratum
