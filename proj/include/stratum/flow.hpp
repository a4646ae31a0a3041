#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <vector>

#include "stratum/mesh.hpp"

namespace stratum {

enum class BcKind { Pressure, Flux };

struct BoundaryCondition {
    BcKind kind = BcKind::Flux;
    double value = 0.0;  // pressure, or outward normal flux density
};

/// Matrix boundary data keyed by face tag.
struct MatrixBoundary {
    BoundaryCondition inflow{BcKind::Pressure, 1.0};
    BoundaryCondition outflow{BcKind::Pressure, 0.0};
    BoundaryCondition noflow{BcKind::Flux, 0.0};

    const BoundaryCondition& of(BoundaryTag tag) const;
};

/// Condition at a 1D subdomain endpoint. For Flux the value is the total
/// flux entering the subdomain through that end.
struct EndCondition {
    BcKind kind = BcKind::Flux;
    double value = 0.0;
};

/// Coefficients of the mixed-dimensional Darcy problem. Permeabilities are
/// already divided by viscosity; the 1D tangential conductances used in the
/// assembly are eps*k and the interface resistances eps/k_normal.
struct FlowProperties {
    std::vector<double> k_matrix;                       // per matrix cell
    std::vector<double> k_frac_tan, k_frac_nrm;         // per fracture segment
    std::array<std::vector<double>, 2> k_layer_tan, k_layer_nrm;
    std::vector<double> eps_gamma;                      // fracture aperture per segment
    std::array<std::vector<double>, 2> eps_mu;          // layer thickness per segment
    std::vector<double> source_matrix;                  // volumetric sources (empty = zero)
    std::vector<double> source_fracture;
    std::array<std::vector<double>, 2> source_layer;
    MatrixBoundary boundary;
    std::array<EndCondition, 2> fracture_end;           // [start, end]
    std::array<std::array<EndCondition, 2>, 2> layer_end;  // [side][start, end]
};

/// Geometry fields entering the permeability update and the capacity terms.
struct GeometryFields {
    std::vector<double> phi_matrix;
    std::array<std::vector<double>, 2> phi_layer;
    std::vector<double> eps_gamma;
    std::array<std::vector<double>, 2> eps_mu;
};

enum class PermeabilityLaw { Quadratic, Cubic };

/// Rescale reference permeabilities to the current geometry: matrix and layer
/// permeabilities by (phi/phi0)^e, fracture tangential and normal
/// permeabilities by (eps/eps0)^e, with e = 2 (quadratic law) or 3 (cubic).
/// The returned properties carry the current eps fields.
FlowProperties update_permeability(const GeometryFields& fields, const GeometryFields& fields0,
                                   const FlowProperties& props0,
                                   PermeabilityLaw law = PermeabilityLaw::Quadratic);

/// Fixed source terms discretizing the geometry time derivatives
/// (porosity/aperture change over the step, divided by dt).
struct GeometryRates {
    std::vector<double> matrix;                 // d_t phi per cell
    std::vector<double> fracture;               // d_t eps_gamma per segment
    std::array<std::vector<double>, 2> layer;   // d_t (eps_mu phi_mu) per segment
};

struct FlowState {
    Eigen::VectorXd face_flux;     // total flux per matrix face, along the face normal
    Eigen::VectorXd p_matrix;      // per cell
    Eigen::VectorXd p_fracture;    // per segment
    std::array<Eigen::VectorXd, 2> p_layer;
    Eigen::VectorXd vertex_flux_fracture;  // total tangential flux per vertex, arc-oriented
    std::array<Eigen::VectorXd, 2> vertex_flux_layer;
    std::array<Eigen::VectorXd, 2> q_M;      // mortar flux per pair at M-/M+, along the segment normal
    std::array<Eigen::VectorXd, 2> q_Gamma;  // mortar flux per pair at Gamma-/Gamma+
    double residual = 0.0;
};

struct FlowError : std::runtime_error {
    explicit FlowError(const std::string& what) : std::runtime_error(what) {}
};

/// Assemble and solve the mixed-dimensional Darcy problem: RT0-P0 on the
/// matrix, two-point flux on the 1D subdomains, interface conditions with the
/// half-thickness resistances of the crossed lower-dimensional domains.
FlowState assemble_and_solve(const MixedDimMesh& mesh, const FlowProperties& props,
                             const GeometryRates& rates = {});

/// Residuals of the two interface conditions for one crossed thin domain:
/// `average` is the Darcy law across it, `jump` the deviation of its own
/// pressure from the wall average.
struct InterfaceResidual {
    double average = 0.0;
    double jump = 0.0;
};

struct InterfaceResiduals {
    std::vector<InterfaceResidual> fracture;                  // per fracture segment
    std::array<std::vector<InterfaceResidual>, 2> layer;      // per layer segment (multilayer)

    double max_abs() const;
};

/// Re-evaluate the interface conditions on a solved (or hand-built) state.
/// Wall traces on the matrix side are reconstructed from the RT0 momentum
/// rows, so the residuals are an independent diagnostic of the couplings.
InterfaceResiduals interface_flux_residual(const MixedDimMesh& mesh, const FlowProperties& props,
                                           const FlowState& state);

}  // namespace stratum
