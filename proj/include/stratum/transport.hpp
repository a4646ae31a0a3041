#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <vector>

#include "stratum/flow.hpp"
#include "stratum/mesh.hpp"

namespace stratum {

/// TPFA transmissibility of a face between two half-cells with conductivities
/// k1, k2 and centroid-to-face distances d1, d2: area / (d1/k1 + d2/k2).
/// A blocking side (k = 0) gives 0.
double tpfa_transmissibility(double k1, double k2, double d1, double d2, double area);

/// Boundary data for the solute: a concentration (used as the advective donor
/// on inflow and as a diffusive Dirichlet value) or a prescribed total flux.
struct SoluteBoundaryCondition {
    enum class Kind { Concentration, TotalFlux } kind = Kind::TotalFlux;
    double value = 0.0;
};

struct SoluteBoundary {
    SoluteBoundaryCondition inflow{SoluteBoundaryCondition::Kind::Concentration, 0.0};
    SoluteBoundaryCondition outflow{SoluteBoundaryCondition::Kind::Concentration, 0.0};
    SoluteBoundaryCondition noflow{SoluteBoundaryCondition::Kind::TotalFlux, 0.0};

    const SoluteBoundaryCondition& of(BoundaryTag tag) const;
};

struct TransportProperties {
    // Capacity coefficients frozen at the step-predicted geometry:
    // phi* per matrix cell, eps*_gamma per fracture segment,
    // eps_mu * phi*_mu per layer segment.
    std::vector<double> capacity_matrix;
    std::vector<double> capacity_fracture;
    std::array<std::vector<double>, 2> capacity_layer;

    // Diffusivities (tangential conductances are capacity * d).
    double d_matrix = 0.0;
    double d_frac_tan = 0.0, d_frac_nrm = 0.0;
    double d_layer_tan = 0.0, d_layer_nrm = 0.0;

    // Thicknesses for the eps/delta interface resistances.
    std::vector<double> eps_gamma;
    std::array<std::vector<double>, 2> eps_mu;

    double upwind_weight = 1.0;  // weighted upstream, in [1/2, 1]

    SoluteBoundary boundary;
    // Donor concentration at 1D pressure ends; unset ends exchange nothing.
    std::array<std::optional<double>, 2> u_fracture_end;
    std::array<std::array<std::optional<double>, 2>, 2> u_layer_end;
};

struct TransportState {
    Eigen::VectorXd u_matrix;
    Eigen::VectorXd u_fracture;
    std::array<Eigen::VectorXd, 2> u_layer;
    std::array<Eigen::VectorXd, 2> chi_M;      // mortar total flux at M-/M+, segment-normal oriented
    std::array<Eigen::VectorXd, 2> chi_Gamma;  // mortar total flux at Gamma-/Gamma+
    double boundary_influx = 0.0;              // net solute influx through outer boundaries
    double residual = 0.0;
};

struct TransportError : std::runtime_error {
    explicit TransportError(const std::string& what) : std::runtime_error(what) {}
};

TransportState make_transport_state(const MixedDimMesh& mesh, double u0 = 0.0);

/// One implicit-Euler advection-diffusion step (no reaction): TPFA diffusion,
/// weighted-upstream advection on the Darcy fluxes of `flow`, mortar exchange
/// mirroring the flow couplings.
TransportState advect_diffuse_step(const MixedDimMesh& mesh, const TransportProperties& props,
                                   const FlowState& flow, const TransportState& u_old, double dt);

/// Total solute content capacity * u * measure summed over all subdomains.
double total_content(const MixedDimMesh& mesh, const TransportProperties& props,
                     const Eigen::VectorXd& u_matrix, const Eigen::VectorXd& u_fracture,
                     const std::array<Eigen::VectorXd, 2>& u_layer);

}  // namespace stratum
