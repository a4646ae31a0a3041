#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <vector>

#include "stratum/chemistry.hpp"
#include "stratum/flow.hpp"
#include "stratum/layer_models.hpp"
#include "stratum/mesh.hpp"
#include "stratum/transport.hpp"

namespace stratum {

struct SplittingError : std::runtime_error {
    explicit SplittingError(const std::string& what) : std::runtime_error(what) {}
};

/// Everything the time loop needs besides the mesh: kinetics, the porosity
/// feedback coefficients, reference geometry/properties for the permeability
/// update, and the transport template (capacities are filled per step).
struct SplittingParams {
    ReactionModel reaction;
    double eta_matrix = 0.0;
    double eta_fracture = 0.0;
    double eta_layer = 0.0;
    double delta = 0.1;
    double eps_mu_floor = 1e-8;
    double u0 = 0.0;
    double w0 = 0.0;
    PermeabilityLaw perm_law = PermeabilityLaw::Quadratic;
    bool porosity_rate_lag = false;  // pair the predicted porosity with level n-1 instead of n
    GeometryFields fields0;          // reference geometry (phi0, eps0)
    FlowProperties props0;           // reference permeabilities, sources, boundary data
    TransportProperties transport0;  // diffusivities, solute boundary data, upwind weight
};

struct SimulationState {
    int step = 0;
    double time = 0.0;

    Eigen::VectorXd u_matrix, w_matrix, w_matrix_prev, phi_matrix, phi_matrix_prev;
    Eigen::VectorXd u_fracture, w_fracture, w_fracture_prev, eps_gamma, eps_gamma_prev;
    std::array<Eigen::VectorXd, 2> u_layer, w_layer, w_layer_prev, phi_layer, phi_layer_prev;
    std::array<Eigen::VectorXd, 2> eps_mu;  // layer thickness from the growth model

    FlowState flow;
    TransportState transport;

    long clamp_events = 0;
    long floor_hits = 0;
};

/// Balance bookkeeping of one step. The conserved identity is
/// content_after = content_before + boundary_influx * dt + clamp_gain.
struct StepReport {
    int step = 0;
    double time = 0.0;
    double content_before = 0.0;
    double content_after = 0.0;
    double boundary_influx = 0.0;
    double clamp_gain = 0.0;
    long clamp_events = 0;
    double flow_residual = 0.0;
};

/// w* = max(0, 2 w^n - w^{n-1}); clamp events are counted.
Eigen::VectorXd extrapolate_w(const Eigen::VectorXd& w, const Eigen::VectorXd& w_prev,
                              long& clamp_events);

/// phi* = phi^n / (1 + eta (w* - w^n)), entrywise; throws naming the entry if
/// a denominator is not positive.
Eigen::VectorXd predict_geometry(const Eigen::VectorXd& value, double eta,
                                 const Eigen::VectorXd& w_star, const Eigen::VectorXd& w,
                                 const char* what);

/// Multiply concentrations by capacity_old/capacity_new entrywise, so that
/// capacity * concentration is invariant.
Eigen::VectorXd rescale_concentrations(const Eigen::VectorXd& fields,
                                       const Eigen::VectorXd& capacity_old,
                                       const Eigen::VectorXd& capacity_new);

SimulationState make_initial_state(const MixedDimMesh& mesh, const SplittingParams& params);

/// One full splitting step: extrapolation, geometry prediction, permeability
/// update, flow solve, advection-diffusion, precipitate rescale, reaction,
/// geometry correction plus layer-thickness update, final rescale.
StepReport advance(SimulationState& state, const MixedDimMesh& mesh,
                   const SplittingParams& params, double dt);

struct Problem {
    MixedDimMesh mesh;
    SplittingParams params;
    double t_final = 0.0;
    int n_steps = 0;
};

struct RunResult {
    SimulationState state;
    std::vector<StepReport> reports;
};

using OutputHook = std::function<void(const SimulationState&, const MixedDimMesh&)>;

/// Uniform time grid driver; on_output fires at the initial state, every
/// `output_interval` steps (if nonzero) and at the final state.
RunResult run(const Problem& problem, int output_interval = 0, const OutputHook& on_output = {});

}  // namespace stratum
