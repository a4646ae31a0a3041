#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "stratum/chemistry.hpp"

namespace stratum {

/// Inputs of the 1D layer-growth models in the direction normal to the
/// fracture. Q is the normal Darcy velocity leaving the fracture (outward
/// positive); u_gamma the fracture solute concentration acting as the
/// boundary value; delta the cutoff offset defining the layer edge.
struct LayerInputs {
    double Q = 0.0;
    double phi = 0.2;
    double lambda = 0.0;
    double delta = 0.1;
    double u_gamma = 0.0;
    double t = 0.0;
};

struct LayerModelError : std::runtime_error {
    explicit LayerModelError(const std::string& what) : std::runtime_error(what) {}
};

/// Layer thickness for linear kinetics: (Q/phi) * min(t, ln(u_gamma/delta)/lambda).
/// Grows linearly until the steady value; 0 when Q <= 0 or u_gamma <= delta.
/// lambda == 0 degenerates to the pure transport front Q t / phi.
double thickness_linear(const LayerInputs& in);

struct SteadyThickness {
    double thickness = 0.0;
    bool subsaturated = false;  // u_gamma < 1: no precipitation layer forms
};

/// Steady layer thickness for the precipitation kinetics r(u) = u^2:
/// Q/(2 lambda phi) * ln(C (2+delta)/delta) with C = (u_gamma-1)/(u_gamma+1),
/// 0 when the cutoff 1+delta is already met at the fracture wall.
SteadyThickness thickness_nonlinear_steady(const LayerInputs& in);

/// Transient profile of the linear model: u_gamma exp(-lambda phi s / Q)
/// behind the advective front s <= Q t / phi, 0 beyond it.
double profile_linear(const LayerInputs& in, double s);

/// Steady profile of the precipitation model:
/// u(s) = (C + E)/(E - C) with E = exp(2 lambda phi s / Q).
double profile_nonlinear_steady(const LayerInputs& in, double s);

struct OracleRecord {
    double time = 0.0;
    double thickness = 0.0;
};

struct OracleOptions {
    int n_cells = 2000;
    double domain_length = 0.0;  // 0: chosen from the closed-form steady thickness
    double dt = 0.0;             // 0: chosen from CFL and reaction scales
    std::vector<double> record_times;  // empty: only t_end
};

/// Independent 1D oracle: first-order upwind advection (implicit Euler) split
/// with the Heun reaction substep, on a uniform grid normal to the fracture.
/// Returns the largest s with u above the cutoff (delta for linear kinetics,
/// 1+delta for precipitation), located by linear interpolation between cell
/// centres, at each requested time.
std::vector<OracleRecord> oracle_1d(const ReactionModel& model, const LayerInputs& in,
                                    double t_end, OracleOptions opts = {});

}  // namespace stratum
