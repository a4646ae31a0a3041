#pragma once

#include <stdexcept>
#include <string>

namespace stratum {

enum class ReactionKind { Linear, Precipitation };
enum class RateFunction { Identity, Square };  // r(u) = u or u^2
enum class HeavisideKind { Step, Ramp };       // H(w) = 1_{w>0} or max(0, w)

/// Kinetic law for the solute/precipitate pair. The equilibrium concentration
/// of the precipitation model is 1 in this dimensionless setting.
struct ReactionModel {
    ReactionKind kind = ReactionKind::Linear;
    RateFunction rate_fn = RateFunction::Identity;
    HeavisideKind heaviside = HeavisideKind::Step;
    double lambda = 0.0;
};

struct ChemistryError : std::runtime_error {
    explicit ChemistryError(const std::string& what) : std::runtime_error(what) {}
};

/// Reaction rate r_w(u, w): linear lambda*u, or the precipitation law
/// lambda*(max(r(u)-1, 0) + H(w)*min(r(u)-1, 0)).
double rate(const ReactionModel& model, double u, double w);

struct ReactResult {
    double u = 0.0;
    double w = 0.0;
    bool clamped = false;  // a negative concentration was clamped to zero
};

/// One Heun (explicit trapezoid) step of du/dt = -r_w, dw/dt = +r_w.
/// u + w is conserved exactly unless the clamp fires; the clamped mass is
/// credited to no species and only reported through `clamped`.
ReactResult react_step(const ReactionModel& model, double u, double w, double dt);

}  // namespace stratum
