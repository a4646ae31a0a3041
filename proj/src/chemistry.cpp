#include "stratum/chemistry.hpp"

#include <algorithm>
#include <cmath>

namespace stratum {

double rate(const ReactionModel& model, double u, double w) {
    if (u < 0.0 || w < 0.0)
        throw ChemistryError("reaction rate called with a negative concentration (u=" +
                             std::to_string(u) + ", w=" + std::to_string(w) + ")");
    if (model.kind == ReactionKind::Linear) return model.lambda * u;
    const double r = model.rate_fn == RateFunction::Identity ? u : u * u;
    const double h = model.heaviside == HeavisideKind::Step ? (w > 0.0 ? 1.0 : 0.0)
                                                            : std::max(0.0, w);
    return model.lambda * (std::max(r - 1.0, 0.0) + h * std::min(r - 1.0, 0.0));
}

ReactResult react_step(const ReactionModel& model, double u, double w, double dt) {
    if (!(dt > 0.0)) throw ChemistryError("reaction step requires dt > 0");
    const double k1 = rate(model, u, w);
    const double u_pred = u - dt * k1;
    const double w_pred = w + dt * k1;
    const double k2 = rate(model, std::max(0.0, u_pred), std::max(0.0, w_pred));
    const double incr = 0.5 * dt * (k1 + k2);

    ReactResult out;
    out.u = u - incr;
    out.w = w + incr;
    if (out.u < 0.0) {
        out.u = 0.0;
        out.clamped = true;
    }
    if (out.w < 0.0) {
        out.w = 0.0;
        out.clamped = true;
    }
    return out;
}

}  // namespace stratum
