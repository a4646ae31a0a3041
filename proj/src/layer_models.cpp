#include "stratum/layer_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stratum {

double thickness_linear(const LayerInputs& in) {
    if (in.Q <= 0.0 || in.u_gamma <= in.delta || in.t <= 0.0) return 0.0;
    const double t_steady =
        in.lambda > 0.0 ? std::log(in.u_gamma / in.delta) / in.lambda
                        : std::numeric_limits<double>::infinity();
    return in.Q / in.phi * std::min(in.t, t_steady);
}

SteadyThickness thickness_nonlinear_steady(const LayerInputs& in) {
    SteadyThickness out;
    if (in.u_gamma < 1.0) {
        out.subsaturated = true;
        return out;
    }
    if (in.Q <= 0.0) return out;
    const double c = (in.u_gamma - 1.0) / (in.u_gamma + 1.0);
    const double arg = c * (2.0 + in.delta) / in.delta;
    if (arg <= 1.0) return out;  // cutoff already satisfied at the fracture wall
    out.thickness = in.Q / (2.0 * in.lambda * in.phi) * std::log(arg);
    return out;
}

double profile_linear(const LayerInputs& in, double s) {
    if (!(in.Q > 0.0)) throw LayerModelError("profile_linear requires Q > 0");
    if (s > in.Q * in.t / in.phi) return 0.0;
    return in.u_gamma * std::exp(-in.lambda * in.phi * s / in.Q);
}

double profile_nonlinear_steady(const LayerInputs& in, double s) {
    if (!(in.Q > 0.0)) throw LayerModelError("profile_nonlinear_steady requires Q > 0");
    const double c = (in.u_gamma - 1.0) / (in.u_gamma + 1.0);
    const double e = std::exp(2.0 * in.lambda * in.phi * s / in.Q);
    const double denom = e - c;
    if (!(denom > 0.0)) throw LayerModelError("profile_nonlinear_steady: nonpositive denominator");
    return (c + e) / denom;
}

std::vector<OracleRecord> oracle_1d(const ReactionModel& model, const LayerInputs& in,
                                    double t_end, OracleOptions opts) {
    if (!(in.Q > 0.0)) throw LayerModelError("oracle_1d requires Q > 0");
    if (opts.n_cells < 1) throw LayerModelError("oracle_1d requires at least one cell");

    const bool precipitation = model.kind == ReactionKind::Precipitation;
    const double cutoff = precipitation ? 1.0 + in.delta : in.delta;

    double length = opts.domain_length;
    if (length <= 0.0) {
        // The cutoff crossing saturates at the closed-form steady thickness;
        // without reaction it rides the material front.
        double steady = 0.0;
        if (precipitation)
            steady = thickness_nonlinear_steady(in).thickness;
        else if (in.lambda > 0.0)
            steady = in.Q / in.phi * std::log(std::max(in.u_gamma / in.delta, 1.0)) / in.lambda;
        const double front = in.Q * t_end / in.phi;
        length = steady > 0.0 ? 3.0 * steady : 1.2 * front;
    }
    if (!(length > 0.0)) throw LayerModelError("oracle_1d domain length is not positive");
    const double ds = length / opts.n_cells;

    double dt = opts.dt;
    if (dt <= 0.0) {
        dt = in.phi * ds / in.Q;  // unit CFL
        if (model.lambda > 0.0) dt = std::min(dt, 0.05 / model.lambda);
    }

    std::vector<double> u(opts.n_cells, 0.0), w(opts.n_cells, 0.0);
    const double cfl = in.Q * dt / (in.phi * ds);

    std::vector<double> record_times = opts.record_times;
    if (record_times.empty()) record_times.push_back(t_end);
    std::sort(record_times.begin(), record_times.end());

    const auto measure = [&]() {
        int last = -1;
        for (int i = 0; i < opts.n_cells; ++i)
            if (u[i] > cutoff) last = i;
        if (last < 0) return 0.0;
        if (last == opts.n_cells - 1)
            throw LayerModelError("oracle_1d domain too short: the reaction front reached its end");
        const double s_last = (last + 0.5) * ds;
        const double drop = u[last] - u[last + 1];
        const double frac = drop > 0.0 ? (u[last] - cutoff) / drop : 0.0;
        return s_last + frac * ds;
    };

    std::vector<OracleRecord> records;
    std::size_t next_record = 0;
    double t = 0.0;
    while (next_record < record_times.size()) {
        if (t >= record_times[next_record] - 1e-14) {
            records.push_back({t, measure()});
            ++next_record;
            continue;
        }
        // Implicit upwind advection: forward substitution along the flow.
        double upstream = in.u_gamma;
        for (int i = 0; i < opts.n_cells; ++i) {
            u[i] = (u[i] + cfl * upstream) / (1.0 + cfl);
            upstream = u[i];
        }
        for (int i = 0; i < opts.n_cells; ++i) {
            const ReactResult r = react_step(model, u[i], w[i], dt);
            u[i] = r.u;
            w[i] = r.w;
        }
        t += dt;
    }
    return records;
}

}  // namespace stratum
