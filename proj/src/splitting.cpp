#include "stratum/splitting.hpp"

#include <algorithm>
#include <cmath>

namespace stratum {

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd from_std(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

Eigen::VectorXd extrapolate_w(const Eigen::VectorXd& w, const Eigen::VectorXd& w_prev,
                              long& clamp_events) {
    Eigen::VectorXd w_star(w.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        const double raw = 2.0 * w[i] - w_prev[i];
        if (raw < 0.0) {
            w_star[i] = 0.0;
            ++clamp_events;
        } else {
            w_star[i] = raw;
        }
    }
    return w_star;
}

Eigen::VectorXd predict_geometry(const Eigen::VectorXd& value, double eta,
                                 const Eigen::VectorXd& w_star, const Eigen::VectorXd& w,
                                 const char* what) {
    Eigen::VectorXd out(value.size());
    for (Eigen::Index i = 0; i < value.size(); ++i) {
        const double denom = 1.0 + eta * (w_star[i] - w[i]);
        if (!(denom > 0.0))
            throw SplittingError(std::string("geometry update denominator is not positive in ") +
                                 what + " " + std::to_string(i));
        out[i] = value[i] / denom;
    }
    return out;
}

Eigen::VectorXd rescale_concentrations(const Eigen::VectorXd& fields,
                                       const Eigen::VectorXd& capacity_old,
                                       const Eigen::VectorXd& capacity_new) {
    Eigen::VectorXd out(fields.size());
    for (Eigen::Index i = 0; i < fields.size(); ++i) {
        if (!(capacity_old[i] > 0.0) || !(capacity_new[i] > 0.0))
            throw SplittingError("rescale_concentrations requires positive capacities (entry " +
                                 std::to_string(i) + ")");
        out[i] = fields[i] * capacity_old[i] / capacity_new[i];
    }
    return out;
}

SimulationState make_initial_state(const MixedDimMesh& mesh, const SplittingParams& params) {
    SimulationState st;
    const int nc = mesh.matrix.num_cells();
    const int ng = mesh.fracture.num_segments();
    const bool multilayer = mesh.mode == MeshMode::Multilayer && mesh.has_fracture();

    st.u_matrix = Eigen::VectorXd::Constant(nc, params.u0);
    st.w_matrix = Eigen::VectorXd::Constant(nc, params.w0);
    st.w_matrix_prev = st.w_matrix;
    st.phi_matrix = from_std(params.fields0.phi_matrix);
    st.phi_matrix_prev = st.phi_matrix;

    st.u_fracture = Eigen::VectorXd::Constant(ng, params.u0);
    st.w_fracture = Eigen::VectorXd::Constant(ng, params.w0);
    st.w_fracture_prev = st.w_fracture;
    st.eps_gamma = from_std(params.fields0.eps_gamma);
    st.eps_gamma_prev = st.eps_gamma;

    for (int side = 0; side < 2; ++side) {
        const int nl = multilayer ? ng : 0;
        st.u_layer[side] = Eigen::VectorXd::Constant(nl, params.u0);
        st.w_layer[side] = Eigen::VectorXd::Constant(nl, params.w0);
        st.w_layer_prev[side] = st.w_layer[side];
        st.phi_layer[side] = from_std(params.fields0.phi_layer[side]);
        st.phi_layer_prev[side] = st.phi_layer[side];
        st.eps_mu[side] = Eigen::VectorXd::Constant(nl, params.eps_mu_floor);
    }
    st.transport = make_transport_state(mesh, params.u0);
    return st;
}

StepReport advance(SimulationState& state, const MixedDimMesh& mesh,
                   const SplittingParams& params, double dt) {
    if (!(dt > 0.0)) throw SplittingError("advance requires dt > 0");
    const int ng = mesh.fracture.num_segments();
    const bool multilayer = mesh.mode == MeshMode::Multilayer && mesh.has_fracture();
    StepReport report;
    report.step = state.step + 1;

    const auto annotate = [&](int step_no, const std::exception& e) {
        throw SplittingError("step " + std::to_string(report.step) + ", splitting stage " +
                             std::to_string(step_no) + ": " + e.what());
    };

    // (1) precipitate extrapolation
    Eigen::VectorXd wsm, wsg;
    std::array<Eigen::VectorXd, 2> wsl;
    wsm = extrapolate_w(state.w_matrix, state.w_matrix_prev, state.clamp_events);
    wsg = extrapolate_w(state.w_fracture, state.w_fracture_prev, state.clamp_events);
    for (int side = 0; side < 2; ++side)
        wsl[side] = extrapolate_w(state.w_layer[side], state.w_layer_prev[side],
                                  state.clamp_events);

    // (2) porosity and aperture prediction (the layer thickness has no
    // differential model and is not predicted)
    Eigen::VectorXd phi_star, eps_star;
    std::array<Eigen::VectorXd, 2> phi_l_star;
    try {
        phi_star = predict_geometry(state.phi_matrix, params.eta_matrix, wsm, state.w_matrix,
                                    "matrix cell");
        eps_star = predict_geometry(state.eps_gamma, params.eta_fracture, wsg, state.w_fracture,
                                    "fracture segment");
        for (int side = 0; side < 2; ++side)
            phi_l_star[side] = predict_geometry(state.phi_layer[side], params.eta_layer, wsl[side],
                                                state.w_layer[side], "layer segment");
    } catch (const std::exception& e) {
        annotate(2, e);
    }

    // (3) permeability update; the flow problem sees the layers at their
    // reference thickness (the growth model is diagnostic, so the flow field
    // stays fixed when all eta vanish)
    GeometryFields fields;
    fields.phi_matrix = to_std(phi_star);
    fields.eps_gamma = to_std(eps_star);
    for (int side = 0; side < 2; ++side) {
        fields.phi_layer[side] = to_std(phi_l_star[side]);
        fields.eps_mu[side] = params.fields0.eps_mu[side];
    }
    FlowProperties props;
    try {
        props = update_permeability(fields, params.fields0, params.props0, params.perm_law);
    } catch (const std::exception& e) {
        annotate(3, e);
    }

    // (4) Darcy solve with the predicted geometry change as fixed sources
    GeometryRates rates;
    rates.matrix.resize(state.phi_matrix.size());
    const Eigen::VectorXd& phi_lag =
        params.porosity_rate_lag ? state.phi_matrix_prev : state.phi_matrix;
    for (Eigen::Index c = 0; c < state.phi_matrix.size(); ++c)
        rates.matrix[c] = (phi_star[c] - phi_lag[c]) / dt;
    rates.fracture.resize(ng);
    const Eigen::VectorXd& eps_lag =
        params.porosity_rate_lag ? state.eps_gamma_prev : state.eps_gamma;
    for (int j = 0; j < ng; ++j) rates.fracture[j] = (eps_star[j] - eps_lag[j]) / dt;
    for (int side = 0; side < 2; ++side) {
        rates.layer[side].resize(phi_l_star[side].size());
        const Eigen::VectorXd& phi_l_lag =
            params.porosity_rate_lag ? state.phi_layer_prev[side] : state.phi_layer[side];
        for (Eigen::Index j = 0; j < phi_l_star[side].size(); ++j)
            rates.layer[side][j] =
                params.fields0.eps_mu[side][j] * (phi_l_star[side][j] - phi_l_lag[j]) / dt;
    }
    try {
        state.flow = assemble_and_solve(mesh, props, rates);
    } catch (const std::exception& e) {
        annotate(4, e);
    }
    report.flow_residual = state.flow.residual;

    // (5) advection-diffusion of the solute, capacities frozen at the
    // predicted geometry
    TransportProperties tprops = params.transport0;
    tprops.capacity_matrix = to_std(phi_star);
    tprops.capacity_fracture = to_std(eps_star);
    tprops.eps_gamma = to_std(eps_star);
    for (int side = 0; side < 2; ++side) {
        tprops.capacity_layer[side].resize(phi_l_star[side].size());
        for (Eigen::Index j = 0; j < phi_l_star[side].size(); ++j)
            tprops.capacity_layer[side][j] =
                params.fields0.eps_mu[side][j] * phi_l_star[side][j];
        tprops.eps_mu[side] = params.fields0.eps_mu[side];
    }
    TransportState u_old = state.transport;
    u_old.u_matrix = state.u_matrix;
    u_old.u_fracture = state.u_fracture;
    u_old.u_layer = state.u_layer;
    TransportState mid;
    try {
        mid = advect_diffuse_step(mesh, tprops, state.flow, u_old, dt);
    } catch (const std::exception& e) {
        annotate(5, e);
    }
    report.boundary_influx = mid.boundary_influx;

    // content entering the step: the solute is measured against the predicted
    // capacity (the transport solve pre-accounts the volume change), the
    // precipitate against the current one
    report.content_before =
        total_content(mesh, tprops, state.u_matrix, state.u_fracture, state.u_layer);
    {
        TransportProperties cap_n = tprops;
        cap_n.capacity_matrix = to_std(state.phi_matrix);
        cap_n.capacity_fracture = to_std(state.eps_gamma);
        for (int side = 0; side < 2; ++side)
            for (Eigen::Index j = 0; j < state.phi_layer[side].size(); ++j)
                cap_n.capacity_layer[side][j] =
                    params.fields0.eps_mu[side][j] * state.phi_layer[side][j];
        report.content_before +=
            total_content(mesh, cap_n, state.w_matrix, state.w_fracture, state.w_layer);
    }

    // (6) rescale the precipitate onto the predicted capacity
    Eigen::VectorXd w_mid_m = rescale_concentrations(state.w_matrix, state.phi_matrix, phi_star);
    Eigen::VectorXd w_mid_g = rescale_concentrations(state.w_fracture, state.eps_gamma, eps_star);
    std::array<Eigen::VectorXd, 2> w_mid_l;
    for (int side = 0; side < 2; ++side)
        w_mid_l[side] = rescale_concentrations(state.w_layer[side], state.phi_layer[side],
                                               phi_l_star[side]);

    // (7) pointwise reaction substep
    const long clamps_before = state.clamp_events;
    double clamp_gain = 0.0;
    const auto react_field = [&](Eigen::VectorXd& u, Eigen::VectorXd& w,
                                 const std::vector<double>& cap, const double* measure,
                                 auto measure_at) {
        for (Eigen::Index i = 0; i < u.size(); ++i) {
            const double sum_in = u[i] + w[i];
            const ReactResult r = react_step(params.reaction, u[i], w[i], dt);
            if (r.clamped) {
                ++state.clamp_events;
                clamp_gain += cap[i] * measure_at(i) * (r.u + r.w - sum_in);
            }
            u[i] = r.u;
            w[i] = r.w;
        }
        (void)measure;
    };
    Eigen::VectorXd u_ss_m = mid.u_matrix, u_ss_g = mid.u_fracture;
    std::array<Eigen::VectorXd, 2> u_ss_l = mid.u_layer;
    try {
        react_field(u_ss_m, w_mid_m, tprops.capacity_matrix, nullptr,
                    [&](Eigen::Index i) { return mesh.matrix.cell_volumes[i]; });
        react_field(u_ss_g, w_mid_g, tprops.capacity_fracture, nullptr,
                    [&](Eigen::Index i) { return mesh.fracture.lengths[i]; });
        for (int side = 0; side < 2; ++side)
            react_field(u_ss_l[side], w_mid_l[side], tprops.capacity_layer[side], nullptr,
                        [&, side](Eigen::Index i) { return mesh.layers[side].lengths[i]; });
    } catch (const std::exception& e) {
        annotate(7, e);
    }
    report.clamp_events = state.clamp_events - clamps_before;
    report.clamp_gain = clamp_gain;

    // (8) final geometry update with the reacted precipitate, plus the
    // layer-thickness growth model driven by the mortar outflow
    Eigen::VectorXd phi_new, eps_new;
    std::array<Eigen::VectorXd, 2> phi_l_new;
    try {
        phi_new =
            predict_geometry(state.phi_matrix, params.eta_matrix, w_mid_m, state.w_matrix,
                             "matrix cell");
        eps_new = predict_geometry(state.eps_gamma, params.eta_fracture, w_mid_g,
                                   state.w_fracture, "fracture segment");
        for (int side = 0; side < 2; ++side)
            phi_l_new[side] = predict_geometry(state.phi_layer[side], params.eta_layer,
                                               w_mid_l[side], state.w_layer[side],
                                               "layer segment");
    } catch (const std::exception& e) {
        annotate(8, e);
    }
    const double t_new = state.time + dt;
    if (multilayer)
        for (int side = 0; side < 2; ++side)
            for (int j = 0; j < ng; ++j) {
                const double len = mesh.fracture.lengths[j];
                const double q_out = (side == side_index(Side::Plus) ? 1.0 : -1.0) *
                                     state.flow.q_Gamma[side][j] / len;
                LayerInputs li;
                li.Q = q_out;
                li.phi = phi_l_star[side][j];
                li.lambda = params.reaction.lambda;
                li.delta = params.delta;
                li.u_gamma = u_ss_g[j];
                li.t = t_new;
                double candidate = state.eps_mu[side][j];
                if (q_out > 0.0 && u_ss_g[j] > params.delta)
                    candidate = std::max(candidate, thickness_linear(li));
                const double updated = std::max(candidate, params.eps_mu_floor);
                if (updated == params.eps_mu_floor) ++state.floor_hits;
                state.eps_mu[side][j] = updated;
            }

    // (9) rescale the concentrations onto the corrected geometry and advance
    // the precipitate history
    state.u_matrix = rescale_concentrations(u_ss_m, phi_star, phi_new);
    state.w_matrix_prev = state.w_matrix;
    state.w_matrix = rescale_concentrations(w_mid_m, phi_star, phi_new);
    state.u_fracture = rescale_concentrations(u_ss_g, eps_star, eps_new);
    state.w_fracture_prev = state.w_fracture;
    state.w_fracture = rescale_concentrations(w_mid_g, eps_star, eps_new);
    for (int side = 0; side < 2; ++side) {
        state.u_layer[side] = rescale_concentrations(u_ss_l[side], phi_l_star[side],
                                                     phi_l_new[side]);
        state.w_layer_prev[side] = state.w_layer[side];
        state.w_layer[side] = rescale_concentrations(w_mid_l[side], phi_l_star[side],
                                                     phi_l_new[side]);
    }
    state.phi_matrix_prev = state.phi_matrix;
    state.phi_matrix = phi_new;
    state.eps_gamma_prev = state.eps_gamma;
    state.eps_gamma = eps_new;
    for (int side = 0; side < 2; ++side) {
        state.phi_layer_prev[side] = state.phi_layer[side];
        state.phi_layer[side] = phi_l_new[side];
    }
    state.transport = mid;
    state.transport.u_matrix = state.u_matrix;
    state.transport.u_fracture = state.u_fracture;
    state.transport.u_layer = state.u_layer;
    state.step += 1;
    state.time = t_new;
    report.time = state.time;

    // content leaving the step, measured against the corrected capacities
    TransportProperties cap_new = tprops;
    cap_new.capacity_matrix = to_std(phi_new);
    cap_new.capacity_fracture = to_std(eps_new);
    for (int side = 0; side < 2; ++side)
        for (Eigen::Index j = 0; j < phi_l_new[side].size(); ++j)
            cap_new.capacity_layer[side][j] =
                params.fields0.eps_mu[side][j] * phi_l_new[side][j];
    report.content_after =
        total_content(mesh, cap_new, state.u_matrix, state.u_fracture, state.u_layer) +
        total_content(mesh, cap_new, state.w_matrix, state.w_fracture, state.w_layer);
    return report;
}

RunResult run(const Problem& problem, int output_interval, const OutputHook& on_output) {
    RunResult result;
    result.state = make_initial_state(problem.mesh, problem.params);
    if (on_output) on_output(result.state, problem.mesh);
    if (problem.n_steps < 1) return result;
    const double dt = problem.t_final / problem.n_steps;
    for (int n = 0; n < problem.n_steps; ++n) {
        result.reports.push_back(advance(result.state, problem.mesh, problem.params, dt));
        const bool due = output_interval > 0 && (n + 1) % output_interval == 0;
        if (on_output && (due || n + 1 == problem.n_steps)) on_output(result.state, problem.mesh);
    }
    return result;
}

}  // namespace stratum
