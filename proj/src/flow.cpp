#include "stratum/flow.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>

#include "stratum/transport.hpp"  // tpfa_transmissibility

namespace stratum {

namespace {

using Triplet = Eigen::Triplet<double>;

double value_or_zero(const std::vector<double>& v, int i) {
    return v.empty() ? 0.0 : v[i];
}

/// Local RT0 mass matrix of one triangle, for total-flux degrees of freedom.
/// Basis w_f = sigma_f (x - v_f) / (2A) with v_f the vertex opposite face f.
std::array<std::array<double, 3>, 3> rt0_local_mass(const TriangleMesh& m, int c, double k_cell) {
    const auto& tri = m.cells[c];
    const Vec2 v[3] = {m.nodes[tri[0]], m.nodes[tri[1]], m.nodes[tri[2]]};
    // Face e connects vertices e,(e+1); the opposite vertex is (e+2).
    const Vec2 opp[3] = {v[2], v[0], v[1]};
    const Vec2 mid[3] = {(v[0] + v[1]) * 0.5, (v[1] + v[2]) * 0.5, (v[2] + v[0]) * 0.5};
    const double area = m.cell_volumes[c];
    std::array<std::array<double, 3>, 3> mat{};
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            double quad = 0.0;
            for (const Vec2& q : mid) quad += (q - opp[a]).dot(q - opp[b]);
            quad *= area / 3.0;
            mat[a][b] = m.cell_face_sign[c][a] * m.cell_face_sign[c][b] * quad /
                        (4.0 * area * area * k_cell);
        }
    return mat;
}

struct Layout {
    int nf = 0, nc = 0, ng = 0;
    bool multilayer = false;
    int q(int f) const { return f; }
    int pm(int c) const { return nf + c; }
    int pg(int j) const { return nf + nc + j; }
    int pl(int side, int j) const { return nf + nc + ng + side * ng + j; }
    int size() const { return nf + nc + ng + (multilayer ? 2 * ng : 0); }
};

Layout make_layout(const MixedDimMesh& mesh) {
    Layout lay;
    lay.nf = mesh.matrix.num_faces();
    lay.nc = mesh.matrix.num_cells();
    lay.ng = mesh.fracture.num_segments();
    lay.multilayer = mesh.mode == MeshMode::Multilayer && mesh.has_fracture();
    return lay;
}

/// Interface resistance eps / k_normal of the crossed thin domain.
double wall_resistance(const MixedDimMesh& mesh, const FlowProperties& props, Side side, int j) {
    if (mesh.mode == MeshMode::Multilayer)
        return props.eps_mu[side_index(side)][j] / props.k_layer_nrm[side_index(side)][j];
    return props.eps_gamma[j] / props.k_frac_nrm[j];
}

void check_properties(const MixedDimMesh& mesh, const FlowProperties& props) {
    const int nc = mesh.matrix.num_cells();
    const int ng = mesh.fracture.num_segments();
    if (static_cast<int>(props.k_matrix.size()) != nc)
        throw FlowError("k_matrix size does not match the mesh cell count");
    for (int c = 0; c < nc; ++c)
        if (!(props.k_matrix[c] > 0.0))
            throw FlowError("matrix permeability is not positive in cell " + std::to_string(c));
    if (!mesh.has_fracture()) return;
    if (static_cast<int>(props.k_frac_tan.size()) != ng ||
        static_cast<int>(props.k_frac_nrm.size()) != ng ||
        static_cast<int>(props.eps_gamma.size()) != ng)
        throw FlowError("fracture property arrays do not match the segment count");
    for (int j = 0; j < ng; ++j)
        if (!(props.k_frac_tan[j] > 0.0) || !(props.k_frac_nrm[j] > 0.0) ||
            !(props.eps_gamma[j] > 0.0))
            throw FlowError("fracture permeability or aperture is not positive in segment " +
                            std::to_string(j));
    if (mesh.mode == MeshMode::Multilayer)
        for (int side = 0; side < 2; ++side) {
            if (static_cast<int>(props.k_layer_tan[side].size()) != ng ||
                static_cast<int>(props.k_layer_nrm[side].size()) != ng ||
                static_cast<int>(props.eps_mu[side].size()) != ng)
                throw FlowError("layer property arrays do not match the segment count");
            for (int j = 0; j < ng; ++j)
                if (!(props.k_layer_tan[side][j] > 0.0) || !(props.k_layer_nrm[side][j] > 0.0) ||
                    !(props.eps_mu[side][j] > 0.0))
                    throw FlowError("layer permeability or thickness is not positive in segment " +
                                    std::to_string(j));
        }
}

bool has_pressure_condition(const MixedDimMesh& mesh, const FlowProperties& props) {
    for (const Face& f : mesh.matrix.faces) {
        if (f.cell_out != -1) continue;
        if (f.tag == BoundaryTag::SlitPlus || f.tag == BoundaryTag::SlitMinus) continue;
        if (props.boundary.of(f.tag).kind == BcKind::Pressure) return true;
    }
    if (mesh.has_fracture()) {
        for (const EndCondition& e : props.fracture_end)
            if (e.kind == BcKind::Pressure) return true;
        if (mesh.mode == MeshMode::Multilayer)
            for (const auto& ends : props.layer_end)
                for (const EndCondition& e : ends)
                    if (e.kind == BcKind::Pressure) return true;
    }
    return false;
}

/// Tangential two-point rows of a 1D subdomain; conductance = eps*k per segment.
void assemble_tangential(const LowerDimGrid& g, const std::vector<double>& conductance,
                         const std::array<EndCondition, 2>& ends, int row0,
                         std::vector<Triplet>& trips, Eigen::VectorXd& rhs) {
    const int ns = g.num_segments();
    for (int v = 1; v < ns; ++v) {
        const double t = tpfa_transmissibility(conductance[v - 1], conductance[v],
                                               0.5 * g.lengths[v - 1], 0.5 * g.lengths[v], 1.0);
        trips.emplace_back(row0 + v - 1, row0 + v - 1, t);
        trips.emplace_back(row0 + v - 1, row0 + v, -t);
        trips.emplace_back(row0 + v, row0 + v, t);
        trips.emplace_back(row0 + v, row0 + v - 1, -t);
    }
    if (ends[0].kind == BcKind::Pressure) {
        const double t = conductance[0] / (0.5 * g.lengths[0]);
        trips.emplace_back(row0, row0, t);
        rhs[row0] += t * ends[0].value;
    } else {
        rhs[row0] += ends[0].value;
    }
    if (ends[1].kind == BcKind::Pressure) {
        const double t = conductance[ns - 1] / (0.5 * g.lengths[ns - 1]);
        trips.emplace_back(row0 + ns - 1, row0 + ns - 1, t);
        rhs[row0 + ns - 1] += t * ends[1].value;
    } else {
        rhs[row0 + ns - 1] += ends[1].value;
    }
}

/// Tangential vertex fluxes of a solved 1D subdomain, oriented with the arc.
Eigen::VectorXd recover_vertex_flux(const LowerDimGrid& g, const std::vector<double>& conductance,
                                    const std::array<EndCondition, 2>& ends,
                                    const Eigen::VectorXd& p) {
    const int ns = g.num_segments();
    Eigen::VectorXd q(ns + 1);
    for (int v = 1; v < ns; ++v) {
        const double t = tpfa_transmissibility(conductance[v - 1], conductance[v],
                                               0.5 * g.lengths[v - 1], 0.5 * g.lengths[v], 1.0);
        q[v] = t * (p[v - 1] - p[v]);
    }
    q[0] = ends[0].kind == BcKind::Pressure
               ? conductance[0] / (0.5 * g.lengths[0]) * (ends[0].value - p[0])
               : ends[0].value;
    q[ns] = ends[1].kind == BcKind::Pressure
                ? conductance[ns - 1] / (0.5 * g.lengths[ns - 1]) * (p[ns - 1] - ends[1].value)
                : -ends[1].value;
    return q;
}

std::vector<double> tangential_conductance(const std::vector<double>& eps,
                                           const std::vector<double>& k_tan) {
    std::vector<double> c(eps.size());
    for (std::size_t j = 0; j < eps.size(); ++j) c[j] = eps[j] * k_tan[j];
    return c;
}

}  // namespace

const BoundaryCondition& MatrixBoundary::of(BoundaryTag tag) const {
    switch (tag) {
        case BoundaryTag::Inflow: return inflow;
        case BoundaryTag::Outflow: return outflow;
        default: return noflow;
    }
}

FlowProperties update_permeability(const GeometryFields& fields, const GeometryFields& fields0,
                                   const FlowProperties& props0, PermeabilityLaw law) {
    const double expo = law == PermeabilityLaw::Quadratic ? 2.0 : 3.0;
    FlowProperties props = props0;

    const auto scale = [expo](double ref, double cur, double ref0, const char* what, int i) {
        if (!(cur > 0.0))
            throw FlowError(std::string(what) + " " + std::to_string(i) + " is not positive");
        return ref * std::pow(cur / ref0, expo);
    };

    for (std::size_t c = 0; c < fields.phi_matrix.size(); ++c)
        props.k_matrix[c] = scale(props0.k_matrix[c], fields.phi_matrix[c],
                                  fields0.phi_matrix[c], "porosity of matrix cell", c);
    for (std::size_t j = 0; j < fields.eps_gamma.size(); ++j) {
        props.k_frac_tan[j] = scale(props0.k_frac_tan[j], fields.eps_gamma[j],
                                    fields0.eps_gamma[j], "aperture of fracture segment", j);
        props.k_frac_nrm[j] = scale(props0.k_frac_nrm[j], fields.eps_gamma[j],
                                    fields0.eps_gamma[j], "aperture of fracture segment", j);
    }
    for (int side = 0; side < 2; ++side)
        for (std::size_t j = 0; j < fields.phi_layer[side].size(); ++j) {
            props.k_layer_tan[side][j] =
                scale(props0.k_layer_tan[side][j], fields.phi_layer[side][j],
                      fields0.phi_layer[side][j], "porosity of layer segment", j);
            props.k_layer_nrm[side][j] =
                scale(props0.k_layer_nrm[side][j], fields.phi_layer[side][j],
                      fields0.phi_layer[side][j], "porosity of layer segment", j);
        }
    props.eps_gamma = fields.eps_gamma;
    props.eps_mu = fields.eps_mu;
    return props;
}

FlowState assemble_and_solve(const MixedDimMesh& mesh, const FlowProperties& props,
                             const GeometryRates& rates) {
    const TriangleMesh& m = mesh.matrix;
    check_properties(mesh, props);
    if (!has_pressure_condition(mesh, props))
        throw FlowError(
            "singular flow system: no pressure boundary condition is set on any subdomain");

    const Layout lay = make_layout(mesh);
    std::vector<Triplet> trips;
    trips.reserve(16 * lay.size());
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(lay.size());

    // Mortar wall bookkeeping: wall_of[f] = (side, pair j), valid for slit faces.
    std::vector<int> wall_side(m.num_faces(), -1), wall_pair(m.num_faces(), -1);
    for (int side = 0; side < 2; ++side)
        for (int j = 0; j < mesh.maps_M[side].size(); ++j) {
            const InterfacePair& pr = mesh.maps_M[side].pairs[j];
            wall_side[pr.other] = side;
            wall_pair[pr.other] = pr.lower;
        }

    // Momentum rows (one per matrix face).
    std::vector<std::array<std::array<double, 3>, 3>> local_mass(m.num_cells());
    for (int c = 0; c < m.num_cells(); ++c) local_mass[c] = rt0_local_mass(m, c, props.k_matrix[c]);

    for (int f = 0; f < m.num_faces(); ++f) {
        const Face& face = m.faces[f];
        const bool boundary = face.cell_out == -1;
        const bool slit = wall_pair[f] >= 0;
        if (boundary && !slit && props.boundary.of(face.tag).kind == BcKind::Flux) {
            const int c = face.cell_in;
            trips.emplace_back(lay.q(f), lay.q(f), static_cast<double>(m.sign(c, f)));
            rhs[lay.q(f)] += props.boundary.of(face.tag).value * face.area;
            continue;
        }
        for (const int c : {face.cell_in, face.cell_out}) {
            if (c == -1) continue;
            const auto& mk = local_mass[c];
            int local_f = -1;
            for (int e = 0; e < 3; ++e)
                if (m.cell_faces[c][e] == f) local_f = e;
            for (int e = 0; e < 3; ++e)
                trips.emplace_back(lay.q(f), lay.q(m.cell_faces[c][e]), mk[local_f][e]);
            trips.emplace_back(lay.q(f), lay.pm(c), -static_cast<double>(m.sign(c, f)));
        }
        if (slit) {
            const int side = wall_side[f];
            const int j = wall_pair[f];
            const double sigma = m.sign(face.cell_in, f);
            const double len = mesh.fracture.lengths[j];
            const double r_half = 0.5 * wall_resistance(mesh, props, static_cast<Side>(side), j);
            trips.emplace_back(lay.q(f), lay.q(f), r_half / len);
            const int p_low = lay.multilayer ? lay.pl(side, j) : lay.pg(j);
            trips.emplace_back(lay.q(f), p_low, sigma);
        } else if (boundary) {
            rhs[lay.q(f)] -= m.sign(face.cell_in, f) * props.boundary.of(face.tag).value;
        }
    }

    // Matrix mass balance rows.
    for (int c = 0; c < m.num_cells(); ++c) {
        for (int e = 0; e < 3; ++e)
            trips.emplace_back(lay.pm(c), lay.q(m.cell_faces[c][e]),
                               static_cast<double>(m.cell_face_sign[c][e]));
        rhs[lay.pm(c)] -= m.cell_volumes[c] *
                          (value_or_zero(rates.matrix, c) + value_or_zero(props.source_matrix, c));
    }

    if (mesh.has_fracture()) {
        const int ng = lay.ng;
        assemble_tangential(mesh.fracture, tangential_conductance(props.eps_gamma, props.k_frac_tan),
                            props.fracture_end, lay.pg(0), trips, rhs);
        for (int j = 0; j < ng; ++j)
            rhs[lay.pg(j)] -= mesh.fracture.lengths[j] * (value_or_zero(rates.fracture, j) +
                                                          value_or_zero(props.source_fracture, j));

        // Wall flux into the lower-dimensional side of each M pair.
        for (int side = 0; side < 2; ++side)
            for (const InterfacePair& pr : mesh.maps_M[side].pairs) {
                const Face& face = m.faces[pr.other];
                const double sigma = m.sign(face.cell_in, pr.other);
                const int row = lay.multilayer ? lay.pl(side, pr.lower) : lay.pg(pr.lower);
                trips.emplace_back(row, lay.q(pr.other), -sigma);
            }

        if (lay.multilayer) {
            for (int side = 0; side < 2; ++side) {
                assemble_tangential(
                    mesh.layers[side],
                    tangential_conductance(props.eps_mu[side], props.k_layer_tan[side]),
                    props.layer_end[side], lay.pl(side, 0), trips, rhs);
                for (int j = 0; j < ng; ++j)
                    rhs[lay.pl(side, j)] -=
                        mesh.layers[side].lengths[j] * (value_or_zero(rates.layer[side], j) +
                                                        value_or_zero(props.source_layer[side], j));
            }
            // Gamma mortars, eliminated: series resistance of the two half-domains.
            for (int j = 0; j < ng; ++j) {
                const double len = mesh.fracture.lengths[j];
                const double r_g = props.eps_gamma[j] / props.k_frac_nrm[j];
                for (int side = 0; side < 2; ++side) {
                    const double r_mu = props.eps_mu[side][j] / props.k_layer_nrm[side][j];
                    const double t = len / (0.5 * (r_mu + r_g));
                    trips.emplace_back(lay.pg(j), lay.pg(j), t);
                    trips.emplace_back(lay.pg(j), lay.pl(side, j), -t);
                    trips.emplace_back(lay.pl(side, j), lay.pl(side, j), t);
                    trips.emplace_back(lay.pl(side, j), lay.pg(j), -t);
                }
            }
        }
    }

    Eigen::SparseMatrix<double> a(lay.size(), lay.size());
    a.setFromTriplets(trips.begin(), trips.end());
    a.makeCompressed();

    Eigen::SparseLU<Eigen::SparseMatrix<double>> solver;
    solver.analyzePattern(a);
    solver.factorize(a);
    if (solver.info() != Eigen::Success)
        throw FlowError(
            "flow system factorization failed (singular system; check that a pressure condition "
            "is reachable from every subdomain)");
    const Eigen::VectorXd x = solver.solve(rhs);

    double coeff_scale = 0.0;
    for (int k = 0; k < a.nonZeros(); ++k)
        coeff_scale = std::max(coeff_scale, std::abs(a.valuePtr()[k]));
    const double residual = (a * x - rhs).cwiseAbs().maxCoeff();
    const double scale = std::max({1.0, rhs.cwiseAbs().maxCoeff(),
                                   coeff_scale * x.cwiseAbs().maxCoeff()});
    if (!(residual / scale <= 1e-10))
        throw FlowError("flow solve residual " + std::to_string(residual / scale) +
                        " exceeds tolerance 1e-10");

    FlowState st;
    st.residual = residual / scale;
    st.face_flux = x.segment(0, lay.nf);
    st.p_matrix = x.segment(lay.nf, lay.nc);
    if (mesh.has_fracture()) {
        st.p_fracture = x.segment(lay.nf + lay.nc, lay.ng);
        st.vertex_flux_fracture =
            recover_vertex_flux(mesh.fracture,
                                tangential_conductance(props.eps_gamma, props.k_frac_tan),
                                props.fracture_end, st.p_fracture);
        for (int side = 0; side < 2; ++side) {
            st.q_M[side].resize(mesh.maps_M[side].size());
            for (int j = 0; j < mesh.maps_M[side].size(); ++j) {
                const InterfacePair& pr = mesh.maps_M[side].pairs[j];
                const Face& face = m.faces[pr.other];
                const double orient =
                    face.normal.dot(mesh.fracture.normals[pr.lower]) > 0.0 ? 1.0 : -1.0;
                st.q_M[side][j] = orient * st.face_flux[pr.other];
            }
        }
        if (lay.multilayer) {
            for (int side = 0; side < 2; ++side) {
                st.p_layer[side] = x.segment(lay.pl(side, 0), lay.ng);
                st.vertex_flux_layer[side] = recover_vertex_flux(
                    mesh.layers[side],
                    tangential_conductance(props.eps_mu[side], props.k_layer_tan[side]),
                    props.layer_end[side], st.p_layer[side]);
                st.q_Gamma[side].resize(lay.ng);
                for (int j = 0; j < lay.ng; ++j) {
                    const double len = mesh.fracture.lengths[j];
                    const double r_g = props.eps_gamma[j] / props.k_frac_nrm[j];
                    const double r_mu = props.eps_mu[side][j] / props.k_layer_nrm[side][j];
                    const double t = len / (0.5 * (r_mu + r_g));
                    // Oriented with the segment normal: minus side flows layer->fracture,
                    // plus side fracture->layer.
                    st.q_Gamma[side][j] = side == side_index(Side::Minus)
                                              ? t * (st.p_layer[side][j] - st.p_fracture[j])
                                              : t * (st.p_fracture[j] - st.p_layer[side][j]);
                }
            }
        } else {
            st.q_Gamma = st.q_M;
        }
    }
    return st;
}

double InterfaceResiduals::max_abs() const {
    double r = 0.0;
    for (const InterfaceResidual& ir : fracture)
        r = std::max({r, std::abs(ir.average), std::abs(ir.jump)});
    for (const auto& side : layer)
        for (const InterfaceResidual& ir : side)
            r = std::max({r, std::abs(ir.average), std::abs(ir.jump)});
    return r;
}

InterfaceResiduals interface_flux_residual(const MixedDimMesh& mesh, const FlowProperties& props,
                                           const FlowState& state) {
    const TriangleMesh& m = mesh.matrix;
    InterfaceResiduals res;
    if (!mesh.has_fracture()) return res;
    const int ng = mesh.fracture.num_segments();
    const bool multilayer = mesh.mode == MeshMode::Multilayer;

    // Wall pressure as seen by the matrix, reconstructed from the momentum row
    // of the slit face: pi = p_cell - sigma * (M q)_f.
    const auto matrix_trace = [&](int f) {
        const Face& face = m.faces[f];
        const int c = face.cell_in;
        const auto mk = rt0_local_mass(m, c, props.k_matrix[c]);
        int local_f = -1;
        for (int e = 0; e < 3; ++e)
            if (m.cell_faces[c][e] == f) local_f = e;
        double mq = 0.0;
        for (int e = 0; e < 3; ++e) mq += mk[local_f][e] * state.face_flux[m.cell_faces[c][e]];
        return state.p_matrix[c] - m.sign(c, f) * mq;
    };

    res.fracture.resize(ng);
    if (multilayer) {
        res.layer[0].resize(ng);
        res.layer[1].resize(ng);
    }
    for (int j = 0; j < ng; ++j) {
        const double len = mesh.fracture.lengths[j];
        const double r_g = props.eps_gamma[j] / props.k_frac_nrm[j];
        if (multilayer) {
            const double r_mm = props.eps_mu[0][j] / props.k_layer_nrm[0][j];
            const double r_mp = props.eps_mu[1][j] / props.k_layer_nrm[1][j];
            const double phi_mwall = state.q_M[0][j] / len;   // into mu- from the matrix
            const double phi_pwall = state.q_M[1][j] / len;   // out of mu+ into the matrix
            const double phi_gm = state.q_Gamma[0][j] / len;  // mu- -> gamma
            const double phi_gp = state.q_Gamma[1][j] / len;  // gamma -> mu+

            // Traces at the fictitious Gamma interfaces via the half-law of the
            // neighbouring domain.
            const double pi_gm_from_gamma = state.p_fracture[j] + 0.5 * r_g * phi_gm;
            const double pi_gp_from_gamma = state.p_fracture[j] - 0.5 * r_g * phi_gp;
            const double pi_gm_from_layer = state.p_layer[0][j] - 0.5 * r_mm * phi_gm;
            const double pi_gp_from_layer = state.p_layer[1][j] + 0.5 * r_mp * phi_gp;
            const double pi_m_minus = matrix_trace(mesh.maps_M[0].pairs[j].other);
            const double pi_m_plus = matrix_trace(mesh.maps_M[1].pairs[j].other);

            res.layer[0][j].average =
                r_mm * 0.5 * (phi_mwall + phi_gm) - (pi_m_minus - pi_gm_from_gamma);
            res.layer[0][j].jump = 0.25 * r_mm * (phi_mwall - phi_gm) -
                                   (0.5 * (pi_m_minus + pi_gm_from_gamma) - state.p_layer[0][j]);
            res.layer[1][j].average =
                r_mp * 0.5 * (phi_gp + phi_pwall) - (pi_gp_from_gamma - pi_m_plus);
            res.layer[1][j].jump = 0.25 * r_mp * (phi_gp - phi_pwall) -
                                   (0.5 * (pi_gp_from_gamma + pi_m_plus) - state.p_layer[1][j]);
            res.fracture[j].average =
                r_g * 0.5 * (phi_gm + phi_gp) - (pi_gm_from_layer - pi_gp_from_layer);
            res.fracture[j].jump = 0.25 * r_g * (phi_gm - phi_gp) -
                                   (0.5 * (pi_gm_from_layer + pi_gp_from_layer) -
                                    state.p_fracture[j]);
        } else {
            const double phi_minus = state.q_M[0][j] / len;
            const double phi_plus = state.q_M[1][j] / len;
            const double pi_minus = matrix_trace(mesh.maps_M[0].pairs[j].other);
            const double pi_plus = matrix_trace(mesh.maps_M[1].pairs[j].other);
            res.fracture[j].average = r_g * 0.5 * (phi_minus + phi_plus) - (pi_minus - pi_plus);
            res.fracture[j].jump =
                0.25 * r_g * (phi_minus - phi_plus) -
                (0.5 * (pi_minus + pi_plus) - state.p_fracture[j]);
        }
    }
    return res;
}

}  // namespace stratum
