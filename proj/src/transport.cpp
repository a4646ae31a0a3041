#include "stratum/transport.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>

namespace stratum {

namespace {

using Triplet = Eigen::Triplet<double>;

struct Layout {
    int nc = 0, ng = 0;
    bool multilayer = false;
    int um(int c) const { return c; }
    int ug(int j) const { return nc + j; }
    int ul(int side, int j) const { return nc + ng + side * ng + j; }
    int size() const { return nc + ng + (multilayer ? 2 * ng : 0); }
};

/// Accumulates one implicitly-discretized flux term: flux from unknown `from`
/// to unknown `to` (either may be -1 for a boundary) with advective rate adv,
/// upwind weight w and diffusive transmissibility diff.
class FluxAssembler {
public:
    FluxAssembler(std::vector<Triplet>& trips, Eigen::VectorXd& rhs, double upwind_weight)
        : trips_(trips), rhs_(rhs), w_(upwind_weight) {}

    void internal(int row_from, int row_to, double adv, double diff) {
        const double c_from = (adv >= 0.0 ? w_ * adv : (1.0 - w_) * adv) + diff;
        const double c_to = (adv >= 0.0 ? (1.0 - w_) * adv : w_ * adv) - diff;
        add(row_from, row_from, c_from);
        add(row_from, row_to, c_to);
        add(row_to, row_from, -c_from);
        add(row_to, row_to, -c_to);
    }

    /// Outward flux from `row` toward a boundary with Dirichlet value u_bc.
    void boundary(int row, double adv, double diff, double u_bc) {
        const double c_cell = (adv >= 0.0 ? w_ * adv : (1.0 - w_) * adv) + diff;
        const double c_bc = (adv >= 0.0 ? (1.0 - w_) * adv : w_ * adv) - diff;
        add(row, row, c_cell);
        rhs_[row] -= c_bc * u_bc;
    }

private:
    void add(int r, int c, double v) { trips_.emplace_back(r, c, v); }
    std::vector<Triplet>& trips_;
    Eigen::VectorXd& rhs_;
    double w_;
};

double perp_distance(const Vec2& centroid, const Face& face) {
    return std::abs(face.normal.dot(face.centroid - centroid));
}

void tangential_terms(const LowerDimGrid& g, const std::vector<double>& capacity, double d_tan,
                      const Eigen::VectorXd& vertex_flux, int row0, FluxAssembler& fa) {
    for (int v = 1; v < g.num_segments(); ++v) {
        const double t = tpfa_transmissibility(capacity[v - 1] * d_tan, capacity[v] * d_tan,
                                               0.5 * g.lengths[v - 1], 0.5 * g.lengths[v], 1.0);
        fa.internal(row0 + v - 1, row0 + v, vertex_flux[v], t);
    }
}

}  // namespace

double tpfa_transmissibility(double k1, double k2, double d1, double d2, double area) {
    if (!(d1 > 0.0) || !(d2 > 0.0))
        throw TransportError("tpfa_transmissibility requires positive distances");
    if (k1 < 0.0 || k2 < 0.0)
        throw TransportError("tpfa_transmissibility requires nonnegative conductivities");
    if (k1 == 0.0 || k2 == 0.0) return 0.0;
    return area / (d1 / k1 + d2 / k2);
}

const SoluteBoundaryCondition& SoluteBoundary::of(BoundaryTag tag) const {
    switch (tag) {
        case BoundaryTag::Inflow: return inflow;
        case BoundaryTag::Outflow: return outflow;
        default: return noflow;
    }
}

TransportState make_transport_state(const MixedDimMesh& mesh, double u0) {
    TransportState st;
    st.u_matrix = Eigen::VectorXd::Constant(mesh.matrix.num_cells(), u0);
    st.u_fracture = Eigen::VectorXd::Constant(mesh.fracture.num_segments(), u0);
    for (int side = 0; side < 2; ++side) {
        st.u_layer[side] = Eigen::VectorXd::Constant(mesh.layers[side].num_segments(), u0);
        st.chi_M[side] = Eigen::VectorXd::Zero(mesh.maps_M[side].size());
        st.chi_Gamma[side] = Eigen::VectorXd::Zero(
            mesh.mode == MeshMode::Multilayer ? mesh.maps_Gamma[side].size()
                                              : mesh.maps_M[side].size());
    }
    return st;
}

TransportState advect_diffuse_step(const MixedDimMesh& mesh, const TransportProperties& props,
                                   const FlowState& flow, const TransportState& u_old, double dt) {
    if (!(dt > 0.0)) throw TransportError("time step must be positive");
    const TriangleMesh& m = mesh.matrix;
    const int nc = m.num_cells();
    const int ng = mesh.fracture.num_segments();
    if (u_old.u_matrix.size() != nc || flow.p_matrix.size() != nc)
        throw TransportError("state does not match the mesh");
    if (static_cast<int>(props.capacity_matrix.size()) != nc)
        throw TransportError("capacity_matrix size does not match the mesh");

    Layout lay;
    lay.nc = nc;
    lay.ng = ng;
    lay.multilayer = mesh.mode == MeshMode::Multilayer && mesh.has_fracture();

    std::vector<Triplet> trips;
    trips.reserve(12 * lay.size());
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(lay.size());
    FluxAssembler fa(trips, rhs, props.upwind_weight);

    // Capacity / dt lumping.
    for (int c = 0; c < nc; ++c) {
        const double cap = props.capacity_matrix[c] * m.cell_volumes[c] / dt;
        trips.emplace_back(lay.um(c), lay.um(c), cap);
        rhs[lay.um(c)] += cap * u_old.u_matrix[c];
    }
    for (int j = 0; j < ng; ++j) {
        const double cap = props.capacity_fracture[j] * mesh.fracture.lengths[j] / dt;
        trips.emplace_back(lay.ug(j), lay.ug(j), cap);
        rhs[lay.ug(j)] += cap * u_old.u_fracture[j];
    }
    if (lay.multilayer)
        for (int side = 0; side < 2; ++side)
            for (int j = 0; j < ng; ++j) {
                const double cap =
                    props.capacity_layer[side][j] * mesh.layers[side].lengths[j] / dt;
                trips.emplace_back(lay.ul(side, j), lay.ul(side, j), cap);
                rhs[lay.ul(side, j)] += cap * u_old.u_layer[side][j];
            }

    // Slit-face pairing.
    std::vector<int> wall_side(m.num_faces(), -1), wall_pair(m.num_faces(), -1);
    for (int side = 0; side < 2; ++side)
        for (const InterfacePair& pr : mesh.maps_M[side].pairs) {
            wall_side[pr.other] = side;
            wall_pair[pr.other] = pr.lower;
        }

    // Matrix faces: interior, outer boundary, and mortar walls.
    for (int f = 0; f < m.num_faces(); ++f) {
        const Face& face = m.faces[f];
        const int a = face.cell_in;
        if (face.cell_out != -1) {
            const int b = face.cell_out;
            const double t = tpfa_transmissibility(
                props.capacity_matrix[a] * props.d_matrix, props.capacity_matrix[b] * props.d_matrix,
                perp_distance(m.cell_centroids[a], face), perp_distance(m.cell_centroids[b], face),
                face.area);
            fa.internal(lay.um(a), lay.um(b), flow.face_flux[f], t);
            continue;
        }
        if (wall_pair[f] >= 0) {
            const int side = wall_side[f];
            const int j = wall_pair[f];
            const double adv = m.sign(a, f) * flow.face_flux[f];  // matrix -> lower dim
            const double r_cross = lay.multilayer
                                       ? props.eps_mu[side][j] / props.d_layer_nrm
                                       : props.eps_gamma[j] / props.d_frac_nrm;
            const double t = tpfa_transmissibility(
                props.capacity_matrix[a] * props.d_matrix, 1.0,
                perp_distance(m.cell_centroids[a], face), 0.5 * std::max(r_cross, 1e-300),
                face.area) ;
            const int low = lay.multilayer ? lay.ul(side, j) : lay.ug(j);
            fa.internal(lay.um(a), low, adv, t);
            continue;
        }
        const SoluteBoundaryCondition& bc = props.boundary.of(face.tag);
        if (bc.kind == SoluteBoundaryCondition::Kind::Concentration) {
            const double adv = m.sign(a, f) * flow.face_flux[f];  // outward
            const double caps = props.capacity_matrix[a] * props.d_matrix;
            const double th =
                caps > 0.0 ? face.area * caps / perp_distance(m.cell_centroids[a], face) : 0.0;
            fa.boundary(lay.um(a), adv, th, bc.value);
        } else {
            rhs[lay.um(a)] -= bc.value * face.area;  // prescribed outward total flux
        }
    }

    if (mesh.has_fracture()) {
        tangential_terms(mesh.fracture, props.capacity_fracture, props.d_frac_tan,
                         flow.vertex_flux_fracture, lay.ug(0), fa);
        // 1D ends with a donor concentration.
        const auto end_terms = [&](const LowerDimGrid& g, const std::vector<double>& capacity,
                                   double d_tan, const Eigen::VectorXd& vflux, int row0,
                                   const std::array<std::optional<double>, 2>& u_end) {
            if (u_end[0]) {
                const double out = -vflux[0];
                const double th = capacity[0] * d_tan / (0.5 * g.lengths[0]);
                fa.boundary(row0, out, th, *u_end[0]);
            }
            if (u_end[1]) {
                const int last = g.num_segments() - 1;
                const double out = vflux[g.num_segments()];
                const double th = capacity[last] * d_tan / (0.5 * g.lengths[last]);
                fa.boundary(row0 + last, out, th, *u_end[1]);
            }
        };
        end_terms(mesh.fracture, props.capacity_fracture, props.d_frac_tan,
                  flow.vertex_flux_fracture, lay.ug(0), props.u_fracture_end);

        if (lay.multilayer) {
            for (int side = 0; side < 2; ++side) {
                tangential_terms(mesh.layers[side], props.capacity_layer[side], props.d_layer_tan,
                                 flow.vertex_flux_layer[side], lay.ul(side, 0), fa);
                end_terms(mesh.layers[side], props.capacity_layer[side], props.d_layer_tan,
                          flow.vertex_flux_layer[side], lay.ul(side, 0), props.u_layer_end[side]);
            }
            for (int j = 0; j < ng; ++j) {
                const double len = mesh.fracture.lengths[j];
                const double r_g = props.eps_gamma[j] / props.d_frac_nrm;
                for (int side = 0; side < 2; ++side) {
                    const double r_mu = props.eps_mu[side][j] / props.d_layer_nrm;
                    const double t = len / (0.5 * (r_mu + r_g));
                    if (side == side_index(Side::Minus))  // mu- -> gamma along the normal
                        fa.internal(lay.ul(side, j), lay.ug(j), flow.q_Gamma[side][j], t);
                    else  // gamma -> mu+
                        fa.internal(lay.ug(j), lay.ul(side, j), flow.q_Gamma[side][j], t);
                }
            }
        }
    }

    Eigen::SparseMatrix<double> a(lay.size(), lay.size());
    a.setFromTriplets(trips.begin(), trips.end());
    a.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> solver;
    solver.compute(a);
    if (solver.info() != Eigen::Success)
        throw TransportError("transport system factorization failed (singular system)");
    const Eigen::VectorXd u = solver.solve(rhs);

    const double residual = (a * u - rhs).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
    if (!(residual / scale <= 1e-8))
        throw TransportError("transport solve residual " + std::to_string(residual / scale) +
                             " exceeds tolerance");

    TransportState st = make_transport_state(mesh);
    st.residual = residual / scale;
    st.u_matrix = u.segment(0, nc);
    if (ng > 0) st.u_fracture = u.segment(lay.ug(0), ng);
    if (lay.multilayer)
        for (int side = 0; side < 2; ++side) st.u_layer[side] = u.segment(lay.ul(side, 0), ng);

    // Mortar fluxes and the boundary influx, evaluated on the solved field.
    const double w = props.upwind_weight;
    const auto upwinded = [w](double adv, double u_from, double u_to) {
        return adv >= 0.0 ? adv * (w * u_from + (1.0 - w) * u_to)
                          : adv * (w * u_to + (1.0 - w) * u_from);
    };
    for (int side = 0; side < 2 && mesh.has_fracture(); ++side) {
        const auto& pairs = mesh.maps_M[side].pairs;
        st.chi_M[side].resize(static_cast<int>(pairs.size()));
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            const InterfacePair& pr = pairs[p];
            const Face& face = m.faces[pr.other];
            const int a_cell = face.cell_in;
            const int j = pr.lower;
            const double out = m.sign(a_cell, pr.other) * flow.face_flux[pr.other];
            const double u_low = lay.multilayer ? st.u_layer[side][j] : st.u_fracture[j];
            const double r_cross = lay.multilayer ? props.eps_mu[side][j] / props.d_layer_nrm
                                                  : props.eps_gamma[j] / props.d_frac_nrm;
            const double t = tpfa_transmissibility(
                props.capacity_matrix[a_cell] * props.d_matrix, 1.0,
                perp_distance(m.cell_centroids[a_cell], face), 0.5 * std::max(r_cross, 1e-300),
                face.area);
            const double chi_out = upwinded(out, st.u_matrix[a_cell], u_low) +
                                   t * (st.u_matrix[a_cell] - u_low);
            // Orient along the segment normal like q_M.
            const double orient =
                face.normal.dot(mesh.fracture.normals[j]) > 0.0 ? 1.0 : -1.0;
            st.chi_M[side][p] = orient * m.sign(a_cell, pr.other) * chi_out;
        }
        if (lay.multilayer) {
            st.chi_Gamma[side].resize(ng);
            for (int j = 0; j < ng; ++j) {
                const double len = mesh.fracture.lengths[j];
                const double r_g = props.eps_gamma[j] / props.d_frac_nrm;
                const double r_mu = props.eps_mu[side][j] / props.d_layer_nrm;
                const double t = len / (0.5 * (r_mu + r_g));
                const double adv = flow.q_Gamma[side][j];
                st.chi_Gamma[side][j] =
                    side == side_index(Side::Minus)
                        ? upwinded(adv, st.u_layer[side][j], st.u_fracture[j]) +
                              t * (st.u_layer[side][j] - st.u_fracture[j])
                        : upwinded(adv, st.u_fracture[j], st.u_layer[side][j]) +
                              t * (st.u_fracture[j] - st.u_layer[side][j]);
            }
        } else {
            st.chi_Gamma[side] = st.chi_M[side];
        }
    }

    double influx = 0.0;
    for (int f = 0; f < m.num_faces(); ++f) {
        const Face& face = m.faces[f];
        if (face.cell_out != -1 || wall_pair[f] >= 0) continue;
        const int a_cell = face.cell_in;
        const SoluteBoundaryCondition& bc = props.boundary.of(face.tag);
        if (bc.kind == SoluteBoundaryCondition::Kind::Concentration) {
            const double out = m.sign(a_cell, f) * flow.face_flux[f];
            const double caps = props.capacity_matrix[a_cell] * props.d_matrix;
            const double th =
                caps > 0.0 ? face.area * caps / perp_distance(m.cell_centroids[a_cell], face) : 0.0;
            influx -= upwinded(out, st.u_matrix[a_cell], bc.value) +
                      th * (st.u_matrix[a_cell] - bc.value);
        } else {
            influx -= bc.value * face.area;
        }
    }
    if (mesh.has_fracture()) {
        const auto end_influx = [&](const LowerDimGrid& g, const std::vector<double>& capacity,
                                    double d_tan, const Eigen::VectorXd& vflux,
                                    const Eigen::VectorXd& u_vec,
                                    const std::array<std::optional<double>, 2>& u_end) {
            double s = 0.0;
            if (u_end[0]) {
                const double out = -vflux[0];
                const double th = capacity[0] * d_tan / (0.5 * g.lengths[0]);
                s -= upwinded(out, u_vec[0], *u_end[0]) + th * (u_vec[0] - *u_end[0]);
            }
            if (u_end[1]) {
                const int last = g.num_segments() - 1;
                const double out = vflux[g.num_segments()];
                const double th = capacity[last] * d_tan / (0.5 * g.lengths[last]);
                s -= upwinded(out, u_vec[last], *u_end[1]) + th * (u_vec[last] - *u_end[1]);
            }
            return s;
        };
        influx += end_influx(mesh.fracture, props.capacity_fracture, props.d_frac_tan,
                             flow.vertex_flux_fracture, st.u_fracture, props.u_fracture_end);
        if (lay.multilayer)
            for (int side = 0; side < 2; ++side)
                influx += end_influx(mesh.layers[side], props.capacity_layer[side],
                                     props.d_layer_tan, flow.vertex_flux_layer[side],
                                     st.u_layer[side], props.u_layer_end[side]);
    }
    st.boundary_influx = influx;
    return st;
}

double total_content(const MixedDimMesh& mesh, const TransportProperties& props,
                     const Eigen::VectorXd& u_matrix, const Eigen::VectorXd& u_fracture,
                     const std::array<Eigen::VectorXd, 2>& u_layer) {
    double c = 0.0;
    for (int i = 0; i < mesh.matrix.num_cells(); ++i)
        c += props.capacity_matrix[i] * mesh.matrix.cell_volumes[i] * u_matrix[i];
    for (int j = 0; j < mesh.fracture.num_segments(); ++j)
        c += props.capacity_fracture[j] * mesh.fracture.lengths[j] * u_fracture[j];
    if (mesh.mode == MeshMode::Multilayer)
        for (int side = 0; side < 2; ++side)
            for (int j = 0; j < mesh.layers[side].num_segments(); ++j)
                c += props.capacity_layer[side][j] * mesh.layers[side].lengths[j] *
                     u_layer[side][j];
    return c;
}

}  // namespace stratum
