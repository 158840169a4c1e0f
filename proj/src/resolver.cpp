#include "idsm/resolver.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>

namespace idsm {

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

UpdateScheme scheme_from_string(const std::string& s) {
    if (s == "dfp") return UpdateScheme::Dfp;
    if (s == "bfg") return UpdateScheme::Bfg;
    throw std::invalid_argument("unknown update scheme '" + s + "'");
}

std::string scheme_to_string(UpdateScheme s) {
    return s == UpdateScheme::Dfp ? "dfp" : "bfg";
}

DiagComponent build_diag(const Mesh& mesh, const BoundaryPartition& part, HrDtnParams params,
                         double gamma, double eps_band) {
    if (!(eps_band > 0.0 && eps_band < 1.0))
        throw std::invalid_argument("build_diag: eps_band must lie in (0, 1)");
    DiagComponent d;
    d.gamma = gamma;
    d.eps_band = eps_band;
    d.shape = Vec::Zero(mesh.node_count());

    const double gp = 1.0 / std::sqrt(3.0);
    // quadrature nodes and alpha weights, per boundary edge
    struct QP {
        double x, y, w, wa, w1;  // point, weight, alpha/(1+alpha), 1/(1+alpha)
    };
    std::vector<QP> qps;
    qps.reserve(2 * mesh.boundary_edges.size());
    for (std::size_t e = 0; e < mesh.boundary_edges.size(); ++e) {
        const auto& a = mesh.nodes[mesh.boundary_edges[e][0]];
        const auto& b = mesh.nodes[mesh.boundary_edges[e][1]];
        const double L = std::hypot(b[0] - a[0], b[1] - a[1]);
        const double alpha = part.edge_labels[e] == 'D' ? params.alpha_d : params.alpha_n;
        for (double xi : {0.5 * (1.0 - gp), 0.5 * (1.0 + gp)}) {
            QP q;
            q.x = a[0] + xi * (b[0] - a[0]);
            q.y = a[1] + xi * (b[1] - a[1]);
            q.w = 0.5 * L;
            q.wa = alpha / (1.0 + alpha);
            q.w1 = 1.0 / (1.0 + alpha);
            qps.push_back(q);
        }
    }

    for (int i = 0; i < mesh.node_count(); ++i) {
        const double px = mesh.nodes[i][0], py = mesh.nodes[i][1];
        const double dist = 1.0 - std::hypot(px, py);
        if (dist < eps_band) continue;
        double norm2 = 0.0;
        for (const QP& q : qps) {
            const double r = std::hypot(q.x - px, q.y - py);
            const double phi = -std::log(r) / (2.0 * kPi);
            const double grad = 1.0 / (2.0 * kPi * r);
            const double val = phi * q.wa + grad * q.w1;
            norm2 += q.w * val * val;
        }
        d.shape[i] = std::pow(norm2, -0.5 * gamma);
    }
    return d;
}

ResolverState::ResolverState(const Mesh& fine, const CoarseMap& cmap,
                             std::vector<DiagComponent> diag, double p_index, UpdateScheme scheme)
    : p_index(p_index), scheme(scheme), mesh_(&fine), cmap_(&cmap), diag_(std::move(diag)) {
    // partition-of-unity weights: the share of each node's lumped support
    // landing in each coarse cell
    const Vec lm = lumped_mass(fine);
    std::vector<std::vector<std::pair<int, double>>> tmp(fine.node_count());
    for (int t = 0; t < fine.triangle_count(); ++t) {
        const int cell = cmap.fine_to_coarse[t];
        for (int v : fine.triangles[t]) {
            auto& row = tmp[v];
            bool found = false;
            for (auto& [c, w] : row)
                if (c == cell) {
                    w += fine.triangle_areas[t] / 3.0;
                    found = true;
                    break;
                }
            if (!found) row.emplace_back(cell, fine.triangle_areas[t] / 3.0);
        }
    }
    weights_.resize(fine.node_count());
    for (int i = 0; i < fine.node_count(); ++i) {
        auto row = tmp[i];
        std::sort(row.begin(), row.end());
        for (auto& [c, w] : row) w /= lm[i];
        weights_[i] = std::move(row);
    }
}

double ResolverState::max_diag() const {
    double m = 0.0;
    for (const auto& d : diag_) m = std::max(m, d.max_value());
    return m;
}

namespace {

// cell integrals of a dual density: I_c = sum_i g_{ic} xi_i
Vec cell_integrals_dual(const ResolverState& st, const Vec& dual) {
    Vec I = Vec::Zero(st.coarse_map().coarse.triangle_count());
    const auto& W = st.cell_weights();
    for (int i = 0; i < dual.size(); ++i)
        for (const auto& [c, w] : W[i]) I[c] += w * dual[i];
    return I;
}

// cell integrals of a nodal field: I_c = sum_i m_i g_{ic} v_i
Vec cell_integrals_nodal(const ResolverState& st, const Vec& nodal) {
    Vec I = Vec::Zero(st.coarse_map().coarse.triangle_count());
    const auto& W = st.cell_weights();
    const Vec lm = lumped_mass(st.mesh());
    for (int i = 0; i < nodal.size(); ++i)
        for (const auto& [c, w] : W[i]) I[c] += lm[i] * w * nodal[i];
    return I;
}

Vec lift_cells(const ResolverState& st, const Vec& cell_values) {
    Vec out = Vec::Zero(st.mesh().node_count());
    const auto& W = st.cell_weights();
    for (int i = 0; i < out.size(); ++i)
        for (const auto& [c, w] : W[i]) out[i] += w * cell_values[c];
    return out;
}

Vec scale_by_inverse_area(const ResolverState& st, Vec I) {
    const auto& areas = st.coarse_map().coarse_areas;
    for (int c = 0; c < I.size(); ++c) I[c] = areas[c] > 0.0 ? I[c] / areas[c] : 0.0;
    return I;
}

}  // namespace

MultiField apply_R0(const ResolverState& st, const MultiField& zeta_dual) {
    if (zeta_dual.type_count() != st.type_count())
        throw std::invalid_argument("apply_R0: type count mismatch");
    MultiField out(st.type_count(), st.mesh().node_count());
    for (int l = 0; l < st.type_count(); ++l) {
        const DiagComponent& d = st.diag()[l];
        const Vec sqrt_d = (d.c_d * d.shape.array()).sqrt().matrix();
        const Vec I = scale_by_inverse_area(st, cell_integrals_dual(st, sqrt_d.cwiseProduct(zeta_dual.c[l])));
        out.c[l] = sqrt_d.cwiseProduct(lift_cells(st, I));
    }
    return out;
}

Vec apply_stabilizer_dual(const ResolverState& st, const Vec& dual) {
    return lift_cells(st, scale_by_inverse_area(st, cell_integrals_dual(st, dual)));
}

Vec apply_stabilizer_nodal(const ResolverState& st, const Vec& nodal) {
    return lift_cells(st, scale_by_inverse_area(st, cell_integrals_nodal(st, nodal)));
}

MultiField apply_resolver(const ResolverState& st, const MultiField& zeta_dual) {
    MultiField out = apply_R0(st, zeta_dual);
    for (const RankOneTerm& t : st.terms()) {
        const double a = t.coeff * t.damp * pairing(zeta_dual, t.right);
        for (int l = 0; l < out.type_count(); ++l) out.c[l] += a * t.left.c[l];
    }
    return out;
}

void stabilize(ResolverState& st) {
    for (RankOneTerm& t : st.terms()) {
        if (t.fresh) {
            for (int l = 0; l < t.left.type_count(); ++l) {
                t.left.c[l] = apply_stabilizer_nodal(st, t.left.c[l]);
                t.right.c[l] = apply_stabilizer_nodal(st, t.right.c[l]);
            }
            t.fresh = false;
        }
    }
    const double theta = 1.0 / (1.0 + st.lambda_prev);
    for (RankOneTerm& t : st.terms()) t.damp *= theta;
}

MultiField auxiliary_index(const MultiField& u_next, const MultiField& R_zeta,
                           const MultiField& zeta_hat, const std::vector<InclusionType>& boxes) {
    const int L = u_next.type_count();
    MultiField eta_tilde(L, static_cast<int>(u_next.c[0].size()));
    for (int l = 0; l < L; ++l) {
        const double lo = boxes[l].lo, hi = boxes[l].hi;
        for (int i = 0; i < u_next.c[l].size(); ++i) {
            const double u = u_next.c[l][i];
            if (u == hi && u != lo)
                eta_tilde.c[l][i] = std::max(hi, R_zeta.c[l][i]);
            else if (u == lo)
                eta_tilde.c[l][i] = std::min(lo, R_zeta.c[l][i]);
            else
                eta_tilde.c[l][i] = u;
        }
    }

    const double su = pairing(zeta_hat, u_next);
    const double sr = pairing(zeta_hat, R_zeta);
    const double st_ = pairing(zeta_hat, eta_tilde);
    double upsilon = 1.0;
    if (su > sr && sr > st_) upsilon = su / (2.0 * (su - sr));
    if (upsilon == 1.0) return eta_tilde;

    // u + upsilon * (eta_tilde - u): keeps the projection of the result equal
    // to the iterate bit-exactly (the difference vanishes on interior nodes
    // and points outward on clamped ones)
    MultiField out(L, static_cast<int>(u_next.c[0].size()));
    for (int l = 0; l < L; ++l)
        out.c[l] = u_next.c[l] + upsilon * (eta_tilde.c[l] - u_next.c[l]);
    return out;
}

void lowrank_update(ResolverState& st, const MultiField& eta_hat, const MultiField& zeta_hat) {
    const MultiField R_zeta = apply_resolver(st, zeta_hat);
    const double s1 = pairing(zeta_hat, eta_hat);
    const double s2 = pairing(zeta_hat, R_zeta);
    if (!(s1 > 0.0) || !(s2 > 0.0))
        throw std::invalid_argument("lowrank_update: dual pairings must be positive");

    if (st.scheme == UpdateScheme::Dfp) {
        st.terms().push_back({eta_hat, eta_hat, 1.0 / s1, 1.0, true});
        st.terms().push_back({R_zeta, R_zeta, -1.0 / s2, 1.0, true});
    } else {
        MultiField g(eta_hat.type_count(), static_cast<int>(eta_hat.c[0].size()));
        for (int l = 0; l < g.type_count(); ++l) g.c[l] = eta_hat.c[l] - R_zeta.c[l];
        st.terms().push_back({g, eta_hat, 1.0 / s1, 1.0, true});
        st.terms().push_back({eta_hat, g, 1.0 / s1, 1.0, true});
        st.terms().push_back({eta_hat, eta_hat, -(s1 - s2) / (s1 * s1), 1.0, true});
    }
}

bool update_scaling(ResolverState& st, const MultiField& eta_hat, const MultiField& zeta_hat) {
    const Mesh& m = st.mesh();
    bool all_ok = true;
    for (int l = 0; l < st.type_count(); ++l) {
        DiagComponent& d = st.diag()[l];
        MultiField eta_one(1, static_cast<int>(eta_hat.c[l].size()));
        eta_one.c[0] = eta_hat.c[l];
        MultiField dz(1, static_cast<int>(zeta_hat.c[l].size()));
        dz.c[0] = (d.c_d * d.shape.array() * zeta_hat.c[l].array()).matrix();
        const double num = l1_norm_nodal(m, eta_one);
        const double den = l1_norm_dual(m, dz);
        if (den > 0.0) {
            d.c_d *= num / den;
        } else {
            std::cerr << "update_scaling: zero ||D zeta|| for type " << l
                      << ", keeping previous scaling\n";
            all_ok = false;
        }
    }
    return all_ok;
}

double compute_damping(ResolverState& st, const MultiField& eta_hat, const MultiField& zeta_hat,
                       const MultiField& R_zeta) {
    const Mesh& m = st.mesh();
    const double s1 = pairing(zeta_hat, eta_hat);
    const double s2 = pairing(zeta_hat, R_zeta);
    if (!(s1 > 0.0) || !(s2 > 0.0))
        throw std::invalid_argument("compute_damping: dual pairings must be positive");

    const double p = st.p_index;
    // |Omega|^{2/p*} with the Hoelder conjugate p* = p/(p-1); equals 1 at p = 1
    const double measure_factor = std::pow(kPi, 2.0 * (p - 1.0) / p);

    const int L = eta_hat.type_count();
    const int n = static_cast<int>(eta_hat.c[0].size());
    double raw = 0.0;
    if (st.scheme == UpdateScheme::Dfp) {
        MultiField sum(L, n), diff(L, n);
        for (int l = 0; l < L; ++l) {
            const Vec a = eta_hat.c[l] / std::sqrt(s1);
            const Vec b = R_zeta.c[l] / std::sqrt(s2);
            sum.c[l] = a + b;
            diff.c[l] = a - b;
        }
        raw = measure_factor * lp_norm(m, sum, p) * lp_norm(m, diff, p);
    } else {
        MultiField arg(L, n);
        for (int l = 0; l < L; ++l) {
            const Vec g = eta_hat.c[l] - R_zeta.c[l];
            arg.c[l] = 2.0 * g - ((s1 - s2) / s1) * eta_hat.c[l];
        }
        raw = measure_factor * (lp_norm(m, eta_hat, p) / s1) * lp_norm(m, arg, p);
    }

    if (!st.calibrated) {
        if (!(raw > 0.0))
            throw std::invalid_argument("compute_damping: cannot calibrate on a zero value");
        st.c_lambda = 1.0 / raw;
        st.calibrated = true;
        return 1.0;
    }
    return st.c_lambda * raw;
}

double dual_l1(const MultiField& dual) {
    double s = 0.0;
    for (const Vec& v : dual.c) s += v.cwiseAbs().sum();
    return s;
}

double probe_bound_ratio(const ResolverState& st, const MultiField& xi) {
    const double val = pairing(xi, apply_resolver(st, xi));
    const double h = st.h_min();
    double bound = st.max_diag() / h;
    if (!st.terms().empty()) {
        if (!st.calibrated)
            throw std::logic_error("probe_bound_ratio: corrections exist before calibration");
        bound += 1.0 / (st.c_lambda * h * h);
    }
    const double l1 = dual_l1(xi);
    return val / (bound * l1 * l1);
}

}  // namespace idsm
