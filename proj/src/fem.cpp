#include "idsm/fem.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <cmath>
#include <fstream>
#include <sstream>

#include "idsm/util.hpp"

namespace idsm {

namespace {

// CE conductivity inside an inclusion is 1e-4: sigma = 1 - kSigmaDrop * u.
constexpr double kSigmaDrop = 1.0 - 1e-4;

struct TriGeom {
    std::array<int, 3> v;
    double area;
    // grad phi_i = (b[i], c[i]) / (2 area)
    std::array<double, 3> b, c;
    std::array<std::array<double, 2>, 3> mid;  // edge midpoints (quadrature)
};

TriGeom tri_geom(const Mesh& m, int t) {
    TriGeom g;
    g.v = m.triangles[t];
    g.area = m.triangle_areas[t];
    const auto& p0 = m.nodes[g.v[0]];
    const auto& p1 = m.nodes[g.v[1]];
    const auto& p2 = m.nodes[g.v[2]];
    g.b = {p1[1] - p2[1], p2[1] - p0[1], p0[1] - p1[1]};
    g.c = {p2[0] - p1[0], p0[0] - p2[0], p1[0] - p0[0]};
    g.mid[0] = {0.5 * (p0[0] + p1[0]), 0.5 * (p0[1] + p1[1])};
    g.mid[1] = {0.5 * (p1[0] + p2[0]), 0.5 * (p1[1] + p2[1])};
    g.mid[2] = {0.5 * (p2[0] + p0[0]), 0.5 * (p2[1] + p0[1])};
    return g;
}

// P1 basis values at the three edge midpoints (rows: quadrature point).
constexpr double kPhiAtMid[3][3] = {{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}};

using Triplets = std::vector<Eigen::Triplet<double>>;

// stiffness with P1 coefficient (exact: the coefficient mean scales the
// constant element matrix)
void add_stiffness(Triplets& out, const Mesh& m, const Vec* coeff, double scale) {
    for (int t = 0; t < m.triangle_count(); ++t) {
        const TriGeom g = tri_geom(m, t);
        double cbar = 1.0;
        if (coeff) cbar = ((*coeff)[g.v[0]] + (*coeff)[g.v[1]] + (*coeff)[g.v[2]]) / 3.0;
        const double f = scale * cbar / (4.0 * g.area);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                out.emplace_back(g.v[i], g.v[j], f * (g.b[i] * g.b[j] + g.c[i] * g.c[j]));
    }
}

// exact P1-coefficient mass: uses int phi_i phi_j phi_k = 2A a!b!c!/(a+b+c+2)!
void add_mass_exact(Triplets& out, const Mesh& m, const Vec* coeff, double scale) {
    for (int t = 0; t < m.triangle_count(); ++t) {
        const TriGeom g = tri_geom(m, t);
        std::array<double, 3> w = {1.0, 1.0, 1.0};
        if (coeff) w = {(*coeff)[g.v[0]], (*coeff)[g.v[1]], (*coeff)[g.v[2]]};
        const double A = g.area * scale;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                double val = 0.0;
                for (int k = 0; k < 3; ++k) {
                    int hits = (k == i) + (k == j);
                    // int phi_i phi_j phi_k: A/10 (all same), A/30 (two same), A/60 (distinct)
                    double base = (i == j) ? (hits == 2 ? 1.0 / 10.0 : 1.0 / 30.0)
                                           : (hits >= 1 ? 1.0 / 30.0 : 1.0 / 60.0);
                    val += w[k] * base;
                }
                out.emplace_back(g.v[i], g.v[j], A * val);
            }
        }
    }
}

// quadrature mass with a pointwise coefficient (the semilinear terms)
template <class CoeffAt>
void add_mass_quadrature(Triplets& out, const Mesh& m, CoeffAt coeff_at) {
    for (int t = 0; t < m.triangle_count(); ++t) {
        const TriGeom g = tri_geom(m, t);
        const double wq = g.area / 3.0;
        for (int q = 0; q < 3; ++q) {
            const double cq = coeff_at(g, q);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    out.emplace_back(g.v[i], g.v[j], wq * cq * kPhiAtMid[q][i] * kPhiAtMid[q][j]);
        }
    }
}

double at_mid(const Vec& nodal, const TriGeom& g, int q) {
    return kPhiAtMid[q][0] * nodal[g.v[0]] + kPhiAtMid[q][1] * nodal[g.v[1]] +
           kPhiAtMid[q][2] * nodal[g.v[2]];
}

SpMat from_triplets(int n, const Triplets& tr) {
    SpMat A(n, n);
    A.setFromTriplets(tr.begin(), tr.end());
    A.makeCompressed();
    return A;
}

}  // namespace

double pairing(const MultiField& dual, const MultiField& nodal) {
    double s = 0.0;
    for (int l = 0; l < dual.type_count(); ++l) s += dual.c[l].dot(nodal.c[l]);
    return s;
}

Model model_from_string(const std::string& s) {
    if (s == "eit") return Model::Eit;
    if (s == "dot") return Model::Dot;
    if (s == "ce") return Model::Ce;
    if (s == "modulus") return Model::Modulus;
    throw std::invalid_argument("unknown model '" + s + "'");
}

std::string model_to_string(Model m) {
    switch (m) {
        case Model::Eit: return "eit";
        case Model::Dot: return "dot";
        case Model::Ce: return "ce";
        case Model::Modulus: return "modulus";
    }
    return "?";
}

void ProblemSpec::validate_admissible(const MultiField& u) const {
    if (u.type_count() != type_count())
        throw std::invalid_argument("inclusion field has wrong number of types");
    for (int l = 0; l < type_count(); ++l) {
        const auto& box = types[l];
        for (int i = 0; i < u.c[l].size(); ++i) {
            const double v = u.c[l][i];
            if (v < box.lo - 1e-12 || v > box.hi + 1e-12)
                throw std::invalid_argument("inclusion value outside admissible box for type " +
                                            box.name);
        }
        if (box.name == "conductivity") {
            for (int i = 0; i < u.c[l].size(); ++i)
                if (c0 + u.c[l][i] <= 0.0)
                    throw std::invalid_argument("nonpositive conductivity coefficient");
        }
    }
}

SpMat boundary_mass(const Mesh& m) {
    Triplets tr;
    for (std::size_t e = 0; e < m.boundary_edges.size(); ++e) {
        const int a = m.node_to_boundary[m.boundary_edges[e][0]];
        const int b = m.node_to_boundary[m.boundary_edges[e][1]];
        const auto& pa = m.nodes[m.boundary_edges[e][0]];
        const auto& pb = m.nodes[m.boundary_edges[e][1]];
        const double L = std::hypot(pb[0] - pa[0], pb[1] - pa[1]);
        tr.emplace_back(a, a, L / 3.0);
        tr.emplace_back(b, b, L / 3.0);
        tr.emplace_back(a, b, L / 6.0);
        tr.emplace_back(b, a, L / 6.0);
    }
    SpMat M(m.boundary_node_count(), m.boundary_node_count());
    M.setFromTriplets(tr.begin(), tr.end());
    M.makeCompressed();
    return M;
}

SpMat boundary_mass_weighted(const Mesh& m, const BoundaryPartition& part, double alpha_d,
                             double alpha_n) {
    Triplets tr;
    for (std::size_t e = 0; e < m.boundary_edges.size(); ++e) {
        const double alpha = part.edge_labels[e] == 'D' ? alpha_d : alpha_n;
        const int a = m.node_to_boundary[m.boundary_edges[e][0]];
        const int b = m.node_to_boundary[m.boundary_edges[e][1]];
        const auto& pa = m.nodes[m.boundary_edges[e][0]];
        const auto& pb = m.nodes[m.boundary_edges[e][1]];
        const double L = std::hypot(pb[0] - pa[0], pb[1] - pa[1]);
        tr.emplace_back(a, a, alpha * L / 3.0);
        tr.emplace_back(b, b, alpha * L / 3.0);
        tr.emplace_back(a, b, alpha * L / 6.0);
        tr.emplace_back(b, a, alpha * L / 6.0);
    }
    SpMat M(m.boundary_node_count(), m.boundary_node_count());
    M.setFromTriplets(tr.begin(), tr.end());
    M.makeCompressed();
    return M;
}

Vec boundary_load(const Mesh& m, const Vec& flux_on_boundary) {
    if (flux_on_boundary.size() != m.boundary_node_count())
        throw std::invalid_argument("boundary_load: flux size mismatch");
    Vec load = Vec::Zero(m.node_count());
    const double gp = 1.0 / std::sqrt(3.0);
    for (const auto& e : m.boundary_edges) {
        const int a = e[0], b = e[1];
        const double fa = flux_on_boundary[m.node_to_boundary[a]];
        const double fb = flux_on_boundary[m.node_to_boundary[b]];
        const double L = std::hypot(m.nodes[b][0] - m.nodes[a][0], m.nodes[b][1] - m.nodes[a][1]);
        for (double xi : {0.5 * (1.0 - gp), 0.5 * (1.0 + gp)}) {
            const double w = 0.5 * L;
            const double f = (1.0 - xi) * fa + xi * fb;
            load[a] += w * f * (1.0 - xi);
            load[b] += w * f * xi;
        }
    }
    return load;
}

double boundary_mean(const Mesh& m, const Vec& flux_on_boundary) {
    double num = 0.0, den = 0.0;
    for (const auto& e : m.boundary_edges) {
        const double fa = flux_on_boundary[m.node_to_boundary[e[0]]];
        const double fb = flux_on_boundary[m.node_to_boundary[e[1]]];
        const double L =
            std::hypot(m.nodes[e[1]][0] - m.nodes[e[0]][0], m.nodes[e[1]][1] - m.nodes[e[0]][1]);
        num += 0.5 * L * (fa + fb);
        den += L;
    }
    return num / den;
}

Vec boundary_lumped(const Mesh& m) {
    Vec w = Vec::Zero(m.boundary_node_count());
    for (const auto& e : m.boundary_edges) {
        const double L =
            std::hypot(m.nodes[e[1]][0] - m.nodes[e[0]][0], m.nodes[e[1]][1] - m.nodes[e[0]][1]);
        w[m.node_to_boundary[e[0]]] += 0.5 * L;
        w[m.node_to_boundary[e[1]]] += 0.5 * L;
    }
    return w;
}

Vec lumped_mass(const Mesh& m) {
    Vec w = Vec::Zero(m.node_count());
    for (int t = 0; t < m.triangle_count(); ++t)
        for (int v : m.triangles[t]) w[v] += m.triangle_areas[t] / 3.0;
    return w;
}

SpMat assemble(const ProblemSpec& p, const Mesh& m, const MultiField& u, const Vec* y_lin) {
    p.validate_admissible(u);
    if (p.semilinear && !y_lin)
        throw std::invalid_argument("assemble: semilinear model needs a linearization state");
    Triplets tr;
    switch (p.model) {
        case Model::Eit: {
            Vec sigma = Vec::Constant(m.node_count(), p.c0) + u.c[0];
            add_stiffness(tr, m, &sigma, 1.0);
            break;
        }
        case Model::Dot: {
            Vec sigma = Vec::Constant(m.node_count(), p.c0) + u.c[0];
            Vec pot = Vec::Constant(m.node_count(), p.p0) + u.c[1];
            add_stiffness(tr, m, &sigma, 1.0);
            add_mass_exact(tr, m, &pot, 1.0);
            break;
        }
        case Model::Ce: {
            Vec sigma = Vec::Constant(m.node_count(), 1.0) - kSigmaDrop * u.c[0];
            add_stiffness(tr, m, &sigma, 1.0);
            const Vec& y = *y_lin;
            const Vec& uc = u.c[0];
            add_mass_quadrature(tr, m, [&](const TriGeom& g, int q) {
                const double yq = at_mid(y, g, q);
                return 3.0 * (1.0 - at_mid(uc, g, q)) * yq * yq;
            });
            break;
        }
        case Model::Modulus: {
            add_stiffness(tr, m, nullptr, 1.0);
            add_mass_exact(tr, m, nullptr, 1.0);
            const Vec& y = *y_lin;
            const Vec& uc = u.c[0];
            add_mass_quadrature(tr, m, [&](const TriGeom& g, int q) {
                return 2.0 * at_mid(uc, g, q) * std::abs(at_mid(y, g, q));
            });
            break;
        }
    }
    return from_triplets(m.node_count(), tr);
}

SpMat assemble_background(const ProblemSpec& p, const Mesh& m, const Vec* y_state) {
    Triplets tr;
    switch (p.model) {
        case Model::Eit:
            add_stiffness(tr, m, nullptr, p.c0);
            break;
        case Model::Dot:
            add_stiffness(tr, m, nullptr, p.c0);
            add_mass_exact(tr, m, nullptr, p.p0);
            break;
        case Model::Ce: {
            if (!y_state)
                throw std::invalid_argument("assemble_background: CE needs the state");
            add_stiffness(tr, m, nullptr, 1.0);
            const Vec& y = *y_state;
            add_mass_quadrature(tr, m, [&](const TriGeom& g, int q) {
                const double yq = at_mid(y, g, q);
                return yq * yq;
            });
            break;
        }
        case Model::Modulus:
            add_stiffness(tr, m, nullptr, 1.0);
            add_mass_exact(tr, m, nullptr, 1.0);
            break;
    }
    return from_triplets(m.node_count(), tr);
}

Vec inclusion_load(const ProblemSpec& p, const Mesh& m, const MultiField& u, const Vec& y) {
    Vec load = Vec::Zero(m.node_count());
    for (int t = 0; t < m.triangle_count(); ++t) {
        const TriGeom g = tri_geom(m, t);
        const double wq = g.area / 3.0;

        // gradient of y on the element
        double gx = 0.0, gy = 0.0;
        for (int i = 0; i < 3; ++i) {
            gx += y[g.v[i]] * g.b[i] / (2.0 * g.area);
            gy += y[g.v[i]] * g.c[i] / (2.0 * g.area);
        }

        auto add_conductivity = [&](const Vec& uc, double scale) {
            const double ubar = (uc[g.v[0]] + uc[g.v[1]] + uc[g.v[2]]) / 3.0;
            for (int i = 0; i < 3; ++i)
                load[g.v[i]] +=
                    scale * ubar * (gx * g.b[i] + gy * g.c[i]) / 2.0;  // = ubar*grad y.grad phi*A
        };

        switch (p.model) {
            case Model::Eit:
                add_conductivity(u.c[0], 1.0);
                break;
            case Model::Dot: {
                add_conductivity(u.c[0], 1.0);
                // exact P1^3 potential term
                const auto& up = u.c[1];
                std::array<double, 3> uv = {up[g.v[0]], up[g.v[1]], up[g.v[2]]};
                std::array<double, 3> yv = {y[g.v[0]], y[g.v[1]], y[g.v[2]]};
                for (int i = 0; i < 3; ++i) {
                    double val = 0.0;
                    for (int j = 0; j < 3; ++j)
                        for (int k = 0; k < 3; ++k) {
                            int same_ij = (i == j), same_ik = (i == k), same_jk = (j == k);
                            double base;
                            if (same_ij && same_ik) base = 1.0 / 10.0;
                            else if (same_ij || same_ik || same_jk) base = 1.0 / 30.0;
                            else base = 1.0 / 60.0;
                            val += uv[j] * yv[k] * base;
                        }
                    load[g.v[i]] += g.area * val;
                }
                break;
            }
            case Model::Ce: {
                add_conductivity(u.c[0], -kSigmaDrop);
                for (int q = 0; q < 3; ++q) {
                    const double yq = at_mid(y, g, q);
                    const double uq = at_mid(u.c[0], g, q);
                    for (int i = 0; i < 3; ++i)
                        load[g.v[i]] -= wq * uq * yq * yq * yq * kPhiAtMid[q][i];
                }
                break;
            }
            case Model::Modulus: {
                for (int q = 0; q < 3; ++q) {
                    const double yq = at_mid(y, g, q);
                    const double uq = at_mid(u.c[0], g, q);
                    for (int i = 0; i < 3; ++i)
                        load[g.v[i]] += wq * uq * std::abs(yq) * yq * kPhiAtMid[q][i];
                }
                break;
            }
        }
    }
    return load;
}

MultiField inclusion_adjoint_density(const ProblemSpec& p, const Mesh& m, const Vec& y,
                                     const Vec& w) {
    MultiField zeta(p.type_count(), m.node_count());
    for (int t = 0; t < m.triangle_count(); ++t) {
        const TriGeom g = tri_geom(m, t);
        const double wq = g.area / 3.0;

        double yx = 0.0, yy = 0.0, wx = 0.0, wy = 0.0;
        for (int i = 0; i < 3; ++i) {
            yx += y[g.v[i]] * g.b[i] / (2.0 * g.area);
            yy += y[g.v[i]] * g.c[i] / (2.0 * g.area);
            wx += w[g.v[i]] * g.b[i] / (2.0 * g.area);
            wy += w[g.v[i]] * g.c[i] / (2.0 * g.area);
        }
        const double grad_dot = yx * wx + yy * wy;

        switch (p.model) {
            case Model::Eit:
                for (int i = 0; i < 3; ++i) zeta.c[0][g.v[i]] += grad_dot * g.area / 3.0;
                break;
            case Model::Dot: {
                for (int i = 0; i < 3; ++i) zeta.c[0][g.v[i]] += grad_dot * g.area / 3.0;
                std::array<double, 3> yv = {y[g.v[0]], y[g.v[1]], y[g.v[2]]};
                std::array<double, 3> wv = {w[g.v[0]], w[g.v[1]], w[g.v[2]]};
                for (int i = 0; i < 3; ++i) {
                    double val = 0.0;
                    for (int j = 0; j < 3; ++j)
                        for (int k = 0; k < 3; ++k) {
                            int same_ij = (i == j), same_ik = (i == k), same_jk = (j == k);
                            double base;
                            if (same_ij && same_ik) base = 1.0 / 10.0;
                            else if (same_ij || same_ik || same_jk) base = 1.0 / 30.0;
                            else base = 1.0 / 60.0;
                            val += yv[j] * wv[k] * base;
                        }
                    zeta.c[1][g.v[i]] += g.area * val;
                }
                break;
            }
            case Model::Ce: {
                for (int i = 0; i < 3; ++i)
                    zeta.c[0][g.v[i]] -= kSigmaDrop * grad_dot * g.area / 3.0;
                for (int q = 0; q < 3; ++q) {
                    const double yq = at_mid(y, g, q);
                    const double wq_val = at_mid(w, g, q);
                    for (int i = 0; i < 3; ++i)
                        zeta.c[0][g.v[i]] -= wq * yq * yq * yq * wq_val * kPhiAtMid[q][i];
                }
                break;
            }
            case Model::Modulus: {
                for (int q = 0; q < 3; ++q) {
                    const double yq = at_mid(y, g, q);
                    const double wq_val = at_mid(w, g, q);
                    for (int i = 0; i < 3; ++i)
                        zeta.c[0][g.v[i]] += wq * std::abs(yq) * yq * wq_val * kPhiAtMid[q][i];
                }
                break;
            }
        }
    }
    return zeta;
}

namespace {

// SPD solve with a residual check
Vec solve_spd(const SpMat& A, const Vec& rhs, const char* what) {
    Eigen::SimplicialLDLT<SpMat> chol(A);
    if (chol.info() != Eigen::Success) throw SolverError(std::string(what) + ": factorization failed");
    Vec y = chol.solve(rhs);
    const double rn = (A * y - rhs).norm();
    const double scale = std::max(rhs.norm(), 1e-300);
    if (rn > 1e-8 * scale) throw SolverError(std::string(what) + ": large residual", rn / scale);
    return y;
}

// Pure-Neumann solve with the zero-boundary-mean gauge appended as a scalar
// Lagrange multiplier.
Vec solve_gauged(const SpMat& A, const Vec& rhs, const Mesh& m, const char* what) {
    const int n = A.rows();
    Triplets tr;
    for (int k = 0; k < A.outerSize(); ++k)
        for (SpMat::InnerIterator it(A, k); it; ++it) tr.emplace_back(it.row(), it.col(), it.value());
    const Vec g = boundary_lumped(m);
    for (int i = 0; i < m.boundary_node_count(); ++i) {
        tr.emplace_back(m.boundary_nodes[i], n, g[i]);
        tr.emplace_back(n, m.boundary_nodes[i], g[i]);
    }
    SpMat Aug(n + 1, n + 1);
    Aug.setFromTriplets(tr.begin(), tr.end());
    Aug.makeCompressed();

    Eigen::SparseLU<SpMat> lu(Aug);
    if (lu.info() != Eigen::Success) throw SolverError(std::string(what) + ": LU failed");
    Vec rhs_aug = Vec::Zero(n + 1);
    rhs_aug.head(n) = rhs;
    Vec sol = lu.solve(rhs_aug);
    const double rn = (Aug * sol - rhs_aug).norm();
    const double scale = std::max(rhs.norm(), 1e-300);
    if (rn > 1e-8 * scale) throw SolverError(std::string(what) + ": large residual", rn / scale);
    return sol.head(n);
}

Vec mean_corrected_flux(const ProblemSpec& p, const Mesh& m, const Vec& flux) {
    if (p.model != Model::Eit) return flux;
    return flux.array() - boundary_mean(m, flux);
}

Vec newton_residual(const ProblemSpec& p, const Mesh& m, const MultiField& u, const Vec& y,
                    const Vec& load) {
    // split as background operator (frozen at y) applied to y plus the
    // inclusion term; both sides share the quadrature rule, so this equals
    // the monolithic weak residual
    return assemble_background(p, m, &y) * y + inclusion_load(p, m, u, y) - load;
}

Vec solve_semilinear(const ProblemSpec& p, const Mesh& m, const MultiField& u, const Vec& load,
                     ForwardStats* stats) {
    // initial guess: a coercive linear proxy (the CE operator linearized at
    // zero state is pure Neumann)
    Vec y;
    if (p.model == Model::Modulus) {
        y = solve_spd(assemble_background(p, m, nullptr), load, "modulus init");
    } else {
        Triplets tr;
        Vec sigma = Vec::Constant(m.node_count(), 1.0) - kSigmaDrop * u.c[0];
        add_stiffness(tr, m, &sigma, 1.0);
        add_mass_exact(tr, m, nullptr, 1.0);
        y = solve_spd(from_triplets(m.node_count(), tr), load, "ce init");
    }

    const double load_scale = std::max(load.norm(), 1e-300);
    Vec res = newton_residual(p, m, u, y, load);
    double rn = res.norm();
    int it = 0;
    for (; it < 50; ++it) {
        if (rn <= 1e-12 * load_scale) break;
        SpMat J = assemble(p, m, u, &y);
        Eigen::SimplicialLDLT<SpMat> chol(J);
        if (chol.info() != Eigen::Success) throw SolverError("newton: jacobian factorization failed", rn);
        Vec step = chol.solve(-res);

        double s = 1.0;
        Vec y_try, res_try;
        double rn_try = 0.0;
        int halvings = 0;
        for (; halvings <= 30; ++halvings) {
            y_try = y + s * step;
            res_try = newton_residual(p, m, u, y_try, load);
            rn_try = res_try.norm();
            if (rn_try < rn) break;
            s *= 0.5;
        }
        if (halvings > 30) throw SolverError("newton: step halving exhausted", rn);
        const double increment = (s * step).norm() / std::max(y_try.norm(), 1e-300);
        y = y_try;
        res = res_try;
        rn = rn_try;
        if (increment <= 1e-10) {
            ++it;
            break;
        }
    }
    if (rn > 1e-10 * load_scale) throw SolverError("newton: no convergence", rn / load_scale);
    if (stats) {
        stats->newton_iterations = it;
        stats->residual = rn / load_scale;
    }
    return y;
}

}  // namespace

Vec solve_forward(const ProblemSpec& p, const Mesh& m, const MultiField& u, const Vec& flux,
                  ForwardStats* stats) {
    p.validate_admissible(u);
    const Vec f = mean_corrected_flux(p, m, flux);
    const Vec load = boundary_load(m, f);

    if (p.semilinear) return solve_semilinear(p, m, u, load, stats);

    const SpMat A = assemble(p, m, u, nullptr);
    Vec y = (p.model == Model::Eit) ? solve_gauged(A, load, m, "eit forward")
                                    : solve_spd(A, load, "forward");
    if (stats) {
        stats->newton_iterations = 0;
        stats->residual = (A * y - load).norm() / std::max(load.norm(), 1e-300);
    }
    return y;
}

Vec solve_background(const ProblemSpec& p, const Mesh& m, const Vec& flux, const Vec* y_state) {
    const Vec f = mean_corrected_flux(p, m, flux);
    const Vec load = boundary_load(m, f);
    const SpMat A = assemble_background(p, m, y_state);
    if (p.model == Model::Eit) return solve_gauged(A, load, m, "eit background");
    return solve_spd(A, load, "background");
}

Vec trace_part(const Mesh& m, const BoundaryPartition& part, const Vec& y, TracePart which) {
    Vec out = Vec::Zero(m.boundary_node_count());
    for (int i = 0; i < m.boundary_node_count(); ++i) {
        const bool is_d = part.node_labels[i] == 'D';
        if (which == TracePart::Full || (which == TracePart::D && is_d) ||
            (which == TracePart::N && !is_d))
            out[i] = y[m.boundary_nodes[i]];
    }
    return out;
}

double lp_norm(const Mesh& m, const MultiField& f, double p) {
    if (p < 1.0) throw std::invalid_argument("lp_norm: p must be >= 1");
    double acc = 0.0;
    for (int l = 0; l < f.type_count(); ++l) {
        for (int t = 0; t < m.triangle_count(); ++t) {
            const TriGeom g = tri_geom(m, t);
            for (int q = 0; q < 3; ++q)
                acc += g.area / 3.0 * std::pow(std::abs(at_mid(f.c[l], g, q)), p);
        }
    }
    return std::pow(acc, 1.0 / p);
}

double l1_norm_nodal(const Mesh& m, const MultiField& f) { return lp_norm(m, f, 1.0); }

double l1_norm_dual(const Mesh& m, const MultiField& dual) {
    const Vec w = lumped_mass(m);
    MultiField lifted(dual.type_count(), m.node_count());
    for (int l = 0; l < dual.type_count(); ++l)
        lifted.c[l] = dual.c[l].cwiseQuotient(w);
    return l1_norm_nodal(m, lifted);
}

void write_field_csv(const std::string& path, const std::string& quantity, const Vec& nodal) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_field_csv: cannot open " + path);
    f << "node_index," << quantity << "\n";
    for (int i = 0; i < nodal.size(); ++i) f << i << "," << format_double(nodal[i]) << "\n";
}

void write_boundary_csv(const std::string& path, const std::string& quantity, const Mesh& m,
                        const Vec& boundary_values) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_boundary_csv: cannot open " + path);
    f << "node_index," << quantity << "\n";
    for (int i = 0; i < m.boundary_node_count(); ++i)
        f << m.boundary_nodes[i] << "," << format_double(boundary_values[i]) << "\n";
}

Vec read_boundary_csv(const std::string& path, const Mesh& m) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_boundary_csv: cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("read_boundary_csv: empty file " + path);
    Vec out = Vec::Zero(m.boundary_node_count());
    int filled = 0;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("read_boundary_csv: malformed row in " + path);
        const int node = std::stoi(line.substr(0, comma));
        const double val = std::stod(line.substr(comma + 1));
        if (node < 0 || node >= m.node_count() || m.node_to_boundary[node] < 0)
            throw std::runtime_error("read_boundary_csv: row is not a boundary node in " + path);
        out[m.node_to_boundary[node]] = val;
        ++filled;
    }
    if (filled == 0) throw std::runtime_error("read_boundary_csv: no rows in " + path);
    return out;
}

}  // namespace idsm
