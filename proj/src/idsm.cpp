#include "idsm/idsm.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <cmath>

#include "idsm/util.hpp"

namespace idsm {

Vec complete_data(const Mesh& mesh, const BoundaryPartition& part, const Vec& y_d,
                  const Vec& y_state) {
    Vec out(mesh.boundary_node_count());
    for (int i = 0; i < mesh.boundary_node_count(); ++i)
        out[i] = part.node_labels[i] == 'D' ? y_d[i] : y_state[mesh.boundary_nodes[i]];
    return out;
}

MultiField project(const MultiField& eta, const std::vector<InclusionType>& boxes) {
    MultiField out = eta;
    for (int l = 0; l < out.type_count(); ++l)
        out.c[l] = out.c[l].cwiseMax(boxes[l].lo).cwiseMin(boxes[l].hi);
    return out;
}

long expected_solves(const ProblemSpec& problem, int max_iter) {
    return problem.linear_A ? 5L * max_iter - 1 : 6L * max_iter - 2;
}

namespace {

Vec full_trace(const Mesh& m, const Vec& y) {
    Vec out(m.boundary_node_count());
    for (int i = 0; i < m.boundary_node_count(); ++i) out[i] = y[m.boundary_nodes[i]];
    return out;
}

double boundary_l2(const SpMat& Mb, const Vec& v) { return std::sqrt(v.dot(Mb * v)); }

double linf(const MultiField& f) {
    double m = 0.0;
    for (const Vec& v : f.c) if (v.size() > 0) m = std::max(m, v.cwiseAbs().maxCoeff());
    return m;
}

// Forward solves for all datasets at one iterate; linear models share a
// single factorization.
class ForwardSolver {
  public:
    ForwardSolver(const ProblemSpec& p, const Mesh& m, const std::vector<Dataset>& data)
        : p_(p), m_(m), data_(data) {
        loads_.reserve(data.size());
        for (const auto& ds : data) {
            Vec f = ds.flux;
            if (p.model == Model::Eit) f = f.array() - boundary_mean(m, f);
            loads_.push_back(boundary_load(m, f));
        }
    }

    std::vector<Vec> solve_all(const MultiField& u) const {
        std::vector<Vec> out;
        out.reserve(data_.size());
        if (p_.semilinear) {
            for (const auto& ds : data_) out.push_back(solve_forward(p_, m_, u, ds.flux));
            return out;
        }
        const SpMat A = assemble(p_, m_, u, nullptr);
        if (p_.model == Model::Eit) {
            const int n = m_.node_count();
            std::vector<Eigen::Triplet<double>> tr;
            for (int k = 0; k < A.outerSize(); ++k)
                for (SpMat::InnerIterator it(A, k); it; ++it)
                    tr.emplace_back(it.row(), it.col(), it.value());
            const Vec g = boundary_lumped(m_);
            for (int i = 0; i < m_.boundary_node_count(); ++i) {
                tr.emplace_back(m_.boundary_nodes[i], n, g[i]);
                tr.emplace_back(n, m_.boundary_nodes[i], g[i]);
            }
            SpMat Aug(n + 1, n + 1);
            Aug.setFromTriplets(tr.begin(), tr.end());
            Eigen::SparseLU<SpMat> lu(Aug);
            if (lu.info() != Eigen::Success) throw SolverError("forward: LU failed");
            for (const Vec& load : loads_) {
                Vec rhs = Vec::Zero(n + 1);
                rhs.head(n) = load;
                out.push_back(lu.solve(rhs).head(n));
            }
        } else {
            Eigen::SimplicialLDLT<SpMat> chol(A);
            if (chol.info() != Eigen::Success)
                throw SolverError("forward: factorization failed");
            for (const Vec& load : loads_) {
                Vec sol = chol.solve(load);
                const double rn = (A * sol - load).norm();
                if (rn > 1e-8 * std::max(load.norm(), 1e-300))
                    throw SolverError("forward: large residual", rn);
                out.push_back(std::move(sol));
            }
        }
        return out;
    }

  private:
    const ProblemSpec& p_;
    const Mesh& m_;
    const std::vector<Dataset>& data_;
    std::vector<Vec> loads_;
};

}  // namespace

RunResult run_reconstruction(const ProblemSpec& problem, const Mesh& fine, const CoarseMap& cmap,
                             const BoundaryPartition& part, const std::vector<Dataset>& data,
                             const ReconstructionOptions& opt) {
    if (data.empty()) throw std::invalid_argument("run_reconstruction: no datasets");
    if (opt.max_iter < 1) throw std::invalid_argument("run_reconstruction: max_iter must be >= 1");
    const int K = opt.max_iter;
    const int I = static_cast<int>(data.size());
    const int L = problem.type_count();
    const int n = fine.node_count();
    const bool nonlinear_A = !problem.linear_A;

    RunResult result;
    long solves = 0;  // per Cauchy pair

    const SpMat Mb = boundary_mass(fine);
    ForwardSolver forward(problem, fine, data);

    // resolver with one diagonal component per inclusion type
    std::vector<DiagComponent> diags;
    for (const auto& type : problem.types)
        diags.push_back(build_diag(fine, part, opt.hrdtn, type.gamma, opt.eps_band));
    ResolverState state(fine, cmap, std::move(diags), opt.p_index, opt.scheme);

    Rng probe_rng(opt.probe_seed);
    auto run_probes = [&]() {
        double worst = 0.0;
        for (int r = 0; r < opt.probe_count; ++r) {
            MultiField xi(L, n);
            for (int l = 0; l < L; ++l)
                for (int i = 0; i < n; ++i) xi.c[l][i] = probe_rng.next_symmetric();
            worst = std::max(worst, probe_bound_ratio(state, xi));
        }
        return worst;
    };

    // initialization: u0 = 0; for u = 0 the inclusion term vanishes, so the
    // forward solution doubles as the background solution (one solve)
    MultiField u(L, n);
    std::vector<Vec> y = forward.solve_all(u);
    solves += 1;
    std::vector<Vec> y_bg = y;

    // HR-DtN operators; a single factorization serves every iterate when the
    // background operator is state-independent
    std::vector<std::unique_ptr<HrDtnOperator>> dtn(I);
    auto refresh_dtn = [&]() {
        if (problem.linear_A && dtn[0]) return;
        for (int i = 0; i < I; ++i) {
            const SpMat A = assemble_background(problem, fine, &y[i]);
            dtn[i] =
                std::make_unique<HrDtnOperator>(fine, part, opt.hrdtn, A, problem.model == Model::Eit);
            if (problem.linear_A) {
                for (int j = 1; j < I; ++j) dtn[j] = nullptr;  // share the first
                break;
            }
        }
    };
    auto dtn_for = [&](int i) -> const HrDtnOperator& {
        return problem.linear_A ? *dtn[0] : *dtn[i];
    };

    {
        IterationRecord rec;
        rec.k = 0;
        rec.u = u;
        rec.eta = MultiField(L, n);
        rec.pde_solve_count = solves;
        rec.residuals.assign(I, 0.0);
        for (const auto& d : state.diag()) rec.c_d.push_back(d.c_d);
        result.records.push_back(std::move(rec));
    }

    for (int k = 0; k < K; ++k) {
        refresh_dtn();

        // data completion and dual lift, aggregated over datasets
        std::vector<MultiField> duals;
        duals.reserve(I);
        for (int i = 0; i < I; ++i) {
            const Vec completed = complete_data(fine, part, data[i].y_d, y[i]);
            const Vec v = full_trace(fine, y_bg[i]) - completed;
            result.records[k].residuals[i] = boundary_l2(Mb, v);
            duals.push_back(adjoint_lift(problem, dtn_for(i), y[i], v));
        }
        solves += 2;
        const MultiField zeta = aggregate_duals(duals);

        MultiField eta = apply_resolver(state, zeta);
        if (k == 0) {
            // Anchor the first index inside the admissible box (the kernel-norm
            // diagonal alone carries an arbitrary overall scale). Only ever
            // scale down, so a zero dual stays zero.
            for (int l = 0; l < L; ++l) {
                const double amp =
                    0.5 * std::max(std::abs(problem.types[l].lo), std::abs(problem.types[l].hi));
                const double m = eta.c[l].size() ? eta.c[l].cwiseAbs().maxCoeff() : 0.0;
                if (m > amp) {
                    state.diag()[l].c_d *= amp / m;
                    eta.c[l] *= amp / m;
                }
            }
        }
        const MultiField u_next = project(eta, problem.types);
        y = forward.solve_all(u_next);
        solves += 1;

        IterationRecord rec;
        rec.k = k + 1;
        rec.u = u_next;
        rec.eta = eta;
        rec.residuals.assign(I, 0.0);

        if (k != K - 1) {
            if (nonlinear_A) {
                for (int i = 0; i < I; ++i)
                    y_bg[i] = solve_background(problem, fine, data[i].flux, &y[i]);
                solves += 1;
            }
            refresh_dtn();

            std::vector<MultiField> aux_duals;
            aux_duals.reserve(I);
            for (int i = 0; i < I; ++i) {
                const Vec yhat_s = full_trace(fine, y_bg[i]) - full_trace(fine, y[i]);
                aux_duals.push_back(adjoint_lift(problem, dtn_for(i), y[i], yhat_s));
            }
            solves += 2;
            const MultiField zeta_hat = aggregate_duals(aux_duals);

            stabilize(state);
            // Bring the diagonal onto the scale of the first iterate before any
            // correction exists; the kernel-norm shape alone is orders of
            // magnitude off, which would poison the first rank-one terms.
            if (k == 0) update_scaling(state, u_next, zeta_hat);
            rec.probe_max_ratio = opt.probe_count > 0 ? run_probes() : 0.0;

            const MultiField R_zeta = apply_resolver(state, zeta_hat);
            const MultiField eta_hat = auxiliary_index(u_next, R_zeta, zeta_hat, problem.types);
            const double s1 = pairing(zeta_hat, eta_hat);
            const double s2 = pairing(zeta_hat, R_zeta);
            rec.pairing_s1 = s1;

            // an all-but-zero auxiliary dual carries no usable correction
            const double floor1 = 64.0 * 1e-16 * dual_l1(zeta_hat) * std::max(linf(eta_hat), 1e-300);
            const double floor2 = 64.0 * 1e-16 * dual_l1(zeta_hat) * std::max(linf(R_zeta), 1e-300);
            const bool degenerate = !(s1 > floor1) || !(s2 > floor2);

            double lambda = 0.0;
            if (!degenerate) {
                lowrank_update(state, eta_hat, zeta_hat);
                const MultiField check = apply_resolver(state, zeta_hat);
                double num = 0.0, den = 0.0;
                for (int l = 0; l < L; ++l) {
                    num += (check.c[l] - eta_hat.c[l]).squaredNorm();
                    den += eta_hat.c[l].squaredNorm();
                }
                rec.secant_error = den > 0.0 ? std::sqrt(num / den) : 0.0;
                update_scaling(state, eta_hat, zeta_hat);
                lambda = compute_damping(state, eta_hat, zeta_hat, R_zeta);
                rec.update_applied = true;
            }
            state.lambda_prev = lambda;
            rec.lambda = lambda;
            rec.damping_factor = 1.0 / (1.0 + lambda);
        }

        rec.pde_solve_count = solves;
        rec.term_count = static_cast<int>(state.terms().size());
        for (const auto& d : state.diag()) rec.c_d.push_back(d.c_d);
        result.records.push_back(std::move(rec));
    }

    // residuals at the final iterate, using the last available background
    auto& last = result.records.back();
    for (int i = 0; i < I; ++i) {
        const Vec completed = complete_data(fine, part, data[i].y_d, y[i]);
        const Vec v = full_trace(fine, y_bg[i]) - completed;
        last.residuals[i] = boundary_l2(Mb, v);
    }

    result.solves_per_pair = solves;
    result.solves_total = solves * I;
    return result;
}

}  // namespace idsm
