#include "idsm/dtn.hpp"

#include <Eigen/SparseCholesky>

#include "idsm/util.hpp"

namespace idsm {

HrDtnOperator::HrDtnOperator(const Mesh& mesh, const BoundaryPartition& part, HrDtnParams params,
                             const SpMat& A, bool gauge)
    : mesh_(&mesh), part_(&part), params_(params), gauge_(gauge) {
    if (!(params.alpha_d > 0.0) || !(params.alpha_n > 0.0))
        throw std::invalid_argument("hrdtn: regularization parameters must be positive");
    n_ = mesh.node_count();
    nb_ = mesh.boundary_node_count();
    M_ = boundary_mass(mesh);
    const SpMat Ma = boundary_mass_weighted(mesh, part, params.alpha_d, params.alpha_n);

    const int size = n_ + nb_ + (gauge_ ? 1 : 0);
    std::vector<Eigen::Triplet<double>> tr;
    tr.reserve(A.nonZeros() + 4 * M_.nonZeros() + 4 * nb_);
    for (int k = 0; k < A.outerSize(); ++k)
        for (SpMat::InnerIterator it(A, k); it; ++it) tr.emplace_back(it.row(), it.col(), it.value());
    // coupling blocks: -T' M (top right), M T (bottom left)
    for (int k = 0; k < M_.outerSize(); ++k)
        for (SpMat::InnerIterator it(M_, k); it; ++it) {
            const int vol_col = mesh.boundary_nodes[it.col()];
            tr.emplace_back(vol_col, n_ + it.row(), -it.value());
            tr.emplace_back(n_ + it.row(), vol_col, it.value());
        }
    for (int k = 0; k < Ma.outerSize(); ++k)
        for (SpMat::InnerIterator it(Ma, k); it; ++it)
            tr.emplace_back(n_ + it.row(), n_ + it.col(), it.value());
    if (gauge_) {
        const Vec g = boundary_lumped(mesh);
        for (int i = 0; i < nb_; ++i) {
            tr.emplace_back(mesh.boundary_nodes[i], n_ + nb_, g[i]);
            tr.emplace_back(n_ + nb_, mesh.boundary_nodes[i], g[i]);
        }
    }
    block_ = SpMat(size, size);
    block_.setFromTriplets(tr.begin(), tr.end());
    block_.makeCompressed();

    lu_ = std::make_unique<Eigen::SparseLU<SpMat>>();
    lu_->compute(block_);
    if (lu_->info() != Eigen::Success) throw SolverError("hrdtn: block factorization failed");
}

HrDtnOperator::Solution HrDtnOperator::solve(const Vec& v) const {
    if (v.size() != nb_) throw std::invalid_argument("hrdtn: data size mismatch");
    Vec rhs = Vec::Zero(block_.rows());
    rhs.segment(n_, nb_) = M_ * v;
    Vec sol = lu_->solve(rhs);
    const double rn = (block_ * sol - rhs).norm();
    const double scale = std::max(rhs.norm(), 1e-300);
    if (rn > 1e-8 * scale) throw SolverError("hrdtn: large residual", rn / scale);
    Solution out;
    out.w = sol.head(n_);
    out.p = sol.segment(n_, nb_);
    return out;
}

HrDtnOperator::Solution solve_hrdtn(const SpMat& A, const Mesh& mesh,
                                    const BoundaryPartition& part, HrDtnParams params,
                                    const Vec& v, bool gauge) {
    return HrDtnOperator(mesh, part, params, A, gauge).solve(v);
}

MultiField adjoint_lift(const ProblemSpec& problem, const HrDtnOperator& dtn, const Vec& y_state,
                        const Vec& v) {
    // two chained solves; the second is the adjoint system folded back onto
    // the primal factorization by a sign flip of the interior state
    const auto first = dtn.solve(v);
    const auto second = dtn.solve(first.p);
    return inclusion_adjoint_density(problem, dtn.mesh(), y_state, second.w);
}

MultiField adjoint_lift(const ProblemSpec& problem, const Mesh& mesh,
                        const BoundaryPartition& part, HrDtnParams params, const Vec& y_state,
                        const Vec& v) {
    const SpMat A = assemble_background(problem, mesh, &y_state);
    HrDtnOperator dtn(mesh, part, params, A, problem.model == Model::Eit);
    return adjoint_lift(problem, dtn, y_state, v);
}

Vec apply_scatter_map(const ProblemSpec& problem, const Mesh& mesh, const Vec& y_state,
                      const MultiField& q) {
    const SpMat A = assemble_background(problem, mesh, &y_state);
    const Vec rhs = inclusion_load(problem, mesh, q, y_state);
    Vec z;
    if (problem.model == Model::Eit) {
        const int n = mesh.node_count();
        std::vector<Eigen::Triplet<double>> tr;
        for (int k = 0; k < A.outerSize(); ++k)
            for (SpMat::InnerIterator it(A, k); it; ++it)
                tr.emplace_back(it.row(), it.col(), it.value());
        const Vec g = boundary_lumped(mesh);
        for (int i = 0; i < mesh.boundary_node_count(); ++i) {
            tr.emplace_back(mesh.boundary_nodes[i], n, g[i]);
            tr.emplace_back(n, mesh.boundary_nodes[i], g[i]);
        }
        SpMat Aug(n + 1, n + 1);
        Aug.setFromTriplets(tr.begin(), tr.end());
        Eigen::SparseLU<SpMat> lu(Aug);
        if (lu.info() != Eigen::Success) throw SolverError("scatter map: LU failed");
        Vec rhs_aug = Vec::Zero(n + 1);
        rhs_aug.head(n) = rhs;
        z = lu.solve(rhs_aug).head(n);
    } else {
        Eigen::SimplicialLDLT<SpMat> chol(A);
        if (chol.info() != Eigen::Success) throw SolverError("scatter map: factorization failed");
        z = chol.solve(rhs);
    }
    Vec out(mesh.boundary_node_count());
    for (int i = 0; i < mesh.boundary_node_count(); ++i) out[i] = z[mesh.boundary_nodes[i]];
    return out;
}

MultiField aggregate_duals(const std::vector<MultiField>& per_dataset) {
    if (per_dataset.empty()) throw std::invalid_argument("aggregate_duals: empty input");
    MultiField out = per_dataset[0];
    for (std::size_t i = 1; i < per_dataset.size(); ++i) {
        if (per_dataset[i].type_count() != out.type_count())
            throw std::invalid_argument("aggregate_duals: mismatched type lists");
        for (int l = 0; l < out.type_count(); ++l) {
            if (per_dataset[i].c[l].size() != out.c[l].size())
                throw std::invalid_argument("aggregate_duals: mismatched field sizes");
            out.c[l] += per_dataset[i].c[l];
        }
    }
    return out;
}

}  // namespace idsm
