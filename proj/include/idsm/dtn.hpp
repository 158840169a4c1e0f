#pragma once

#include <Eigen/SparseLU>
#include <memory>

#include "idsm/fem.hpp"

namespace idsm {

struct HrDtnParams {
    double alpha_d = 0.05;
    double alpha_n = 2.0;
};

// Heterogeneously regularized DtN map for a fixed elliptic operator A:
//   A w - T' M p          = 0
//   M T w + M_alpha p     = M v
// factorized once as a sparse indefinite block system and reused for every
// right-hand side at the current iterate. For an operator with the constants
// in its kernel (EIT) a zero-boundary-mean gauge row is appended.
class HrDtnOperator {
  public:
    HrDtnOperator(const Mesh& mesh, const BoundaryPartition& part, HrDtnParams params,
                  const SpMat& A, bool gauge);

    struct Solution {
        Vec w;  // interior state, size = nodes
        Vec p;  // boundary output, size = boundary nodes
    };

    // (w, p) with p = Lambda v
    Solution solve(const Vec& v) const;

    const Mesh& mesh() const { return *mesh_; }
    const BoundaryPartition& partition() const { return *part_; }
    const SpMat& boundary_mass_matrix() const { return M_; }
    HrDtnParams params() const { return params_; }

  private:
    const Mesh* mesh_;
    const BoundaryPartition* part_;
    HrDtnParams params_;
    SpMat M_;  // boundary mass
    int n_ = 0, nb_ = 0;
    bool gauge_ = false;
    SpMat block_;
    std::unique_ptr<Eigen::SparseLU<SpMat>> lu_;
};

// Convenience wrapper matching the one-shot call shape.
HrDtnOperator::Solution solve_hrdtn(const SpMat& A, const Mesh& mesh,
                                    const BoundaryPartition& part, HrDtnParams params,
                                    const Vec& v, bool gauge = false);

// Adjoint lift of boundary data v into a dual density, via the two chained
// DtN solves; returns one density per inclusion type. y_state is the current
// forward solution that the inclusion operator is evaluated at.
MultiField adjoint_lift(const ProblemSpec& problem, const HrDtnOperator& dtn, const Vec& y_state,
                        const Vec& v);

// One-shot version that assembles and factorizes internally.
MultiField adjoint_lift(const ProblemSpec& problem, const Mesh& mesh,
                        const BoundaryPartition& part, HrDtnParams params, const Vec& y_state,
                        const Vec& v);

// Forward scattering map: trace of A^{-1} B_tau[y_state] q. Used by the
// adjoint-consistency checks.
Vec apply_scatter_map(const ProblemSpec& problem, const Mesh& mesh, const Vec& y_state,
                      const MultiField& q);

// Component-wise sum over datasets.
MultiField aggregate_duals(const std::vector<MultiField>& per_dataset);

}  // namespace idsm
