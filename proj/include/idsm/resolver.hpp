#pragma once

#include "idsm/dtn.hpp"
#include "idsm/fem.hpp"
#include "idsm/mesh.hpp"

namespace idsm {

// Diagonal part of the resolver for one inclusion type: D = c_d * shape with
// shape(x) = || Phi_x * a/(1+a) + |grad Phi_x| * 1/(1+a) ||_{L2(Gamma)}^{-gamma}
// cut off to zero inside the eps_band boundary layer.
struct DiagComponent {
    Vec shape;          // per node, includes the cutoff
    double c_d = 1.0;   // rescaled every iteration
    double gamma = 2.0;
    double eps_band = 0.1;

    double max_value() const { return c_d * shape.maxCoeff(); }
};

DiagComponent build_diag(const Mesh& mesh, const BoundaryPartition& part, HrDtnParams params,
                         double gamma, double eps_band);

enum class UpdateScheme { Dfp, Bfg };

UpdateScheme scheme_from_string(const std::string& s);
std::string scheme_to_string(UpdateScheme s);

// One rank-one correction term coeff * (left x right): applied to a dual zeta
// as coeff * damp * <right, zeta> * left.
struct RankOneTerm {
    MultiField left, right;  // nodal fields
    double coeff = 0.0;
    double damp = 1.0;   // product of the 1/(1+lambda) factors seen so far
    bool fresh = true;   // not yet coarse-projected by the stabilizer
};

class ResolverState {
  public:
    ResolverState(const Mesh& fine, const CoarseMap& cmap, std::vector<DiagComponent> diag,
                  double p_index, UpdateScheme scheme);

    const Mesh& mesh() const { return *mesh_; }
    const CoarseMap& coarse_map() const { return *cmap_; }
    int type_count() const { return static_cast<int>(diag_.size()); }

    std::vector<DiagComponent>& diag() { return diag_; }
    const std::vector<DiagComponent>& diag() const { return diag_; }
    std::vector<RankOneTerm>& terms() { return terms_; }
    const std::vector<RankOneTerm>& terms() const { return terms_; }

    double lambda_prev = 0.0;
    double c_lambda = 0.0;
    bool calibrated = false;
    double p_index = 2.0;
    UpdateScheme scheme = UpdateScheme::Bfg;

    double h_min() const { return cmap_->h_min; }
    double max_diag() const;

    // node -> (coarse cell, partition-of-unity weight) table
    const std::vector<std::vector<std::pair<int, double>>>& cell_weights() const {
        return weights_;
    }

  private:
    const Mesh* mesh_;
    const CoarseMap* cmap_;
    std::vector<DiagComponent> diag_;
    std::vector<RankOneTerm> terms_;
    std::vector<std::vector<std::pair<int, double>>> weights_;
};

// Diagonal (singular) part: multiply the density by sqrt(D), average over
// coarse cells with the 1/sqrt(|Q|) normalization on both sides, multiply by
// sqrt(D) again. Input densities are load vectors; output is nodal.
MultiField apply_R0(const ResolverState& st, const MultiField& zeta_dual);

// Stabilizer (the D = 1 averaging), for a dual density or a nodal field.
Vec apply_stabilizer_dual(const ResolverState& st, const Vec& dual);
Vec apply_stabilizer_nodal(const ResolverState& st, const Vec& nodal);

// Full resolver: diagonal part plus the damped rank-one corrections.
MultiField apply_resolver(const ResolverState& st, const MultiField& zeta_dual);

// Coarse-projects the factors of the newest correction, then discounts every
// correction by 1/(1 + lambda_prev).
void stabilize(ResolverState& st);

// Clamp-aware auxiliary index: matches the resolver output where the iterate
// saturated its box and the iterate elsewhere, then blends toward the iterate
// just enough to keep <zeta_hat, eta_hat> positive.
MultiField auxiliary_index(const MultiField& u_next, const MultiField& R_zeta,
                           const MultiField& zeta_hat, const std::vector<InclusionType>& boxes);

// Appends the DFP (2 terms) or BFG (3 terms) correction enforcing
// apply_resolver(zeta_hat) = eta_hat.
void lowrank_update(ResolverState& st, const MultiField& eta_hat, const MultiField& zeta_hat);

// Rescales each type's diagonal so that ||D zeta_hat||_L1 = ||eta_hat||_L1.
// Returns false (and keeps the previous scaling) on a zero denominator.
bool update_scaling(ResolverState& st, const MultiField& eta_hat, const MultiField& zeta_hat);

// Damping parameter of the configured scheme. The first call fixes c_lambda
// so the first value is exactly 1.
double compute_damping(ResolverState& st, const MultiField& eta_hat, const MultiField& zeta_hat,
                       const MultiField& R_zeta);

// l1 norm of a dual load vector (the (L^inf)' realization used by the
// spectral bound).
double dual_l1(const MultiField& dual);

// <xi, R~ xi> / (bound * ||xi||_1^2) for the spectral-bound probes; the bound
// is h^{-1}||D||_inf plus (c_lambda h^2)^{-1} once corrections exist.
double probe_bound_ratio(const ResolverState& st, const MultiField& xi);

}  // namespace idsm
