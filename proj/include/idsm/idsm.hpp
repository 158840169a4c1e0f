#pragma once

#include <cstdint>
#include <vector>

#include "idsm/dtn.hpp"
#include "idsm/fem.hpp"
#include "idsm/mesh.hpp"
#include "idsm/resolver.hpp"

namespace idsm {

// One Cauchy pair: flux applied on the full boundary, measured trace on the
// accessible part (zero elsewhere). Both on the reconstruction mesh.
struct Dataset {
    Vec flux;
    Vec y_d;
};

// Completed boundary data: the measurement where the boundary is accessible,
// the current state's trace where it is not.
Vec complete_data(const Mesh& mesh, const BoundaryPartition& part, const Vec& y_d,
                  const Vec& y_state);

// Pointwise clamp onto the admissible boxes.
MultiField project(const MultiField& eta, const std::vector<InclusionType>& boxes);

struct IterationRecord {
    int k = 0;
    MultiField u;    // iterate
    MultiField eta;  // pre-projection index function (zero at k = 0)
    // damping parameter computed while producing this iterate (k >= 1 until
    // the final iterate, which skips the update branch)
    double lambda = 0.0;
    double damping_factor = 1.0;
    bool update_applied = false;
    double pairing_s1 = 0.0;          // <zeta_hat, eta_hat>
    double secant_error = 0.0;        // ||R zeta_hat - eta_hat|| / ||eta_hat||
    double probe_max_ratio = 0.0;     // worst spectral-bound probe, <= 1 expected
    long pde_solve_count = 0;         // cumulative, per Cauchy pair
    std::vector<double> residuals;    // ||completed data - background trace||_L2(Gamma)
    std::vector<double> c_d;          // diagonal scaling per type
    int term_count = 0;
};

struct ReconstructionOptions {
    HrDtnParams hrdtn;
    double p_index = 2.0;
    UpdateScheme scheme = UpdateScheme::Bfg;
    double eps_band = 0.1;
    int max_iter = 12;
    int probe_count = 50;
    std::uint64_t probe_seed = 0x70726f6265u;
};

struct RunResult {
    std::vector<IterationRecord> records;  // k = 0 .. max_iter
    long solves_per_pair = 0;
    long solves_total = 0;
};

// Full fixed-point reconstruction loop. Deterministic for fixed inputs.
RunResult run_reconstruction(const ProblemSpec& problem, const Mesh& fine, const CoarseMap& cmap,
                             const BoundaryPartition& part, const std::vector<Dataset>& data,
                             const ReconstructionOptions& opt);

// Expected per-pair solve tally: 5K-1 when the background operator is linear,
// 6K-2 when it depends on the state.
long expected_solves(const ProblemSpec& problem, int max_iter);

}  // namespace idsm
