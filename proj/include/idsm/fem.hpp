#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <optional>
#include <string>
#include <vector>

#include "idsm/mesh.hpp"

namespace idsm {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

// One nodal field per inclusion type.
struct MultiField {
    std::vector<Vec> c;

    MultiField() = default;
    MultiField(int types, int n) : c(types, Vec::Zero(n)) {}
    int type_count() const { return static_cast<int>(c.size()); }
    bool empty() const { return c.empty(); }
};

// <dual, nodal> pairing, summed over types: the dual carries load-vector
// entries (density tested against the P1 basis).
double pairing(const MultiField& dual, const MultiField& nodal);

enum class Model { Eit, Dot, Ce, Modulus };

Model model_from_string(const std::string& s);
std::string model_to_string(Model m);

struct InclusionType {
    std::string name;  // "conductivity" | "potential" | "mixed" | "modulus"
    double lo = 0.0;
    double hi = 0.0;
    double gamma = 2.0;
};

struct ProblemSpec {
    Model model = Model::Dot;
    double c0 = 1.0;  // background conductivity
    double p0 = 0.0;  // background potential
    std::vector<InclusionType> types;
    bool semilinear = false;  // forward solve needs Newton
    bool linear_A = true;     // background operator independent of the state

    int type_count() const { return static_cast<int>(types.size()); }
    void validate_admissible(const MultiField& u) const;
};

enum class TracePart { D, N, Full };

// --- assembly -------------------------------------------------------------

// Consistent boundary mass matrix on the boundary-node ordering.
SpMat boundary_mass(const Mesh& m);
// Boundary mass with alpha_d / alpha_n edge weights.
SpMat boundary_mass_weighted(const Mesh& m, const BoundaryPartition& part, double alpha_d,
                             double alpha_n);
// Load vector from a boundary flux (2-point Gauss per edge), size = nodes.
Vec boundary_load(const Mesh& m, const Vec& flux_on_boundary);
// integral over Gamma of a P1 boundary field / boundary length
double boundary_mean(const Mesh& m, const Vec& flux_on_boundary);
// Lumped boundary integral weights (one entry per boundary node).
Vec boundary_lumped(const Mesh& m);
// Lumped volume mass (one entry per node).
Vec lumped_mass(const Mesh& m);

// Newton/system matrix of the full problem linearized at y_lin (required for
// the semilinear models, ignored for the linear ones).
SpMat assemble(const ProblemSpec& p, const Mesh& m, const MultiField& u, const Vec* y_lin);
// Background elliptic operator with the inclusion term dropped; semilinear
// models freeze the state coefficient at y_state.
SpMat assemble_background(const ProblemSpec& p, const Mesh& m, const Vec* y_state);
// Inclusion term B[u](y) tested against the P1 basis (a load vector).
Vec inclusion_load(const ProblemSpec& p, const Mesh& m, const MultiField& u, const Vec& y);
// Adjoint density per type: zeta_l[i] = <B_l[phi_i](y), w>.
MultiField inclusion_adjoint_density(const ProblemSpec& p, const Mesh& m, const Vec& y,
                                     const Vec& w);

// --- solves ----------------------------------------------------------------

struct ForwardStats {
    int newton_iterations = 0;
    double residual = 0.0;  // relative to the load norm
};

// y(u): direct solve for the linear models, Newton with step halving for the
// semilinear ones. EIT fluxes are mean-corrected and the solution gauge is
// zero boundary mean.
Vec solve_forward(const ProblemSpec& p, const Mesh& m, const MultiField& u, const Vec& flux,
                  ForwardStats* stats = nullptr);

// Background solution: the inclusion term dropped, the operator frozen at
// y_state for semilinear models (pass the current forward solution).
Vec solve_background(const ProblemSpec& p, const Mesh& m, const Vec& flux,
                     const Vec* y_state = nullptr);

// Boundary trace, zeroed outside the requested part.
Vec trace_part(const Mesh& m, const BoundaryPartition& part, const Vec& y, TracePart which);

// --- quadrature helpers (3-point edge-midpoint rule) ------------------------

// integral over Omega of |interpolant|^p, summed over types
double lp_norm(const Mesh& m, const MultiField& f, double p);
double l1_norm_nodal(const Mesh& m, const MultiField& f);
// L1 norm of a dual density, lifted to P1 through the lumped mass
double l1_norm_dual(const Mesh& m, const MultiField& dual);

// --- field CSV --------------------------------------------------------------

void write_field_csv(const std::string& path, const std::string& quantity, const Vec& nodal);
void write_boundary_csv(const std::string& path, const std::string& quantity, const Mesh& m,
                        const Vec& boundary_values);
Vec read_boundary_csv(const std::string& path, const Mesh& m);

}  // namespace idsm
