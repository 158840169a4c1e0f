#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "idsm/idsm.hpp"
#include "idsm/models.hpp"
#include "idsm/util.hpp"

using namespace idsm;

namespace {
constexpr double kPi = std::numbers::pi;

struct Instance {
    ProblemSpec problem;
    Mesh fine;
    Mesh coarse;
    CoarseMap cmap;
    BoundaryPartition part;
    std::vector<Dataset> data;

    Instance(Model model, const std::vector<InclusionShape>& truth,
             const std::vector<std::string>& fluxes, double eps, std::uint64_t seed,
             int fine_target = 1500, int coarse_target = 200)
        : problem(make_problem(model)),
          fine(build_disk_mesh(fine_target)),
          coarse(build_disk_mesh(coarse_target)),
          cmap(build_coarse_map(fine, coarse)),
          part(partition_boundary(fine, {{-kPi / 2.0, kPi / 2.0}})) {
        const Mesh data_mesh = refine_uniform(fine);
        const MultiField u_star = rasterize(truth, data_mesh, problem.type_count());
        Rng rng(seed);
        for (const auto& fx : fluxes) {
            Dataset ds;
            ds.flux = sample_flux(fine, fx);
            ds.y_d = synthesize_data(problem, data_mesh, u_star, sample_flux(data_mesh, fx),
                                     fine, part, eps, rng);
            data.push_back(std::move(ds));
        }
    }
};
}  // namespace

TEST_CASE("complete_data splices measured and simulated traces") {
    const Mesh m = build_disk_mesh(600);
    const BoundaryPartition part = partition_boundary(m, {{-kPi / 2.0, kPi / 2.0}});
    const Vec y_state = Vec::Constant(m.node_count(), 2.0);
    Vec y_d = Vec::Zero(m.boundary_node_count());
    for (int i = 0; i < m.boundary_node_count(); ++i)
        if (part.node_labels[i] == 'D') y_d[i] = 1.0;
    const Vec completed = complete_data(m, part, y_d, y_state);
    for (int i = 0; i < m.boundary_node_count(); ++i)
        CHECK(completed[i] == (part.node_labels[i] == 'D' ? 1.0 : 2.0));

    // full access: y_d everywhere
    const BoundaryPartition full = partition_boundary(m, {{0.0, 2.0 * kPi}});
    const Vec c2 = complete_data(m, full, y_d, y_state);
    CHECK((c2 - y_d).cwiseAbs().maxCoeff() == 0.0);

    // consistent state: completion reproduces the full trace
    Vec tr = trace_part(m, part, y_state, TracePart::D);
    const Vec c3 = complete_data(m, part, tr, y_state);
    const Vec want = trace_part(m, part, y_state, TracePart::Full);
    CHECK((c3 - want).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("projection clamps nodal values") {
    const std::vector<InclusionType> box = {{"conductivity", -0.99, 0.0, 4.0}};
    MultiField eta(1, 5);
    eta.c[0] << -5.0, 0.5, -0.5, -0.99, 0.0;
    const MultiField u = project(eta, box);
    CHECK(u.c[0][0] == -0.99);
    CHECK(u.c[0][1] == 0.0);
    CHECK(u.c[0][2] == -0.5);
    CHECK(u.c[0][3] == -0.99);
    CHECK(u.c[0][4] == 0.0);

    Rng rng(3);
    MultiField r(1, 100);
    for (int i = 0; i < 100; ++i) r.c[0][i] = 3.0 * rng.next_symmetric();
    const MultiField pr = project(r, box);
    for (int i = 0; i < 100; ++i)
        CHECK(pr.c[0][i] == std::min(std::max(r.c[0][i], -0.99), 0.0));
}

TEST_CASE("expected solve tallies") {
    CHECK(expected_solves(make_problem(Model::Eit), 10) == 49);
    CHECK(expected_solves(make_problem(Model::Dot), 12) == 59);
    CHECK(expected_solves(make_problem(Model::Modulus), 12) == 59);
    CHECK(expected_solves(make_problem(Model::Ce), 12) == 70);
    CHECK(expected_solves(make_problem(Model::Eit), 1) == 4);
    CHECK(expected_solves(make_problem(Model::Ce), 1) == 4);
}

TEST_CASE("solve-count audit matches the tally for linear and semilinear models") {
    ReconstructionOptions opt;
    opt.max_iter = 3;
    opt.probe_count = 5;

    {
        Instance inst(Model::Eit, {make_disk(0, -0.9, 0.4, 0.0, 0.2)},
                      {"sin(4*pi*x1)+0.5", "cos(4*pi*x2)+0.5"}, 0.15, 7, 800, 120);
        const RunResult run =
            run_reconstruction(inst.problem, inst.fine, inst.cmap, inst.part, inst.data, opt);
        CHECK(run.solves_per_pair == expected_solves(inst.problem, opt.max_iter));
        CHECK(run.solves_total == 2 * run.solves_per_pair);
        CHECK(static_cast<int>(run.records.size()) == opt.max_iter + 1);
        // strictly increasing cumulative counts
        for (std::size_t k = 1; k < run.records.size(); ++k)
            CHECK(run.records[k].pde_solve_count > run.records[k - 1].pde_solve_count);
    }
    {
        Instance inst(Model::Ce, {make_disk(0, 1.0, 0.3, 0.2, 0.25)},
                      {"1.1-x2^2", "x2^2"}, 0.15, 7, 800, 120);
        const RunResult run =
            run_reconstruction(inst.problem, inst.fine, inst.cmap, inst.part, inst.data, opt);
        CHECK(run.solves_per_pair == expected_solves(inst.problem, opt.max_iter));
    }
}

TEST_CASE("single iteration skips the update branch") {
    ReconstructionOptions opt;
    opt.max_iter = 1;
    opt.probe_count = 0;
    Instance inst(Model::Dot, {make_disk(0, -0.9, 0.4, 0.0, 0.2)}, {"sin(4*pi*x1)+0.5"}, 0.15,
                  7, 800, 120);
    const RunResult run =
        run_reconstruction(inst.problem, inst.fine, inst.cmap, inst.part, inst.data, opt);
    CHECK(run.records.size() == 2);
    CHECK(run.solves_per_pair == 4);
    CHECK_FALSE(run.records[1].update_applied);
    CHECK(run.records[1].term_count == 0);
}

TEST_CASE("zero problem stays at zero for every model") {
    ReconstructionOptions opt;
    opt.max_iter = 8;
    opt.probe_count = 3;
    for (Model model : {Model::Eit, Model::Dot, Model::Ce, Model::Modulus}) {
        const ProblemSpec problem = make_problem(model);
        const Mesh fine = build_disk_mesh(700);
        const Mesh coarse = build_disk_mesh(100);
        const CoarseMap cmap = build_coarse_map(fine, coarse);
        const BoundaryPartition part = partition_boundary(fine, {{-kPi / 2.0, kPi / 2.0}});
        const MultiField zero(problem.type_count(), fine.node_count());

        std::vector<Dataset> data;
        Dataset ds;
        ds.flux = sample_flux(fine, model == Model::Ce ? "1.1-x2^2" : "sin(4*pi*x1)+0.5");
        const Vec y0 = solve_forward(problem, fine, zero, ds.flux);
        ds.y_d = trace_part(fine, part, y0, TracePart::D);
        data.push_back(std::move(ds));

        const RunResult run = run_reconstruction(problem, fine, cmap, part, data, opt);
        for (const auto& rec : run.records) {
            for (const Vec& u : rec.u.c) CHECK(u.cwiseAbs().maxCoeff() <= 1e-6);
            CHECK(rec.lambda >= 0.0);
        }
        // the dual of the zero scattering field vanishes to solver precision
        CHECK(run.records[1].eta.c[0].cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("identical inputs give bitwise identical traces") {
    ReconstructionOptions opt;
    opt.max_iter = 4;
    opt.probe_count = 5;
    Instance a(Model::Dot, {make_disk(0, -0.9, 0.4, 0.0, 0.2), make_disk(1, 10.0, -0.3, 0.0, 0.2)},
               {"sin(4*pi*x1)+0.5", "cos(4*pi*x2)+0.5"}, 0.15, 7, 800, 120);
    Instance b(Model::Dot, {make_disk(0, -0.9, 0.4, 0.0, 0.2), make_disk(1, 10.0, -0.3, 0.0, 0.2)},
               {"sin(4*pi*x1)+0.5", "cos(4*pi*x2)+0.5"}, 0.15, 7, 800, 120);
    const RunResult r1 = run_reconstruction(a.problem, a.fine, a.cmap, a.part, a.data, opt);
    const RunResult r2 = run_reconstruction(b.problem, b.fine, b.cmap, b.part, b.data, opt);
    REQUIRE(r1.records.size() == r2.records.size());
    for (std::size_t k = 0; k < r1.records.size(); ++k) {
        CHECK(r1.records[k].lambda == r2.records[k].lambda);
        for (int l = 0; l < 2; ++l)
            CHECK((r1.records[k].u.c[l] - r2.records[k].u.c[l]).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("iteration invariants on a noisy reconstruction") {
    ReconstructionOptions opt;
    opt.max_iter = 6;
    opt.probe_count = 10;
    for (UpdateScheme scheme : {UpdateScheme::Dfp, UpdateScheme::Bfg}) {
        opt.scheme = scheme;
        Instance inst(Model::Eit, {make_disk(0, -0.9, 0.4, 0.0, 0.2)},
                      {"sin(4*pi*x1)+0.5", "cos(4*pi*x2)+0.5"}, 0.15, 11, 1500, 200);
        const RunResult run =
            run_reconstruction(inst.problem, inst.fine, inst.cmap, inst.part, inst.data, opt);

        bool first_update = true;
        for (const auto& rec : run.records) {
            // box constraints hold at every iterate
            for (int i = 0; i < inst.fine.node_count(); ++i) {
                CHECK(rec.u.c[0][i] >= -0.99);
                CHECK(rec.u.c[0][i] <= 0.0);
            }
            if (rec.k >= 1 && rec.k <= opt.max_iter - 1) {
                CHECK(rec.update_applied);
                CHECK(rec.pairing_s1 > 0.0);
                CHECK(rec.secant_error <= 1e-10);
                CHECK(rec.lambda >= 0.0);
                CHECK(rec.probe_max_ratio <= 1.0 + 1e-12);
                if (first_update) {
                    CHECK(rec.lambda == 1.0);  // calibrated first value
                    first_update = false;
                }
            }
        }
    }
}
