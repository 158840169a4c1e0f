#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "idsm/models.hpp"
#include "idsm/util.hpp"

using namespace idsm;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("problem presets carry the documented boxes and amplitudes") {
    const ProblemSpec eit = make_problem(Model::Eit);
    CHECK(eit.types.size() == 1);
    CHECK(eit.types[0].lo == -0.99);
    CHECK(eit.types[0].hi == 0.0);
    CHECK_FALSE(eit.semilinear);
    CHECK(eit.linear_A);

    const ProblemSpec dot = make_problem(Model::Dot);
    CHECK(dot.types.size() == 2);
    CHECK(dot.types[0].lo == -0.99);
    CHECK(dot.types[0].hi == 0.0);
    CHECK(dot.types[1].lo == 0.0);
    CHECK(dot.types[1].hi == 19.0);
    CHECK(dot.c0 == 1.0);
    CHECK(dot.p0 == 1.0);

    const ProblemSpec ce = make_problem(Model::Ce);
    CHECK(ce.types[0].lo == 0.0);
    CHECK(ce.types[0].hi == 1.0);
    CHECK(ce.semilinear);
    CHECK_FALSE(ce.linear_A);

    const ProblemSpec mod = make_problem(Model::Modulus);
    CHECK(mod.types[0].lo == 0.0);
    CHECK(mod.types[0].hi == 60.0);
    CHECK(mod.semilinear);
    CHECK(mod.linear_A);
}

TEST_CASE("rasterize: empty list, disk area, disjoint additivity") {
    const Mesh m = build_disk_mesh(15728);

    const MultiField empty = rasterize({}, m, 1);
    CHECK(empty.c[0].cwiseAbs().maxCoeff() == 0.0);

    const auto disk = make_disk(0, -0.9, 0.4, 0.0, 0.2);
    const MultiField u = rasterize({disk}, m, 1);
    const Vec lm = lumped_mass(m);
    double area = 0.0;
    for (int i = 0; i < m.node_count(); ++i)
        if (u.c[0][i] != 0.0) {
            CHECK(u.c[0][i] == -0.9);
            area += lm[i];
        }
    CHECK(std::abs(area - kPi * 0.04) < 0.05 * kPi * 0.04);

    const auto disk2 = make_disk(0, -0.5, -0.4, -0.2, 0.15);
    const MultiField u1 = rasterize({disk}, m, 1);
    const MultiField u2 = rasterize({disk2}, m, 1);
    const MultiField both = rasterize({disk, disk2}, m, 1);
    CHECK((both.c[0] - u1.c[0] - u2.c[0]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rasterize rejects same-type overlap but allows cross-type overlap") {
    const Mesh m = build_disk_mesh(2000);
    const auto a = make_disk(0, 1.0, 0.2, 0.0, 0.2);
    const auto b = make_disk(0, 1.0, 0.3, 0.0, 0.2);  // overlaps a
    CHECK_THROWS_AS(rasterize({a, b}, m, 1), std::invalid_argument);
    const auto c = make_disk(1, 2.0, 0.3, 0.0, 0.2);
    const MultiField u = rasterize({a, c}, m, 2);  // different types: fine
    CHECK(u.c[0].cwiseAbs().maxCoeff() == 1.0);
    CHECK(u.c[1].cwiseAbs().maxCoeff() == 2.0);
    CHECK_THROWS_AS(rasterize({make_disk(0, 1.0, 0.9, 0.0, 0.2)}, m, 1), std::invalid_argument);
}

TEST_CASE("ellipse and polygon membership") {
    const Mesh m = build_disk_mesh(4000);
    const auto e = make_ellipse(0, 1.0, 0.1, 0.0, 0.3, 0.15, kPi / 6.0);
    const MultiField ue = rasterize({e}, m, 1);
    CHECK(ue.c[0].cwiseAbs().maxCoeff() == 1.0);
    const auto poly = make_polygon(0, 2.0, {-0.5, -0.5, -0.1, -0.5, -0.1, -0.1, -0.5, -0.1});
    const MultiField up = rasterize({poly}, m, 1);
    // a node inside the square
    int found = 0;
    for (int i = 0; i < m.node_count(); ++i)
        if (up.c[0][i] == 2.0) ++found;
    CHECK(found > 0);
}

TEST_CASE("trace interpolation is exact at shared angles") {
    const Mesh coarse = build_disk_mesh(600);
    const Mesh fine = refine_uniform(coarse);
    Vec vals(fine.boundary_node_count());
    for (int i = 0; i < fine.boundary_node_count(); ++i) {
        const auto& p = fine.nodes[fine.boundary_nodes[i]];
        vals[i] = std::sin(3.0 * std::atan2(p[1], p[0]));
    }
    const Vec out = interpolate_trace(fine, vals, coarse);
    for (int i = 0; i < coarse.boundary_node_count(); ++i) {
        const auto& p = coarse.nodes[coarse.boundary_nodes[i]];
        CHECK(out[i] == doctest::Approx(std::sin(3.0 * std::atan2(p[1], p[0]))).epsilon(1e-9));
    }
}

TEST_CASE("synthesized data: noiseless case equals the interpolated trace") {
    const Mesh mesh = build_disk_mesh(800);
    const Mesh data_mesh = refine_uniform(mesh);
    const BoundaryPartition part = partition_boundary(mesh, {{-kPi / 2.0, kPi / 2.0}});
    const ProblemSpec p = make_problem(Model::Dot);
    const MultiField u_star =
        rasterize({make_disk(0, -0.9, 0.4, 0.0, 0.2)}, data_mesh, p.type_count());
    const Vec flux = sample_flux(data_mesh, "sin(4*pi*x1)+0.5");

    Rng rng(7);
    const Vec y_d = synthesize_data(p, data_mesh, u_star, flux, mesh, part, 0.0, rng);

    const Vec y_star = solve_forward(p, data_mesh, u_star, flux);
    Vec tr(data_mesh.boundary_node_count());
    for (int i = 0; i < data_mesh.boundary_node_count(); ++i)
        tr[i] = y_star[data_mesh.boundary_nodes[i]];
    const Vec want = interpolate_trace(data_mesh, tr, mesh);
    for (int i = 0; i < mesh.boundary_node_count(); ++i) {
        if (part.node_labels[i] == 'D') CHECK(y_d[i] == want[i]);
        else CHECK(y_d[i] == 0.0);
    }
}

TEST_CASE("zero truth kills the noise regardless of the level") {
    const Mesh mesh = build_disk_mesh(500);
    const Mesh data_mesh = refine_uniform(mesh);
    const BoundaryPartition part = partition_boundary(mesh, {{0.0, kPi}});
    const ProblemSpec p = make_problem(Model::Dot);
    const MultiField zero(p.type_count(), data_mesh.node_count());
    const Vec flux = sample_flux(data_mesh, "cos(4*pi*x2)+0.5");
    Rng r1(3), r2(3);
    const Vec a = synthesize_data(p, data_mesh, zero, flux, mesh, part, 0.0, r1);
    const Vec b = synthesize_data(p, data_mesh, zero, flux, mesh, part, 0.75, r2);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("noise respects the pointwise scattering bound and the seed") {
    const Mesh mesh = build_disk_mesh(500);
    const Mesh data_mesh = refine_uniform(mesh);
    const BoundaryPartition part = partition_boundary(mesh, {{0.0, 2.0 * kPi}});
    const ProblemSpec p = make_problem(Model::Dot);
    const MultiField u_star =
        rasterize({make_disk(0, -0.9, 0.3, 0.1, 0.25)}, data_mesh, p.type_count());
    const Vec flux = sample_flux(data_mesh, "sin(4*pi*x1)+0.5");
    const double eps = 0.15;

    Rng r1(42);
    const Vec noisy = synthesize_data(p, data_mesh, u_star, flux, mesh, part, eps, r1);
    Rng r0(99);
    const Vec clean = synthesize_data(p, data_mesh, u_star, flux, mesh, part, 0.0, r0);

    const MultiField zero(p.type_count(), data_mesh.node_count());
    const Vec y0 = solve_forward(p, data_mesh, zero, flux);
    Vec tr0(data_mesh.boundary_node_count());
    for (int i = 0; i < data_mesh.boundary_node_count(); ++i)
        tr0[i] = y0[data_mesh.boundary_nodes[i]];
    const Vec zero_on_mesh = interpolate_trace(data_mesh, tr0, mesh);

    for (int i = 0; i < mesh.boundary_node_count(); ++i)
        CHECK(std::abs(noisy[i] - clean[i]) <=
              eps * std::abs(clean[i] - zero_on_mesh[i]) * (1.0 + 1e-12));

    Rng r2(42);
    const Vec again = synthesize_data(p, data_mesh, u_star, flux, mesh, part, eps, r2);
    CHECK((again - noisy).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("flux expression sampling") {
    const Mesh m = build_disk_mesh(500);
    const Vec f = sample_flux(m, "sin(4*pi*x1)+0.5");
    for (int i = 0; i < m.boundary_node_count(); ++i) {
        const auto& p = m.nodes[m.boundary_nodes[i]];
        CHECK(f[i] == doctest::Approx(std::sin(4.0 * kPi * p[0]) + 0.5).epsilon(1e-15));
    }
    CHECK_THROWS_AS(sample_flux(m, "sin(4*pi*x3)"), std::invalid_argument);
    CHECK_THROWS_AS(sample_flux(m, "1+"), std::invalid_argument);
}
