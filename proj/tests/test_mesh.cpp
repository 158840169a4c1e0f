#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "idsm/mesh.hpp"

using namespace idsm;

namespace {
constexpr double kPi = std::numbers::pi;

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}
}  // namespace

TEST_CASE("disk mesh hits the requested triangle counts") {
    for (int target : {15728, 1770, 4000}) {
        const Mesh m = build_disk_mesh(target);
        CHECK(std::abs(m.triangle_count() - target) <= 0.25 * target);
        for (int b : m.boundary_nodes) {
            const double r = std::hypot(m.nodes[b][0], m.nodes[b][1]);
            CHECK(std::abs(r - 1.0) < 1e-9);
        }
        for (double a : m.triangle_areas) CHECK(a > 0.0);
    }
    CHECK_THROWS_AS(build_disk_mesh(3), std::invalid_argument);
}

TEST_CASE("minimal 4-triangle fan") {
    const Mesh m = build_disk_mesh(4);
    CHECK(m.triangle_count() == 4);
    CHECK(m.node_count() == 5);
    CHECK(std::abs(m.total_area() - kPi) < 0.5 * kPi);
}

TEST_CASE("area of a fine disk mesh converges to pi") {
    const Mesh m = build_disk_mesh(15728);
    CHECK(std::abs(m.total_area() - kPi) < 0.01);
}

TEST_CASE("mesh file round trip is bit exact") {
    const Mesh m = build_disk_mesh(600);
    const std::string p1 = temp_path("idsm_mesh_a.txt");
    const std::string p2 = temp_path("idsm_mesh_b.txt");
    write_mesh(m, p1);
    const Mesh r = read_mesh(p1);
    write_mesh(r, p2);

    std::ifstream f1(p1), f2(p2);
    std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(s1 == s2);
    CHECK(r.node_count() == m.node_count());
    CHECK(r.triangle_count() == m.triangle_count());
    for (int i = 0; i < m.node_count(); ++i) {
        CHECK(r.nodes[i][0] == m.nodes[i][0]);
        CHECK(r.nodes[i][1] == m.nodes[i][1]);
    }
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("uniform refinement quadruples the triangles and stays on the circle") {
    const Mesh m = build_disk_mesh(400);
    const Mesh r = refine_uniform(m);
    CHECK(r.triangle_count() == 4 * m.triangle_count());
    for (int b : r.boundary_nodes)
        CHECK(std::abs(std::hypot(r.nodes[b][0], r.nodes[b][1]) - 1.0) < 1e-12);
    CHECK(r.total_area() > m.total_area());  // closer to the disk
}

TEST_CASE("full and empty boundary partitions") {
    const Mesh m = build_disk_mesh(600);
    const BoundaryPartition all = partition_boundary(m, {{0.0, 2.0 * kPi}});
    for (char c : all.edge_labels) CHECK(c == 'D');
    const BoundaryPartition none = partition_boundary(m, {});
    for (char c : none.edge_labels) CHECK(c == 'N');
}

TEST_CASE("half-circle partition captures half the boundary length") {
    const Mesh m = build_disk_mesh(8000);
    const BoundaryPartition part = partition_boundary(m, {{-kPi / 2.0, kPi / 2.0}});
    double d_length = 0.0, max_edge = 0.0;
    for (std::size_t e = 0; e < m.boundary_edges.size(); ++e) {
        const auto& a = m.nodes[m.boundary_edges[e][0]];
        const auto& b = m.nodes[m.boundary_edges[e][1]];
        const double L = std::hypot(b[0] - a[0], b[1] - a[1]);
        max_edge = std::max(max_edge, L);
        if (part.edge_labels[e] == 'D') d_length += L;
    }
    CHECK(std::abs(d_length - kPi) < max_edge + 1e-12);
}

TEST_CASE("partition is deterministic and rejects overlaps") {
    const Mesh m = build_disk_mesh(600);
    const auto a = partition_boundary(m, {{0.0, 1.0}, {2.0, 3.0}});
    const auto b = partition_boundary(m, {{0.0, 1.0}, {2.0, 3.0}});
    CHECK(a.edge_labels == b.edge_labels);
    CHECK(a.node_labels == b.node_labels);
    CHECK_THROWS_AS(partition_boundary(m, {{0.0, 1.5}, {1.0, 2.0}}), std::invalid_argument);
}

TEST_CASE("coarse map of a mesh onto itself is the identity") {
    const Mesh m = build_disk_mesh(600);
    const CoarseMap map = build_coarse_map(m, m);
    for (int t = 0; t < m.triangle_count(); ++t) CHECK(map.fine_to_coarse[t] == t);
    double min_area = 1e300;
    for (double a : m.triangle_areas) min_area = std::min(min_area, a);
    CHECK(map.h_min == doctest::Approx(min_area).epsilon(1e-12));
}

TEST_CASE("coarse map partitions the fine triangles") {
    const Mesh coarse = build_disk_mesh(4);
    const Mesh fine = refine_uniform(refine_uniform(build_disk_mesh(4)));
    const CoarseMap map = build_coarse_map(fine, coarse);
    std::vector<int> counts(coarse.triangle_count(), 0);
    for (int c : map.fine_to_coarse) {
        REQUIRE(c >= 0);
        REQUIRE(c < coarse.triangle_count());
        ++counts[c];
    }
    int total = 0;
    for (int c : counts) total += c;
    CHECK(total == fine.triangle_count());
    double area = 0.0;
    for (double a : map.coarse_areas) area += a;
    CHECK(area == doctest::Approx(fine.total_area()).epsilon(1e-12));
}

TEST_CASE("table-scale coarse map has the expected fine-per-coarse ratio") {
    const Mesh fine = build_disk_mesh(15728);
    const Mesh coarse = build_disk_mesh(1770);
    const CoarseMap map = build_coarse_map(fine, coarse);

    // every fine triangle assigned exactly once
    long assigned = 0;
    std::vector<long> counts(coarse.triangle_count(), 0);
    for (int c : map.fine_to_coarse) {
        ++counts[c];
        ++assigned;
    }
    CHECK(assigned == fine.triangle_count());

    const double ratio = double(fine.triangle_count()) / coarse.triangle_count();
    CHECK(ratio == doctest::Approx(15728.0 / 1770.0).epsilon(0.25));
    CHECK(map.h_min > 0.0);
}
