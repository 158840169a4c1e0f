#include "idsm/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "idsm/expr.hpp"

namespace idsm {

namespace {
constexpr double kPi = std::numbers::pi;
}

bool InclusionShape::contains(double x, double y) const {
    switch (kind) {
        case Kind::Disk: {
            const double dx = x - params[0], dy = y - params[1];
            return dx * dx + dy * dy <= params[2] * params[2];
        }
        case Kind::Ellipse: {
            const double dx = x - params[0], dy = y - params[1];
            const double ca = std::cos(params[4]), sa = std::sin(params[4]);
            const double u = ca * dx + sa * dy, v = -sa * dx + ca * dy;
            return (u * u) / (params[2] * params[2]) + (v * v) / (params[3] * params[3]) <= 1.0;
        }
        case Kind::Polygon: {
            // even-odd rule
            bool inside = false;
            const std::size_t n = params.size() / 2;
            for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
                const double xi = params[2 * i], yi = params[2 * i + 1];
                const double xj = params[2 * j], yj = params[2 * j + 1];
                if ((yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi)
                    inside = !inside;
            }
            return inside;
        }
    }
    return false;
}

double InclusionShape::max_radius() const {
    switch (kind) {
        case Kind::Disk:
            return std::hypot(params[0], params[1]) + params[2];
        case Kind::Ellipse:
            return std::hypot(params[0], params[1]) + std::max(params[2], params[3]);
        case Kind::Polygon: {
            double r = 0.0;
            for (std::size_t i = 0; i + 1 < params.size(); i += 2)
                r = std::max(r, std::hypot(params[i], params[i + 1]));
            return r;
        }
    }
    return 0.0;
}

InclusionShape make_disk(int type_index, double amplitude, double cx, double cy, double r) {
    if (!(r > 0.0)) throw std::invalid_argument("disk radius must be positive");
    return {InclusionShape::Kind::Disk, type_index, amplitude, {cx, cy, r}};
}

InclusionShape make_ellipse(int type_index, double amplitude, double cx, double cy, double rx,
                            double ry, double angle) {
    if (!(rx > 0.0 && ry > 0.0)) throw std::invalid_argument("ellipse radii must be positive");
    return {InclusionShape::Kind::Ellipse, type_index, amplitude, {cx, cy, rx, ry, angle}};
}

InclusionShape make_polygon(int type_index, double amplitude, std::vector<double> xy) {
    if (xy.size() < 6 || xy.size() % 2 != 0)
        throw std::invalid_argument("polygon needs at least 3 vertices");
    return {InclusionShape::Kind::Polygon, type_index, amplitude, std::move(xy)};
}

ProblemSpec make_problem(Model model) {
    ProblemSpec p;
    p.model = model;
    switch (model) {
        case Model::Eit:
            p.c0 = 1.0;
            p.p0 = 0.0;
            p.types = {{"conductivity", -0.99, 0.0, 4.0}};
            p.semilinear = false;
            p.linear_A = true;
            break;
        case Model::Dot:
            p.c0 = 1.0;
            p.p0 = 1.0;
            p.types = {{"conductivity", -0.99, 0.0, 4.0}, {"potential", 0.0, 19.0, 2.0}};
            p.semilinear = false;
            p.linear_A = true;
            break;
        case Model::Ce:
            p.c0 = 1.0;
            p.p0 = 0.0;
            p.types = {{"mixed", 0.0, 1.0, 3.0}};
            p.semilinear = true;
            p.linear_A = false;
            break;
        case Model::Modulus:
            p.c0 = 1.0;
            p.p0 = 1.0;
            p.types = {{"modulus", 0.0, 60.0, 2.0}};
            p.semilinear = true;
            p.linear_A = true;
            break;
    }
    return p;
}

MultiField rasterize(const std::vector<InclusionShape>& shapes, const Mesh& mesh,
                     int type_count) {
    for (const auto& s : shapes) {
        if (s.type_index < 0 || s.type_index >= type_count)
            throw std::invalid_argument("rasterize: shape type index out of range");
        if (s.max_radius() >= 1.0)
            throw std::invalid_argument("rasterize: shape not compactly contained in the disk");
    }
    MultiField u(type_count, mesh.node_count());
    std::vector<std::vector<char>> hit(type_count,
                                       std::vector<char>(mesh.node_count(), 0));
    for (const auto& s : shapes) {
        for (int i = 0; i < mesh.node_count(); ++i) {
            if (!s.contains(mesh.nodes[i][0], mesh.nodes[i][1])) continue;
            if (hit[s.type_index][i])
                throw std::invalid_argument("rasterize: overlapping shapes of the same type");
            hit[s.type_index][i] = 1;
            u.c[s.type_index][i] = s.amplitude;
        }
    }
    return u;
}

Vec interpolate_trace(const Mesh& from, const Vec& boundary_values, const Mesh& to) {
    const int nf = from.boundary_node_count();
    std::vector<double> angles(nf);
    for (int i = 0; i < nf; ++i) angles[i] = from.node_angle(from.boundary_nodes[i]);
    // boundary_nodes are angle-sorted already

    Vec out(to.boundary_node_count());
    for (int i = 0; i < to.boundary_node_count(); ++i) {
        const double th = to.node_angle(to.boundary_nodes[i]);
        auto it = std::lower_bound(angles.begin(), angles.end(), th);
        int hi = static_cast<int>(it - angles.begin()) % nf;
        int lo = (hi + nf - 1) % nf;
        if (std::abs(angles[hi % nf] - th) < 1e-12) {
            out[i] = boundary_values[hi % nf];
            continue;
        }
        double a0 = angles[lo], a1 = angles[hi];
        double span = a1 - a0, off = th - a0;
        if (span <= 0.0) span += 2.0 * kPi;
        if (off < 0.0) off += 2.0 * kPi;
        const double t = off / span;
        out[i] = (1.0 - t) * boundary_values[lo] + t * boundary_values[hi];
    }
    return out;
}

Vec sample_flux(const Mesh& mesh, const std::string& expression) {
    Expression e(expression);
    Vec out(mesh.boundary_node_count());
    for (int i = 0; i < mesh.boundary_node_count(); ++i) {
        const auto& p = mesh.nodes[mesh.boundary_nodes[i]];
        out[i] = e.eval(p[0], p[1]);
    }
    return out;
}

Vec synthesize_data(const ProblemSpec& problem, const Mesh& data_mesh, const MultiField& u_star,
                    const Vec& flux_on_data, const Mesh& mesh, const BoundaryPartition& part,
                    double eps, Rng& rng) {
    if (eps < 0.0) throw std::invalid_argument("synthesize_data: negative noise level");

    const Vec y_star = solve_forward(problem, data_mesh, u_star, flux_on_data);
    const MultiField zero(problem.type_count(), data_mesh.node_count());
    const Vec y_zero = solve_forward(problem, data_mesh, zero, flux_on_data);

    Vec tr_star(data_mesh.boundary_node_count()), tr_zero(data_mesh.boundary_node_count());
    for (int i = 0; i < data_mesh.boundary_node_count(); ++i) {
        tr_star[i] = y_star[data_mesh.boundary_nodes[i]];
        tr_zero[i] = y_zero[data_mesh.boundary_nodes[i]];
    }
    const Vec star_on_mesh = interpolate_trace(data_mesh, tr_star, mesh);
    const Vec zero_on_mesh = interpolate_trace(data_mesh, tr_zero, mesh);

    Vec y_d(mesh.boundary_node_count());
    for (int i = 0; i < mesh.boundary_node_count(); ++i) {
        const double delta = rng.next_symmetric();
        y_d[i] = star_on_mesh[i] + eps * delta * (star_on_mesh[i] - zero_on_mesh[i]);
    }
    for (int i = 0; i < mesh.boundary_node_count(); ++i)
        if (part.node_labels[i] != 'D') y_d[i] = 0.0;
    return y_d;
}

}  // namespace idsm
