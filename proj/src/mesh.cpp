#include "idsm/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "idsm/util.hpp"

namespace idsm {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * kPi);
    if (a < 0.0) a += 2.0 * kPi;
    if (a >= 2.0 * kPi) a = 0.0;
    return a;
}

double signed_area(const Mesh& m, const std::array<int, 3>& t) {
    const auto& a = m.nodes[t[0]];
    const auto& b = m.nodes[t[1]];
    const auto& c = m.nodes[t[2]];
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

// Derives areas and boundary tables, orients triangles CCW and validates the
// structural invariants shared by generated and loaded meshes.
void finalize(Mesh& m) {
    m.triangle_areas.resize(m.triangles.size());
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        double a = signed_area(m, m.triangles[t]);
        if (a < 0.0) {
            std::swap(m.triangles[t][1], m.triangles[t][2]);
            a = -a;
        }
        if (!(a > 0.0))
            throw std::invalid_argument("mesh: degenerate triangle " + std::to_string(t));
        m.triangle_areas[t] = a;
    }

    if (m.boundary_edges.empty()) throw std::invalid_argument("mesh: no boundary edges");

    // boundary edges must chain into one closed loop
    std::map<int, int> next;
    for (const auto& e : m.boundary_edges) {
        if (next.count(e[0])) throw std::invalid_argument("mesh: boundary is not a simple loop");
        next[e[0]] = e[1];
    }
    int start = m.boundary_edges[0][0];
    int cur = start;
    std::size_t steps = 0;
    do {
        auto it = next.find(cur);
        if (it == next.end()) throw std::invalid_argument("mesh: boundary loop is open");
        cur = it->second;
        ++steps;
    } while (cur != start && steps <= m.boundary_edges.size());
    if (cur != start || steps != m.boundary_edges.size())
        throw std::invalid_argument("mesh: boundary edges do not form a single closed loop");

    m.boundary_nodes.clear();
    for (const auto& kv : next) m.boundary_nodes.push_back(kv.first);
    std::sort(m.boundary_nodes.begin(), m.boundary_nodes.end(), [&](int a, int b) {
        const double ta = wrap_angle(std::atan2(m.nodes[a][1], m.nodes[a][0]));
        const double tb = wrap_angle(std::atan2(m.nodes[b][1], m.nodes[b][0]));
        if (ta != tb) return ta < tb;
        return a < b;
    });
    m.node_to_boundary.assign(m.nodes.size(), -1);
    for (std::size_t i = 0; i < m.boundary_nodes.size(); ++i)
        m.node_to_boundary[m.boundary_nodes[i]] = static_cast<int>(i);
}

}  // namespace

double Mesh::total_area() const {
    return std::accumulate(triangle_areas.begin(), triangle_areas.end(), 0.0);
}

double Mesh::boundary_edge_angle(int e) const {
    const auto& a = nodes[boundary_edges[e][0]];
    const auto& b = nodes[boundary_edges[e][1]];
    return wrap_angle(std::atan2(0.5 * (a[1] + b[1]), 0.5 * (a[0] + b[0])));
}

double Mesh::node_angle(int node) const {
    return wrap_angle(std::atan2(nodes[node][1], nodes[node][0]));
}

Mesh build_disk_mesh(int target_triangles) {
    if (target_triangles < 4)
        throw std::invalid_argument("build_disk_mesh: need at least 4 triangles");

    // s*r^2 triangles for s sectors and r rings; pick the closest pair,
    // preferring 6 sectors on ties.
    int best_s = 6, best_r = 1;
    long best_err = std::numeric_limits<long>::max();
    for (int s = 3; s <= 16; ++s) {
        int r0 = std::max(1, static_cast<int>(std::lround(std::sqrt(double(target_triangles) / s))));
        for (int r = std::max(1, r0 - 1); r <= r0 + 1; ++r) {
            long err = std::labs(static_cast<long>(s) * r * r - target_triangles);
            if (err < best_err || (err == best_err && std::abs(s - 6) < std::abs(best_s - 6))) {
                best_err = err;
                best_s = s;
                best_r = r;
            }
        }
    }
    const int s = best_s, R = best_r;

    Mesh m;
    m.nodes.push_back({0.0, 0.0});
    std::vector<int> ring_start(R + 1, 0);
    for (int j = 1; j <= R; ++j) {
        ring_start[j] = m.node_count();
        const int nj = s * j;
        const double r = double(j) / R;
        for (int k = 0; k < nj; ++k) {
            const double th = 2.0 * kPi * k / nj;
            m.nodes.push_back({r * std::cos(th), r * std::sin(th)});
        }
    }

    // ring 1: fan around the center
    for (int k = 0; k < s; ++k)
        m.triangles.push_back({0, ring_start[1] + k, ring_start[1] + (k + 1) % s});

    // ring j-1 -> ring j, sector by sector
    for (int j = 2; j <= R; ++j) {
        const int ni = s * (j - 1), no = s * j;
        auto inner = [&](int k) { return ring_start[j - 1] + ((k % ni) + ni) % ni; };
        auto outer = [&](int k) { return ring_start[j] + ((k % no) + no) % no; };
        for (int sec = 0; sec < s; ++sec) {
            const int i0 = sec * (j - 1);
            const int o0 = sec * j;
            for (int q = 0; q < j; ++q)
                m.triangles.push_back({outer(o0 + q), outer(o0 + q + 1), inner(i0 + q)});
            for (int q = 0; q + 1 < j; ++q)
                m.triangles.push_back({inner(i0 + q), outer(o0 + q + 1), inner(i0 + q + 1)});
        }
    }

    const int nb = s * R;
    for (int k = 0; k < nb; ++k)
        m.boundary_edges.push_back({ring_start[R] + k, ring_start[R] + (k + 1) % nb});

    finalize(m);
    return m;
}

Mesh refine_uniform(const Mesh& m, bool project_boundary) {
    Mesh out;
    out.nodes = m.nodes;

    std::map<std::pair<int, int>, int> midpoint;
    std::map<std::pair<int, int>, bool> is_bedge;
    for (const auto& e : m.boundary_edges)
        is_bedge[{std::min(e[0], e[1]), std::max(e[0], e[1])}] = true;

    auto mid = [&](int a, int b) {
        auto key = std::make_pair(std::min(a, b), std::max(a, b));
        auto it = midpoint.find(key);
        if (it != midpoint.end()) return it->second;
        double x = 0.5 * (m.nodes[a][0] + m.nodes[b][0]);
        double y = 0.5 * (m.nodes[a][1] + m.nodes[b][1]);
        if (project_boundary && is_bedge.count(key)) {
            const double r = std::hypot(x, y);
            if (r > 0.0) {
                x /= r;
                y /= r;
            }
        }
        int id = out.node_count();
        out.nodes.push_back({x, y});
        midpoint[key] = id;
        return id;
    };

    for (const auto& t : m.triangles) {
        const int a = t[0], b = t[1], c = t[2];
        const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
        out.triangles.push_back({a, ab, ca});
        out.triangles.push_back({ab, b, bc});
        out.triangles.push_back({ca, bc, c});
        out.triangles.push_back({ab, bc, ca});
    }
    for (const auto& e : m.boundary_edges) {
        const int h = mid(e[0], e[1]);
        out.boundary_edges.push_back({e[0], h});
        out.boundary_edges.push_back({h, e[1]});
    }
    finalize(out);
    return out;
}

void write_mesh(const Mesh& m, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_mesh: cannot open " + path);
    f << "NODES " << m.node_count() << "\n";
    for (const auto& n : m.nodes) f << format_double(n[0]) << " " << format_double(n[1]) << "\n";
    f << "TRIANGLES " << m.triangle_count() << "\n";
    for (const auto& t : m.triangles) f << t[0] << " " << t[1] << " " << t[2] << "\n";
    f << "BOUNDARY " << m.boundary_edges.size() << "\n";
    for (const auto& e : m.boundary_edges) f << e[0] << " " << e[1] << "\n";
    if (!f) throw std::runtime_error("write_mesh: write failed on " + path);
}

Mesh read_mesh(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_mesh: cannot open " + path);
    std::string tag;
    std::size_t n = 0;
    Mesh m;

    auto expect = [&](const char* want) {
        if (!(f >> tag >> n) || tag != want)
            throw std::runtime_error("read_mesh: expected '" + std::string(want) + "' section in " + path);
    };

    expect("NODES");
    m.nodes.resize(n);
    for (auto& p : m.nodes)
        if (!(f >> p[0] >> p[1])) throw std::runtime_error("read_mesh: truncated node list");
    expect("TRIANGLES");
    m.triangles.resize(n);
    for (auto& t : m.triangles)
        if (!(f >> t[0] >> t[1] >> t[2])) throw std::runtime_error("read_mesh: truncated triangle list");
    expect("BOUNDARY");
    m.boundary_edges.resize(n);
    for (auto& e : m.boundary_edges)
        if (!(f >> e[0] >> e[1])) throw std::runtime_error("read_mesh: truncated boundary list");

    const int nn = m.node_count();
    for (const auto& t : m.triangles)
        for (int v : t)
            if (v < 0 || v >= nn) throw std::runtime_error("read_mesh: triangle index out of range");
    for (const auto& e : m.boundary_edges)
        for (int v : e)
            if (v < 0 || v >= nn) throw std::runtime_error("read_mesh: boundary index out of range");

    finalize(m);
    return m;
}

BoundaryPartition partition_boundary(const Mesh& m,
                                     const std::vector<std::pair<double, double>>& arcs) {
    BoundaryPartition part;
    for (const auto& [a, b] : arcs) {
        if (!(b > a)) throw std::invalid_argument("partition_boundary: arc end must exceed start");
        if (b - a >= 2.0 * kPi - 1e-14) {  // full circle
            part.arcs.clear();
            part.arcs.push_back({0.0, 2.0 * kPi});
            break;
        }
        const double s = wrap_angle(a);
        double e = s + (b - a);
        if (e <= 2.0 * kPi) {
            part.arcs.push_back({s, e});
        } else {
            part.arcs.push_back({s, 2.0 * kPi});
            part.arcs.push_back({0.0, e - 2.0 * kPi});
        }
    }
    std::sort(part.arcs.begin(), part.arcs.end());
    for (std::size_t i = 0; i + 1 < part.arcs.size(); ++i)
        if (part.arcs[i + 1].first < part.arcs[i].second - 1e-14)
            throw std::invalid_argument("partition_boundary: arcs overlap");

    auto in_arcs = [&](double th) {
        for (const auto& [s, e] : part.arcs)
            if (th >= s && th < e) return true;
        return false;
    };

    part.edge_labels.resize(m.boundary_edges.size());
    for (std::size_t e = 0; e < m.boundary_edges.size(); ++e)
        part.edge_labels[e] = in_arcs(m.boundary_edge_angle(static_cast<int>(e))) ? 'D' : 'N';

    part.node_labels.assign(m.boundary_nodes.size(), 'N');
    for (std::size_t e = 0; e < m.boundary_edges.size(); ++e) {
        if (part.edge_labels[e] != 'D') continue;
        for (int v : m.boundary_edges[e]) part.node_labels[m.node_to_boundary[v]] = 'D';
    }
    return part;
}

namespace {

// squared distance from p to triangle (as a closed set)
double dist2_to_triangle(const Mesh& m, int t, double px, double py) {
    const auto& tri = m.triangles[t];
    double best = std::numeric_limits<double>::max();
    bool inside = true;
    for (int k = 0; k < 3; ++k) {
        const auto& a = m.nodes[tri[k]];
        const auto& b = m.nodes[tri[(k + 1) % 3]];
        const double ex = b[0] - a[0], ey = b[1] - a[1];
        const double qx = px - a[0], qy = py - a[1];
        if (ex * qy - ey * qx < 0.0) inside = false;
        const double len2 = ex * ex + ey * ey;
        double u = len2 > 0.0 ? std::clamp((qx * ex + qy * ey) / len2, 0.0, 1.0) : 0.0;
        const double dx = qx - u * ex, dy = qy - u * ey;
        best = std::min(best, dx * dx + dy * dy);
    }
    return inside ? 0.0 : best;
}

bool bary_contains(const Mesh& m, int t, double px, double py, double tol) {
    const auto& tri = m.triangles[t];
    const auto& a = m.nodes[tri[0]];
    const auto& b = m.nodes[tri[1]];
    const auto& c = m.nodes[tri[2]];
    const double det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    const double l1 = ((px - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (py - a[1])) / det;
    const double l2 = ((b[0] - a[0]) * (py - a[1]) - (px - a[0]) * (b[1] - a[1])) / det;
    const double l0 = 1.0 - l1 - l2;
    return l0 >= -tol && l1 >= -tol && l2 >= -tol;
}

}  // namespace

CoarseMap build_coarse_map(const Mesh& fine, Mesh coarse) {
    CoarseMap map;
    map.coarse = std::move(coarse);
    const Mesh& c = map.coarse;

    double max_diam2 = 0.0;
    std::vector<std::array<double, 4>> bbox(c.triangle_count());
    for (int t = 0; t < c.triangle_count(); ++t) {
        double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
        for (int v : c.triangles[t]) {
            x0 = std::min(x0, c.nodes[v][0]);
            x1 = std::max(x1, c.nodes[v][0]);
            y0 = std::min(y0, c.nodes[v][1]);
            y1 = std::max(y1, c.nodes[v][1]);
        }
        bbox[t] = {x0, x1, y0, y1};
        const double dx = x1 - x0, dy = y1 - y0;
        max_diam2 = std::max(max_diam2, dx * dx + dy * dy);
    }

    map.fine_to_coarse.assign(fine.triangle_count(), -1);
    const double tol = 1e-12;
    for (int t = 0; t < fine.triangle_count(); ++t) {
        const auto& tri = fine.triangles[t];
        const double px = (fine.nodes[tri[0]][0] + fine.nodes[tri[1]][0] + fine.nodes[tri[2]][0]) / 3.0;
        const double py = (fine.nodes[tri[0]][1] + fine.nodes[tri[1]][1] + fine.nodes[tri[2]][1]) / 3.0;

        int hit = -1;
        for (int q = 0; q < c.triangle_count(); ++q) {
            if (px < bbox[q][0] - tol || px > bbox[q][1] + tol || py < bbox[q][2] - tol ||
                py > bbox[q][3] + tol)
                continue;
            if (bary_contains(c, q, px, py, tol)) {
                hit = q;
                break;
            }
        }
        if (hit < 0) {
            // barycenter fell in a sliver between the two polygonal boundaries
            double best = std::numeric_limits<double>::max();
            for (int q = 0; q < c.triangle_count(); ++q) {
                const double d2 = dist2_to_triangle(c, q, px, py);
                if (d2 < best) {
                    best = d2;
                    hit = q;
                }
            }
            if (best > max_diam2)
                throw std::runtime_error("build_coarse_map: fine barycenter too far from coarse mesh");
        }
        map.fine_to_coarse[t] = hit;
    }

    map.coarse_areas.assign(c.triangle_count(), 0.0);
    for (int t = 0; t < fine.triangle_count(); ++t)
        map.coarse_areas[map.fine_to_coarse[t]] += fine.triangle_areas[t];

    map.h_min = std::numeric_limits<double>::max();
    for (double a : map.coarse_areas)
        if (a > 0.0) map.h_min = std::min(map.h_min, a);
    if (map.h_min == std::numeric_limits<double>::max())
        throw std::runtime_error("build_coarse_map: empty coarse map");
    return map;
}

}  // namespace idsm
