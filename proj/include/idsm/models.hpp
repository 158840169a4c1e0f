#pragma once

#include <string>
#include <vector>

#include "idsm/fem.hpp"
#include "idsm/util.hpp"

namespace idsm {

// Ground-truth inclusion geometry: one compactly supported region carrying a
// constant amplitude for one inclusion type.
struct InclusionShape {
    enum class Kind { Disk, Ellipse, Polygon };
    Kind kind = Kind::Disk;
    int type_index = 0;
    double amplitude = 0.0;
    // disk: {cx, cy, r}; ellipse: {cx, cy, rx, ry, angle}; polygon: {x1,y1,...}
    std::vector<double> params;

    bool contains(double x, double y) const;
    double max_radius() const;  // max |x| over the shape
};

InclusionShape make_disk(int type_index, double amplitude, double cx, double cy, double r);
InclusionShape make_ellipse(int type_index, double amplitude, double cx, double cy, double rx,
                            double ry, double angle);
InclusionShape make_polygon(int type_index, double amplitude, std::vector<double> xy);

// The four problem presets with their admissible boxes and index exponents.
ProblemSpec make_problem(Model model);

// Nodal indicator fields, one per type. Shapes of the same type must not
// overlap (checked on nodes); shapes of different types may.
MultiField rasterize(const std::vector<InclusionShape>& shapes, const Mesh& mesh, int type_count);

// Synthetic Cauchy data: solves the truth and background problems on
// data_mesh, transfers boundary traces to mesh by angle, applies pointwise
// uniform noise scaled by the local scattering amplitude and restricts to the
// accessible boundary.
Vec synthesize_data(const ProblemSpec& problem, const Mesh& data_mesh, const MultiField& u_star,
                    const Vec& flux_on_data, const Mesh& mesh, const BoundaryPartition& part,
                    double eps, Rng& rng);

// Boundary-trace transfer by node angle (exact where angles coincide, linear
// interpolation in angle otherwise).
Vec interpolate_trace(const Mesh& from, const Vec& boundary_values, const Mesh& to);

// Flux expression sampled at the boundary nodes.
Vec sample_flux(const Mesh& mesh, const std::string& expression);

}  // namespace idsm
