#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

namespace idsm {

// Conforming P1 triangulation. For generated meshes the domain is the unit
// disk and all boundary nodes lie on the unit circle; the file reader accepts
// general simply-connected domains.
struct Mesh {
    std::vector<std::array<double, 2>> nodes;
    std::vector<std::array<int, 3>> triangles;       // counterclockwise
    std::vector<std::array<int, 2>> boundary_edges;  // single CCW loop
    std::vector<double> triangle_areas;
    std::vector<int> boundary_nodes;    // sorted by angle of the node
    std::vector<int> node_to_boundary;  // index into boundary_nodes, -1 inside

    int node_count() const { return static_cast<int>(nodes.size()); }
    int triangle_count() const { return static_cast<int>(triangles.size()); }
    int boundary_node_count() const { return static_cast<int>(boundary_nodes.size()); }

    double total_area() const;
    // midpoint angle of boundary edge e, in [0, 2pi)
    double boundary_edge_angle(int e) const;
    double node_angle(int node) const;
};

// Structured polar triangulation of the unit disk (s sectors, r rings; the
// pair is chosen to approach target_triangles = s*r^2). Deterministic.
Mesh build_disk_mesh(int target_triangles);

// 1 -> 4 midpoint refinement. Boundary edge midpoints are pushed onto the
// unit circle when project_boundary is set (disk meshes only).
Mesh refine_uniform(const Mesh& m, bool project_boundary = true);

void write_mesh(const Mesh& m, const std::string& path);
Mesh read_mesh(const std::string& path);

// Accessible/inaccessible split of the boundary. An edge is Dirichlet-labeled
// iff its midpoint angle falls in one of the accessible arcs; a node is
// Dirichlet-labeled iff any incident boundary edge is.
struct BoundaryPartition {
    std::vector<std::pair<double, double>> arcs;  // normalized to [0, 2pi)
    std::vector<char> edge_labels;                // 'D' or 'N', per boundary edge
    std::vector<char> node_labels;                // per boundary node
};

// Arcs are half-open [start, end) intervals in radians; any real angles are
// accepted and reduced mod 2pi (an arc crossing 0 is split). Overlapping arcs
// are rejected.
BoundaryPartition partition_boundary(const Mesh& m,
                                     const std::vector<std::pair<double, double>>& arcs);

// Assignment of fine triangles to coarse cells by barycenter location.
// coarse_areas is the fine-triangle measure aggregated per coarse cell, which
// is the cell measure the averaging operators divide by.
struct CoarseMap {
    Mesh coarse;
    std::vector<int> fine_to_coarse;   // per fine triangle
    std::vector<double> coarse_areas;  // |Q| per coarse cell
    double h_min = 0.0;                // min positive |Q|
};

CoarseMap build_coarse_map(const Mesh& fine, Mesh coarse);

}  // namespace idsm
