#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "idsm/cli_ops.hpp"
#include "idsm/idsm.hpp"
#include "idsm/models.hpp"
#include "idsm/util.hpp"

namespace py = pybind11;
using namespace idsm;

namespace {

// Convenience wrapper used by the python layer: build meshes, synthesize data
// and run the reconstruction for one config in a single call.
RunResult run_from_config(const RunConfig& cfg) {
    const ProblemSpec problem = make_problem(cfg.model);
    const Mesh fine = build_disk_mesh(cfg.fine_target);
    const Mesh coarse = build_disk_mesh(cfg.coarse_target);
    const CoarseMap cmap = build_coarse_map(fine, coarse);
    const BoundaryPartition part = partition_boundary(fine, cfg.arcs);
    const Mesh data_mesh = refine_uniform(fine);
    const MultiField u_star = rasterize(cfg.truth, data_mesh, problem.type_count());

    Rng rng(cfg.seed);
    std::vector<Dataset> data;
    for (const auto& fx : cfg.fluxes) {
        Dataset ds;
        ds.flux = sample_flux(fine, fx);
        ds.y_d = synthesize_data(problem, data_mesh, u_star, sample_flux(data_mesh, fx), fine,
                                 part, cfg.noise, rng);
        data.push_back(std::move(ds));
    }

    ReconstructionOptions opt;
    opt.hrdtn = cfg.hrdtn;
    opt.p_index = cfg.p_index;
    opt.scheme = cfg.scheme;
    opt.eps_band = cfg.eps_band;
    opt.max_iter = cfg.max_iter;
    opt.probe_seed = cfg.seed ^ 0x70726f6265736564ull;
    return run_reconstruction(problem, fine, cmap, part, data, opt);
}

}  // namespace

PYBIND11_MODULE(_idsm, m) {
    m.doc() = "Inclusion reconstruction in elliptic PDEs from partial boundary data";

    py::class_<Mesh>(m, "Mesh")
        .def_property_readonly("node_count", &Mesh::node_count)
        .def_property_readonly("triangle_count", &Mesh::triangle_count)
        .def_property_readonly("boundary_node_count", &Mesh::boundary_node_count)
        .def_property_readonly("nodes", [](const Mesh& me) { return me.nodes; })
        .def_property_readonly("triangles", [](const Mesh& me) { return me.triangles; })
        .def_property_readonly("boundary_nodes", [](const Mesh& me) { return me.boundary_nodes; })
        .def("total_area", &Mesh::total_area);
    m.def("build_disk_mesh", &build_disk_mesh, py::arg("target_triangles"));
    m.def("refine_uniform", &refine_uniform, py::arg("mesh"), py::arg("project_boundary") = true);
    m.def("read_mesh", &read_mesh);
    m.def("write_mesh", &write_mesh);

    py::class_<BoundaryPartition>(m, "BoundaryPartition")
        .def_property_readonly("edge_labels",
                               [](const BoundaryPartition& p) {
                                   return std::string(p.edge_labels.begin(), p.edge_labels.end());
                               })
        .def_property_readonly("node_labels", [](const BoundaryPartition& p) {
            return std::string(p.node_labels.begin(), p.node_labels.end());
        });
    m.def("partition_boundary", &partition_boundary, py::arg("mesh"), py::arg("arcs"));

    py::class_<CoarseMap>(m, "CoarseMap")
        .def_property_readonly("h_min", [](const CoarseMap& c) { return c.h_min; })
        .def_property_readonly("fine_to_coarse",
                               [](const CoarseMap& c) { return c.fine_to_coarse; })
        .def_property_readonly("coarse_areas", [](const CoarseMap& c) { return c.coarse_areas; });
    m.def("build_coarse_map", &build_coarse_map, py::arg("fine"), py::arg("coarse"));

    py::enum_<Model>(m, "Model")
        .value("eit", Model::Eit)
        .value("dot", Model::Dot)
        .value("ce", Model::Ce)
        .value("modulus", Model::Modulus);
    py::class_<InclusionType>(m, "InclusionType")
        .def_readonly("name", &InclusionType::name)
        .def_readonly("lo", &InclusionType::lo)
        .def_readonly("hi", &InclusionType::hi)
        .def_readonly("gamma", &InclusionType::gamma);
    py::class_<ProblemSpec>(m, "ProblemSpec")
        .def_readonly("model", &ProblemSpec::model)
        .def_readonly("c0", &ProblemSpec::c0)
        .def_readonly("p0", &ProblemSpec::p0)
        .def_readonly("types", &ProblemSpec::types)
        .def_readonly("semilinear", &ProblemSpec::semilinear)
        .def_readonly("linear_A", &ProblemSpec::linear_A);
    m.def("make_problem", [](const std::string& s) { return make_problem(model_from_string(s)); });
    m.def("expected_solves", &expected_solves, py::arg("problem"), py::arg("max_iter"));

    py::class_<MultiField>(m, "MultiField")
        .def_property_readonly("components", [](const MultiField& f) { return f.c; });
    py::class_<InclusionShape>(m, "InclusionShape");
    m.def("make_disk", &make_disk, py::arg("type_index"), py::arg("amplitude"), py::arg("cx"),
          py::arg("cy"), py::arg("r"));
    m.def("make_ellipse", &make_ellipse);
    m.def("make_polygon", &make_polygon);
    m.def("rasterize", &rasterize, py::arg("shapes"), py::arg("mesh"), py::arg("type_count"));
    m.def("sample_flux", &sample_flux, py::arg("mesh"), py::arg("expression"));
    m.def(
        "synthesize_data",
        [](const ProblemSpec& problem, const Mesh& data_mesh, const MultiField& u_star,
           const Vec& flux_on_data, const Mesh& mesh, const BoundaryPartition& part, double eps,
           std::uint64_t seed) {
            Rng rng(seed);
            return synthesize_data(problem, data_mesh, u_star, flux_on_data, mesh, part, eps, rng);
        },
        py::arg("problem"), py::arg("data_mesh"), py::arg("u_star"), py::arg("flux_on_data"),
        py::arg("mesh"), py::arg("partition"), py::arg("eps"), py::arg("seed"));

    m.def(
        "solve_forward",
        [](const ProblemSpec& p, const Mesh& mesh, const MultiField& u, const Vec& flux) {
            return solve_forward(p, mesh, u, flux);
        },
        py::arg("problem"), py::arg("mesh"), py::arg("u"), py::arg("flux"));
    m.def(
        "solve_background",
        [](const ProblemSpec& p, const Mesh& mesh, const Vec& flux, const Vec& y_state) {
            return solve_background(p, mesh, flux, &y_state);
        },
        py::arg("problem"), py::arg("mesh"), py::arg("flux"), py::arg("y_state"));
    py::enum_<TracePart>(m, "TracePart")
        .value("D", TracePart::D)
        .value("N", TracePart::N)
        .value("full", TracePart::Full);
    m.def("trace_part", &trace_part, py::arg("mesh"), py::arg("partition"), py::arg("y"),
          py::arg("part"));

    py::class_<HrDtnParams>(m, "HrDtnParams")
        .def(py::init([](double ad, double an) {
                 return HrDtnParams{ad, an};
             }),
             py::arg("alpha_d"), py::arg("alpha_n"))
        .def_readwrite("alpha_d", &HrDtnParams::alpha_d)
        .def_readwrite("alpha_n", &HrDtnParams::alpha_n);
    m.def(
        "solve_hrdtn",
        [](const ProblemSpec& problem, const Mesh& mesh, const BoundaryPartition& part,
           HrDtnParams prm, const Vec& y_state, const Vec& v) {
            const SpMat A = assemble_background(problem, mesh, &y_state);
            const auto sol = solve_hrdtn(A, mesh, part, prm, v, problem.model == Model::Eit);
            return py::make_tuple(sol.w, sol.p);
        },
        py::arg("problem"), py::arg("mesh"), py::arg("partition"), py::arg("params"),
        py::arg("y_state"), py::arg("v"));
    m.def(
        "adjoint_lift",
        [](const ProblemSpec& problem, const Mesh& mesh, const BoundaryPartition& part,
           HrDtnParams prm, const Vec& y_state, const Vec& v) {
            return adjoint_lift(problem, mesh, part, prm, y_state, v);
        },
        py::arg("problem"), py::arg("mesh"), py::arg("partition"), py::arg("params"),
        py::arg("y_state"), py::arg("v"));

    py::enum_<UpdateScheme>(m, "UpdateScheme")
        .value("dfp", UpdateScheme::Dfp)
        .value("bfg", UpdateScheme::Bfg);

    py::class_<Dataset>(m, "Dataset")
        .def(py::init<>())
        .def_readwrite("flux", &Dataset::flux)
        .def_readwrite("y_d", &Dataset::y_d);

    py::class_<ReconstructionOptions>(m, "ReconstructionOptions")
        .def(py::init<>())
        .def_readwrite("hrdtn", &ReconstructionOptions::hrdtn)
        .def_readwrite("p_index", &ReconstructionOptions::p_index)
        .def_readwrite("scheme", &ReconstructionOptions::scheme)
        .def_readwrite("eps_band", &ReconstructionOptions::eps_band)
        .def_readwrite("max_iter", &ReconstructionOptions::max_iter)
        .def_readwrite("probe_count", &ReconstructionOptions::probe_count)
        .def_readwrite("probe_seed", &ReconstructionOptions::probe_seed);

    py::class_<IterationRecord>(m, "IterationRecord")
        .def_readonly("k", &IterationRecord::k)
        .def_readonly("u", &IterationRecord::u)
        .def_readonly("eta", &IterationRecord::eta)
        .def_readonly("lambda_", &IterationRecord::lambda)
        .def_readonly("damping_factor", &IterationRecord::damping_factor)
        .def_readonly("update_applied", &IterationRecord::update_applied)
        .def_readonly("pairing", &IterationRecord::pairing_s1)
        .def_readonly("secant_error", &IterationRecord::secant_error)
        .def_readonly("probe_max_ratio", &IterationRecord::probe_max_ratio)
        .def_readonly("pde_solve_count", &IterationRecord::pde_solve_count)
        .def_readonly("residuals", &IterationRecord::residuals)
        .def_readonly("term_count", &IterationRecord::term_count);

    py::class_<RunResult>(m, "RunResult")
        .def_readonly("records", &RunResult::records)
        .def_readonly("solves_per_pair", &RunResult::solves_per_pair)
        .def_readonly("solves_total", &RunResult::solves_total);
    m.def("run_reconstruction", &run_reconstruction, py::arg("problem"), py::arg("fine"),
          py::arg("coarse_map"), py::arg("partition"), py::arg("data"), py::arg("options"));

    py::class_<RunConfig>(m, "RunConfig")
        .def_readonly("model", &RunConfig::model)
        .def_readwrite("fine_target", &RunConfig::fine_target)
        .def_readwrite("coarse_target", &RunConfig::coarse_target)
        .def_readwrite("max_iter", &RunConfig::max_iter)
        .def_readwrite("noise", &RunConfig::noise)
        .def_readwrite("seed", &RunConfig::seed);
    m.def("load_config", &load_config, py::arg("path"));
    m.def("run_from_config", &run_from_config, py::arg("config"));
}
