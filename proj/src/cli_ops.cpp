#include "idsm/cli_ops.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "idsm/util.hpp"

namespace fs = std::filesystem;

namespace idsm {

namespace {

std::string knum(int k) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%03d", k);
    return buf;
}

RunConfig load_with_overrides(const std::string& path, const CliOverrides& ovr) {
    RunConfig cfg = load_config(path);
    if (ovr.seed) cfg.seed = *ovr.seed;
    if (ovr.max_iter) cfg.max_iter = *ovr.max_iter;
    if (ovr.scheme) cfg.scheme = *ovr.scheme;
    return cfg;
}

std::map<std::string, std::string> read_kv_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::map<std::string, std::string> out;
    std::string line;
    while (std::getline(f, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

}  // namespace

void write_vtk(const std::string& path, const Mesh& mesh, const std::string& scalar_name,
               const Vec& nodal) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_vtk: cannot open " + path);
    f << "# vtk DataFile Version 3.0\n";
    f << "idsm field\n";
    f << "ASCII\n";
    f << "DATASET UNSTRUCTURED_GRID\n";
    f << "POINTS " << mesh.node_count() << " double\n";
    for (const auto& p : mesh.nodes)
        f << format_double(p[0]) << " " << format_double(p[1]) << " 0\n";
    f << "CELLS " << mesh.triangle_count() << " " << 4 * mesh.triangle_count() << "\n";
    for (const auto& t : mesh.triangles) f << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
    f << "CELL_TYPES " << mesh.triangle_count() << "\n";
    for (int t = 0; t < mesh.triangle_count(); ++t) f << "5\n";
    f << "POINT_DATA " << mesh.node_count() << "\n";
    f << "SCALARS " << scalar_name << " double 1\n";
    f << "LOOKUP_TABLE default\n";
    for (int i = 0; i < nodal.size(); ++i) f << format_double(nodal[i]) << "\n";
}

int cmd_generate(const std::string& config_path, const std::string& out_dir,
                 const CliOverrides& ovr) {
    RunConfig cfg;
    try {
        cfg = load_with_overrides(config_path, ovr);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    try {
        fs::create_directories(out_dir);
        const ProblemSpec problem = make_problem(cfg.model);
        const Mesh fine = build_disk_mesh(cfg.fine_target);
        const Mesh coarse = build_disk_mesh(cfg.coarse_target);
        const Mesh data_mesh = refine_uniform(fine);
        const BoundaryPartition part = partition_boundary(fine, cfg.arcs);
        const MultiField u_star = rasterize(cfg.truth, data_mesh, problem.type_count());

        Rng rng(cfg.seed);
        for (std::size_t i = 0; i < cfg.fluxes.size(); ++i) {
            const Vec flux_data = sample_flux(data_mesh, cfg.fluxes[i]);
            const Vec y_d = synthesize_data(problem, data_mesh, u_star, flux_data, fine, part,
                                            cfg.noise, rng);
            write_boundary_csv(out_dir + "/data_f" + std::to_string(i + 1) + ".csv", "y_d", fine,
                               y_d);
        }
        write_mesh(fine, out_dir + "/mesh_fine.txt");
        write_mesh(coarse, out_dir + "/mesh_coarse.txt");

        std::ofstream mf(out_dir + "/manifest.txt");
        mf << "model = " << model_to_string(cfg.model) << "\n";
        mf << "fine_target = " << cfg.fine_target << "\n";
        mf << "coarse_target = " << cfg.coarse_target << "\n";
        mf << "fine_triangles = " << fine.triangle_count() << "\n";
        mf << "coarse_triangles = " << coarse.triangle_count() << "\n";
        mf << "data_triangles = " << data_mesh.triangle_count() << "\n";
        mf << "arcs = " << cfg.arcs_text() << "\n";
        mf << "noise = " << format_double(cfg.noise) << "\n";
        mf << "seed = " << cfg.seed << "\n";
        mf << "flux_count = " << cfg.fluxes.size() << "\n";
        for (std::size_t i = 0; i < cfg.fluxes.size(); ++i)
            mf << "flux" << (i + 1) << " = " << cfg.fluxes[i] << "\n";
        if (!mf) throw std::runtime_error("manifest write failed");
    } catch (const std::exception& e) {
        std::cerr << "generate failed: " << e.what() << "\n";
        return 4;
    }
    return 0;
}

int cmd_reconstruct(const std::string& config_path, const std::string& data_dir,
                    const std::string& out_dir, const CliOverrides& ovr) {
    RunConfig cfg;
    try {
        cfg = load_with_overrides(config_path, ovr);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    try {
        const auto manifest = read_kv_file(data_dir + "/manifest.txt");
        auto mismatch = [&](const std::string& what) {
            std::cerr << "data bundle does not match config: " << what << "\n";
            return 3;
        };
        if (manifest.at("model") != model_to_string(cfg.model)) return mismatch("model");
        if (manifest.at("fine_target") != std::to_string(cfg.fine_target))
            return mismatch("fine mesh target");
        if (manifest.at("coarse_target") != std::to_string(cfg.coarse_target))
            return mismatch("coarse mesh target");
        if (manifest.at("arcs") != cfg.arcs_text()) return mismatch("boundary arcs");
        if (manifest.at("flux_count") != std::to_string(cfg.fluxes.size()))
            return mismatch("flux count");
        for (std::size_t i = 0; i < cfg.fluxes.size(); ++i)
            if (manifest.at("flux" + std::to_string(i + 1)) != cfg.fluxes[i])
                return mismatch("flux expression f" + std::to_string(i + 1));

        const ProblemSpec problem = make_problem(cfg.model);
        const Mesh fine = read_mesh(data_dir + "/mesh_fine.txt");
        const Mesh coarse = read_mesh(data_dir + "/mesh_coarse.txt");
        const BoundaryPartition part = partition_boundary(fine, cfg.arcs);
        const CoarseMap cmap = build_coarse_map(fine, coarse);

        std::vector<Dataset> data;
        for (std::size_t i = 0; i < cfg.fluxes.size(); ++i) {
            Dataset ds;
            ds.flux = sample_flux(fine, cfg.fluxes[i]);
            ds.y_d = read_boundary_csv(data_dir + "/data_f" + std::to_string(i + 1) + ".csv", fine);
            data.push_back(std::move(ds));
        }

        ReconstructionOptions opt;
        opt.hrdtn = cfg.hrdtn;
        opt.p_index = cfg.p_index;
        opt.scheme = cfg.scheme;
        opt.eps_band = cfg.eps_band;
        opt.max_iter = cfg.max_iter;
        opt.probe_seed = cfg.seed ^ 0x70726f6265736564ull;

        const RunResult run = run_reconstruction(problem, fine, cmap, part, data, opt);

        fs::create_directories(out_dir);
        for (const auto& rec : run.records) {
            for (int l = 0; l < problem.type_count(); ++l) {
                const std::string stem =
                    "_k" + knum(rec.k) + "_t" + std::to_string(l) + ".csv";
                write_field_csv(out_dir + "/u_raw" + stem, "u_" + problem.types[l].name,
                                rec.u.c[l]);
                const double norm = rec.u.c[l].size() ? rec.u.c[l].cwiseAbs().maxCoeff() : 0.0;
                const Vec normalized = norm > 0.0 ? Vec(rec.u.c[l] / norm)
                                                  : Vec(Vec::Zero(rec.u.c[l].size()));
                write_field_csv(out_dir + "/u_norm" + stem, "u_norm", normalized);
                if (ovr.vtk)
                    write_vtk(out_dir + "/u_norm_k" + knum(rec.k) + "_t" + std::to_string(l) +
                                  ".vtk",
                              fine, "u_norm", normalized);
            }
        }

        {
            std::ofstream tf(out_dir + "/trace.csv");
            tf << "k,lambda,damping_factor,term_count,update_applied,pairing,secant_error,"
                  "probe_max_ratio";
            for (int l = 0; l < problem.type_count(); ++l) tf << ",c_d_" << l;
            tf << "\n";
            // one row per iteration that ran the update branch (k = 0 .. K-2)
            for (int k = 0; k <= cfg.max_iter - 2; ++k) {
                const auto& rec = run.records[k + 1];
                tf << k << "," << format_double(rec.lambda) << ","
                   << format_double(rec.damping_factor) << "," << rec.term_count << ","
                   << (rec.update_applied ? 1 : 0) << "," << format_double(rec.pairing_s1) << ","
                   << format_double(rec.secant_error) << ","
                   << format_double(rec.probe_max_ratio);
                for (double cd : rec.c_d) tf << "," << format_double(cd);
                tf << "\n";
            }
        }

        {
            std::ofstream sf(out_dir + "/summary.txt");
            sf << "model = " << model_to_string(cfg.model) << "\n";
            sf << "scheme = " << scheme_to_string(cfg.scheme) << "\n";
            sf << "iterations = " << cfg.max_iter << "\n";
            sf << "datasets = " << data.size() << "\n";
            sf << "type_count = " << problem.type_count() << "\n";
            for (int l = 0; l < problem.type_count(); ++l)
                sf << "box_" << l << " = " << format_double(problem.types[l].lo) << " "
                   << format_double(problem.types[l].hi) << "\n";
            sf << "pde_solves_per_pair = " << run.solves_per_pair << "\n";
            sf << "pde_solves_total = " << run.solves_total << "\n";
            sf << "expected_solves_per_pair = " << expected_solves(problem, cfg.max_iter) << "\n";
            const auto& final_res = run.records.back().residuals;
            for (std::size_t i = 0; i < final_res.size(); ++i)
                sf << "final_residual_f" << (i + 1) << " = " << format_double(final_res[i]) << "\n";
            if (!sf) throw std::runtime_error("summary write failed");
        }
    } catch (const std::exception& e) {
        std::cerr << "reconstruct failed: " << e.what() << "\n";
        return 4;
    }
    return 0;
}

namespace {

struct TraceRow {
    int k = 0;
    double lambda = 0.0, damping = 1.0, pairing = 0.0, secant = 0.0, probe = 0.0;
    int term_count = 0, update_applied = 0;
};

std::vector<TraceRow> read_trace(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("empty trace file");
    std::vector<TraceRow> rows;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() < 8) throw std::runtime_error("malformed trace row");
        TraceRow r;
        r.k = std::stoi(cells[0]);
        r.lambda = std::stod(cells[1]);
        r.damping = std::stod(cells[2]);
        r.term_count = std::stoi(cells[3]);
        r.update_applied = std::stoi(cells[4]);
        r.pairing = std::stod(cells[5]);
        r.secant = std::stod(cells[6]);
        r.probe = std::stod(cells[7]);
        rows.push_back(r);
    }
    return rows;
}

}  // namespace

int cmd_verify(const std::string& run_dir) {
    auto fail = [](const std::string& invariant, const std::string& detail) {
        std::cout << "FAIL " << invariant << ": " << detail << "\n";
        return 1;
    };
    try {
        const auto summary = read_kv_file(run_dir + "/summary.txt");
        const Model model = model_from_string(summary.at("model"));
        const ProblemSpec problem = make_problem(model);
        const int K = std::stoi(summary.at("iterations"));
        const long reported = std::stol(summary.at("pde_solves_per_pair"));
        const long expected = expected_solves(problem, K);
        if (reported != expected)
            return fail("solve-count audit", "reported " + std::to_string(reported) +
                                                 ", expected " + std::to_string(expected));

        const auto rows = read_trace(run_dir + "/trace.csv");
        if (static_cast<int>(rows.size()) != std::max(0, K - 1))
            return fail("solve-count audit",
                        "trace has " + std::to_string(rows.size()) + " rows, expected " +
                            std::to_string(std::max(0, K - 1)));
        for (const auto& r : rows) {
            if (!(r.lambda >= 0.0))
                return fail("damping nonnegativity",
                            "lambda < 0 at iteration " + std::to_string(r.k));
            if (r.probe > 1.0 + 1e-9)
                return fail("spectral probe bound",
                            "probe ratio " + format_double(r.probe) + " at iteration " +
                                std::to_string(r.k));
            if (r.update_applied && r.secant > 1e-10)
                return fail("secant condition", "relative error " + format_double(r.secant) +
                                                    " at iteration " + std::to_string(r.k));
        }

        for (int l = 0; l < problem.type_count(); ++l) {
            const double lo = problem.types[l].lo, hi = problem.types[l].hi;
            for (int k = 0; k <= K; ++k) {
                const std::string path =
                    run_dir + "/u_raw_k" + knum(k) + "_t" + std::to_string(l) + ".csv";
                std::ifstream f(path);
                if (!f) return fail("box constraint", "missing " + path);
                std::string line;
                std::getline(f, line);
                while (std::getline(f, line)) {
                    if (line.empty()) continue;
                    const auto comma = line.find(',');
                    const double v = std::stod(line.substr(comma + 1));
                    if (v < lo || v > hi)
                        return fail("box constraint",
                                    "value " + format_double(v) + " outside [" +
                                        format_double(lo) + ", " + format_double(hi) + "] in " +
                                        path);
                }
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "verify failed: " << e.what() << "\n";
        return 4;
    }
    std::cout << "OK\n";
    return 0;
}

}  // namespace idsm
