#pragma once

#include <optional>
#include <string>

#include "idsm/config.hpp"
#include "idsm/idsm.hpp"

namespace idsm {

struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> max_iter;
    std::optional<UpdateScheme> scheme;
    bool vtk = false;
};

// Exit codes: 0 ok, 1 verification failure, 2 invalid config, 3 bundle/config
// mismatch, 4 runtime failure. Diagnostics go to stderr, verdicts to stdout.
int cmd_generate(const std::string& config_path, const std::string& out_dir,
                 const CliOverrides& ovr = {});
int cmd_reconstruct(const std::string& config_path, const std::string& data_dir,
                    const std::string& out_dir, const CliOverrides& ovr = {});
int cmd_verify(const std::string& run_dir);

// Legacy-VTK unstructured grid with one point scalar.
void write_vtk(const std::string& path, const Mesh& mesh, const std::string& scalar_name,
               const Vec& nodal);

}  // namespace idsm
