#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "idsm/dtn.hpp"
#include "idsm/models.hpp"
#include "idsm/resolver.hpp"

namespace idsm {

struct ConfigError : std::runtime_error {
    int line;
    ConfigError(const std::string& what, int line_number)
        : std::runtime_error(what + " (line " + std::to_string(line_number) + ")"),
          line(line_number) {}
};

// Everything a run needs, as read from the sectioned key-value config file.
struct RunConfig {
    Model model = Model::Eit;
    int fine_target = 0;
    int coarse_target = 0;
    std::vector<std::pair<double, double>> arcs;
    std::vector<std::string> fluxes;
    HrDtnParams hrdtn;
    double p_index = 2.0;
    UpdateScheme scheme = UpdateScheme::Bfg;
    double eps_band = 0.1;
    int max_iter = 12;
    double noise = 0.0;
    std::uint64_t seed = 0;
    std::vector<InclusionShape> truth;

    std::string arcs_text() const;  // canonical "start:end;..." form
};

// Strict parser: unknown sections or keys are rejected, all required keys
// must be present; errors carry the offending line number.
RunConfig load_config(const std::string& path);

}  // namespace idsm
