#include "idsm/config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "idsm/util.hpp"

namespace idsm {

std::string RunConfig::arcs_text() const {
    if (arcs.empty()) return "none";
    std::string out;
    for (std::size_t i = 0; i < arcs.size(); ++i) {
        if (i) out += ";";
        out += format_double(arcs[i].first) + ":" + format_double(arcs[i].second);
    }
    return out;
}

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_num(const std::string& s, int line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ConfigError("not a number: '" + s + "'", line);
    }
}

long parse_int(const std::string& s, int line) {
    try {
        std::size_t used = 0;
        const long v = std::stol(s, &used);
        if (used != s.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ConfigError("not an integer: '" + s + "'", line);
    }
}

std::vector<std::pair<double, double>> parse_arcs(const std::string& value, int line) {
    std::vector<std::pair<double, double>> arcs;
    if (trim(value) == "none") return arcs;
    std::stringstream ss(value);
    std::string piece;
    while (std::getline(ss, piece, ';')) {
        piece = trim(piece);
        if (piece.empty()) continue;
        const auto colon = piece.find(':');
        if (colon == std::string::npos)
            throw ConfigError("arc must look like start:end, got '" + piece + "'", line);
        arcs.emplace_back(parse_num(trim(piece.substr(0, colon)), line),
                          parse_num(trim(piece.substr(colon + 1)), line));
    }
    if (arcs.empty()) throw ConfigError("arcs value is empty (use 'none' for no access)", line);
    return arcs;
}

int type_index_by_name(const ProblemSpec& p, const std::string& name, int line) {
    for (int l = 0; l < p.type_count(); ++l)
        if (p.types[l].name == name) return l;
    throw ConfigError("unknown inclusion type '" + name + "' for this model", line);
}

InclusionShape parse_shape(const ProblemSpec& p, const std::string& value, int line) {
    std::stringstream ss(value);
    std::string kind, type_name;
    double amp;
    if (!(ss >> kind >> type_name >> amp))
        throw ConfigError("shape needs: <kind> <type> <amplitude> <params...>", line);
    const int type = type_index_by_name(p, type_name, line);
    std::vector<double> params;
    double v;
    while (ss >> v) params.push_back(v);

    try {
        if (kind == "disk") {
            if (params.size() != 3) throw std::invalid_argument("disk needs cx cy r");
            return make_disk(type, amp, params[0], params[1], params[2]);
        }
        if (kind == "ellipse") {
            if (params.size() != 5) throw std::invalid_argument("ellipse needs cx cy rx ry angle");
            return make_ellipse(type, amp, params[0], params[1], params[2], params[3], params[4]);
        }
        if (kind == "polygon") return make_polygon(type, amp, params);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what(), line);
    }
    throw ConfigError("unknown shape kind '" + kind + "'", line);
}

}  // namespace

RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file " + path, 0);

    // section -> key -> (value, line); repeatable keys collected separately
    std::map<std::string, std::map<std::string, std::pair<std::string, int>>> kv;
    std::vector<std::pair<std::string, int>> shapes;
    std::map<std::string, std::pair<std::string, int>> flux_keys;

    static const std::set<std::string> known_sections = {
        "problem", "mesh", "boundary", "fluxes", "hrdtn", "resolver", "run", "truth"};
    static const std::map<std::string, std::set<std::string>> known_keys = {
        {"problem", {"model"}},
        {"mesh", {"fine", "coarse"}},
        {"boundary", {"arcs"}},
        {"hrdtn", {"alpha_d", "alpha_n"}},
        {"resolver", {"p", "scheme", "eps_band"}},
        {"run", {"max_iter", "noise", "seed"}},
    };

    std::string section;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("unterminated section header", lineno);
            section = trim(line.substr(1, line.size() - 2));
            if (!known_sections.count(section))
                throw ConfigError("unknown section [" + section + "]", lineno);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key = value", lineno);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty()) throw ConfigError("key outside any section", lineno);

        if (section == "truth") {
            if (key != "shape") throw ConfigError("unknown key '" + key + "' in [truth]", lineno);
            shapes.emplace_back(value, lineno);
            continue;
        }
        if (section == "fluxes") {
            if (key.size() < 2 || key[0] != 'f' ||
                !std::all_of(key.begin() + 1, key.end(), ::isdigit))
                throw ConfigError("flux keys must be f1, f2, ...", lineno);
            if (flux_keys.count(key)) throw ConfigError("duplicate key '" + key + "'", lineno);
            flux_keys[key] = {value, lineno};
            continue;
        }
        if (!known_keys.at(section).count(key))
            throw ConfigError("unknown key '" + key + "' in [" + section + "]", lineno);
        if (kv[section].count(key)) throw ConfigError("duplicate key '" + key + "'", lineno);
        kv[section][key] = {value, lineno};
    }

    auto require = [&](const std::string& sec, const std::string& key) -> std::pair<std::string, int> {
        auto s = kv.find(sec);
        if (s == kv.end() || !s->second.count(key))
            throw ConfigError("missing required key '" + key + "' in [" + sec + "]", 0);
        return s->second.at(key);
    };

    RunConfig cfg;
    {
        auto [v, ln] = require("problem", "model");
        try {
            cfg.model = model_from_string(v);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what(), ln);
        }
    }
    {
        auto [v, ln] = require("mesh", "fine");
        cfg.fine_target = static_cast<int>(parse_int(v, ln));
        auto [v2, ln2] = require("mesh", "coarse");
        cfg.coarse_target = static_cast<int>(parse_int(v2, ln2));
        if (cfg.fine_target < 4 || cfg.coarse_target < 4)
            throw ConfigError("mesh targets must be at least 4", ln);
    }
    {
        auto [v, ln] = require("boundary", "arcs");
        cfg.arcs = parse_arcs(v, ln);
    }
    {
        if (flux_keys.empty()) throw ConfigError("missing required key 'f1' in [fluxes]", 0);
        for (std::size_t i = 1; i <= flux_keys.size(); ++i) {
            const std::string key = "f" + std::to_string(i);
            auto it = flux_keys.find(key);
            if (it == flux_keys.end())
                throw ConfigError("flux keys must be consecutive; missing '" + key + "'", 0);
            cfg.fluxes.push_back(it->second.first);
        }
    }
    {
        auto [v, ln] = require("hrdtn", "alpha_d");
        cfg.hrdtn.alpha_d = parse_num(v, ln);
        auto [v2, ln2] = require("hrdtn", "alpha_n");
        cfg.hrdtn.alpha_n = parse_num(v2, ln2);
        if (!(cfg.hrdtn.alpha_d > 0.0) || !(cfg.hrdtn.alpha_n > 0.0))
            throw ConfigError("regularization parameters must be positive", ln);
    }
    {
        auto [v, ln] = require("resolver", "p");
        cfg.p_index = parse_num(v, ln);
        if (cfg.p_index < 1.0) throw ConfigError("p must be >= 1", ln);
        auto [v2, ln2] = require("resolver", "scheme");
        try {
            cfg.scheme = scheme_from_string(v2);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what(), ln2);
        }
        auto [v3, ln3] = require("resolver", "eps_band");
        cfg.eps_band = parse_num(v3, ln3);
        if (!(cfg.eps_band > 0.0 && cfg.eps_band < 1.0))
            throw ConfigError("eps_band must lie in (0, 1)", ln3);
    }
    {
        auto [v, ln] = require("run", "max_iter");
        cfg.max_iter = static_cast<int>(parse_int(v, ln));
        if (cfg.max_iter < 1) throw ConfigError("max_iter must be >= 1", ln);
        auto [v2, ln2] = require("run", "noise");
        cfg.noise = parse_num(v2, ln2);
        if (cfg.noise < 0.0) throw ConfigError("noise must be >= 0", ln2);
        auto [v3, ln3] = require("run", "seed");
        cfg.seed = static_cast<std::uint64_t>(parse_int(v3, ln3));
    }
    {
        const ProblemSpec p = make_problem(cfg.model);
        for (const auto& [value, ln] : shapes) cfg.truth.push_back(parse_shape(p, value, ln));
    }
    return cfg;
}

}  // namespace idsm
