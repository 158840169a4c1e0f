#include <CLI11.hpp>
#include <string>

#include "idsm/cli_ops.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Inclusion reconstruction from partial boundary data"};
    app.require_subcommand(1);

    std::string config, data_dir, out_dir, scheme;
    std::uint64_t seed = 0;
    int max_iter = 0;
    bool vtk = false;

    auto* gen = app.add_subcommand("generate", "synthesize boundary data for a config");
    gen->add_option("--config", config, "config file")->required();
    gen->add_option("--out", out_dir, "output directory")->required();
    auto* gen_seed = gen->add_option("--seed", seed, "override the config seed");

    auto* rec = app.add_subcommand("reconstruct", "run the reconstruction on a data bundle");
    rec->add_option("--config", config, "config file")->required();
    rec->add_option("--data", data_dir, "data bundle directory")->required();
    rec->add_option("--out", out_dir, "output directory")->required();
    auto* rec_seed = rec->add_option("--seed", seed, "override the config seed");
    auto* rec_iter = rec->add_option("--max-iter", max_iter, "override the iteration count");
    auto* rec_scheme =
        rec->add_option("--scheme", scheme, "correction scheme")->check(CLI::IsMember({"dfp", "bfg"}));
    rec->add_flag("--vtk", vtk, "also write legacy-VTK fields");

    auto* ver = app.add_subcommand("verify", "re-check the invariants of a finished run");
    ver->add_option("--out", out_dir, "reconstruction directory")->required();

    CLI11_PARSE(app, argc, argv);

    idsm::CliOverrides ovr;
    ovr.vtk = vtk;
    if (*gen_seed || *rec_seed) ovr.seed = seed;
    if (*rec_iter) ovr.max_iter = max_iter;
    if (*rec_scheme) ovr.scheme = idsm::scheme_from_string(scheme);

    if (gen->parsed()) return idsm::cmd_generate(config, out_dir, ovr);
    if (rec->parsed()) return idsm::cmd_reconstruct(config, data_dir, out_dir, ovr);
    return idsm::cmd_verify(out_dir);
}
