#include "commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    using namespace holespin::cli;
    CLI::App app{"Hole spin qubit simulator: strain, self-consistent states, g-tensors and Rabi maps"};
    app.set_version_flag("--version", HOLESPIN_VERSION);
    app.require_subcommand(1);

    Options o;
    auto common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", o.config_path, "JSON configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("-o,--out", o.out_dir, "output directory (overrides output.dir)");
        sub->add_flag("-q,--quiet", o.quiet, "suppress progress messages");
    };

    auto* strain = app.add_subcommand("strain", "cool-down strain, displacement and stress fields");
    common(strain);
    auto* solve = app.add_subcommand("solve", "self-consistent Schroedinger-Poisson solve and dot metrics");
    common(solve);
    solve->add_option("--warm-start", o.warm_start, "state file used as the initial guess")->check(CLI::ExistingFile);
    auto* gt = app.add_subcommand("gtensor", "six-direction G tensor and perturbative g-matrix");
    common(gt);
    gt->add_option("--state", o.state_path, "converged B = 0 state to reuse")->check(CLI::ExistingFile);
    auto* rabi = app.add_subcommand("rabi", "g-matrix bias derivative and Rabi-frequency map");
    common(rabi);
    rabi->add_option("--state", o.state_path, "converged B = 0 state to reuse")->check(CLI::ExistingFile);
    auto* sweep = app.add_subcommand("sweep", "parameter sweep over bias, field direction, geometry or strain");
    common(sweep);
    sweep->add_option("-j,--workers", o.workers, "worker threads (default: HOLESPIN_WORKERS or 1)")->check(CLI::PositiveNumber);
    std::string target;
    auto* verify = app.add_subcommand("verify", "re-checksum the outputs listed in a run manifest");
    verify->add_option("manifest", target, "manifest file or output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*strain) return cmd_strain(o);
        if (*solve) return cmd_solve(o);
        if (*gt) return cmd_gtensor(o);
        if (*rabi) return cmd_rabi(o);
        if (*sweep) return cmd_sweep(o);
        if (*verify) return cmd_verify(target);
    } catch (...) {
        return report_exception();
    }
    return 1;
}
