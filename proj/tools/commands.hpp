#pragma once

#include "holespin/config.hpp"

#include <string>

namespace holespin::cli {

struct Options {
    std::string config_path;
    std::string out_dir;     // overrides output.dir when set
    std::string state_path;  // gtensor/rabi: converged B = 0 state to reuse
    std::string warm_start;  // solve: state used as the initial guess
    int workers = 0;         // sweep: 0 reads HOLESPIN_WORKERS, else 1
    bool quiet = false;
};

int cmd_strain(const Options& o);
int cmd_solve(const Options& o);
int cmd_gtensor(const Options& o);
int cmd_rabi(const Options& o);
int cmd_sweep(const Options& o);
int cmd_verify(const std::string& target);

/// Maps an in-flight exception to the documented exit code and prints it.
int report_exception();

}  // namespace holespin::cli
