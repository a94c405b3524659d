#pragma once

#include <string>

#include "fiberlab/config.hpp"

namespace fiberlab {

// Subcommand entry points: run the experiment described by the config, write
// the CSV outputs plus a reproducibility manifest into cfg.out_dir, and return
// a process exit status. Used by the CLI and exercised directly by tests.
int run_simulate_sde(const RunConfig& cfg);
int run_solve_fp(const RunConfig& cfg);
int run_diagnose(const RunConfig& cfg);
int run_sweep(const RunConfig& cfg);
int run_verify_hypotheses(const RunConfig& cfg);

int run_subcommand(const std::string& name, const RunConfig& cfg);

}  // namespace fiberlab
