#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hrl4pfg/config.hpp"
#include "hrl4pfg/metrics.hpp"

namespace hrl4pfg::app {

namespace fs = std::filesystem;

/// Catalog and users from the configured files, or synthesized from `seed`.
World load_world(const RunConfig& cfg, std::uint64_t seed);

/// Writes config.json (resolved config) and provenance.json (version, seeds, command).
void write_provenance(const fs::path& dir, const RunConfig& cfg, const std::string& command);

/// catalog.csv and users.csv for `seed`.
void cmd_gen_env(const RunConfig& cfg, std::uint64_t seed, const fs::path& out);

/// Trains every configured seed into out/seed_<s>/. Returns the final-epoch report per seed
/// (empty reports for zero epochs). Throws TrainingDiverged after writing a diagnostic dump.
std::vector<EvalReport> cmd_train(const RunConfig& cfg, const fs::path& out);

/// Deterministic evaluation of a checkpoint; writes eval_<variant>.csv/json into `out`.
EvalReport cmd_eval(const RunConfig& cfg, const fs::path& checkpoint, std::uint64_t seed, std::size_t episodes,
                    const fs::path& out);

/// One-axis sweep ("lambda_g", "M" or "W"). Writes out/sweep_<axis>.csv with one row per (value, seed).
void cmd_sweep(const RunConfig& cfg, const std::string& axis, const std::vector<double>& values, const fs::path& out);

std::string sweep_csv_header();

/// Full command-line entry point. Returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace hrl4pfg::app
