#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hrl4pfg/env.hpp"
#include "hrl4pfg/trainer.hpp"
#include "json.hpp"

namespace hrl4pfg {

inline constexpr const char* kVersion = HRL4PFG_VERSION_STRING;

/// Optional data files. Empty paths mean "synthesize from the seed".
struct EnvFiles {
  std::string catalog;  // catalog CSV; required together with `users`, or with `log`
  std::string users;    // users CSV
  std::string log;      // interaction log CSV; popularity and preferences are fitted from it
};

struct RunConfig {
  EnvConfig env;
  EnvFiles files;
  TrainConfig train;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4};
  std::string out = "runs/default";
  std::size_t checkpoint_every = 0;  // epochs between intermediate checkpoints; 0 = final only
};

using Json = nlohmann::ordered_json;

/// Fully resolved document: every key present with its value.
Json to_json(const RunConfig& cfg);

/// Starts from defaults and applies `doc`. Unknown keys and ill-typed values throw std::invalid_argument
/// naming the offending path.
RunConfig config_from_json(const Json& doc);

/// Overrides from variables named HRL4PFG_<SECTION>__<KEY> (or HRL4PFG_<KEY> for top-level keys),
/// matched case-insensitively against config paths. Values are parsed as JSON, falling back to a string.
void apply_env_overrides(Json& doc, const std::map<std::string, std::string>& vars);

/// The process environment's HRL4PFG_* variables.
std::map<std::string, std::string> hrl4pfg_environment();

/// Reads `path` (or starts from `{}` when empty), applies environment overrides and resolves.
RunConfig load_config(const std::filesystem::path& path, const std::map<std::string, std::string>& vars);

}  // namespace hrl4pfg
