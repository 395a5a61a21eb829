#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hrl4pfg/catalog.hpp"
#include "hrl4pfg/num/nn.hpp"

namespace hrl4pfg {

/// Knobs of the simulated environment. Defaults are the desk-scale setting.
struct EnvConfig {
  std::size_t num_items = 200;
  std::size_t dim = 8;
  std::size_t num_users = 1000;
  double eta = 0.1;          // preference drift rate on positive feedback
  double noise = 0.05;       // feedback noise scale
  std::size_t exit_w = 3;    // W: consecutive popular recommendations that end a session
  std::size_t max_len = 30;  // T_max
  std::size_t history_len = 5;  // N
  double zipf_s = 1.2;
  double pop_cluster = 2.5;    // pull of popular items toward the shared popular direction
  double user_pop_bias = 0.0;  // pull of initial user preferences toward the popular direction
};

/// Throws std::invalid_argument describing the first violated constraint.
void validate(const EnvConfig& cfg);

/// Feedback at or above this value counts as positive.
inline constexpr double kPositiveThreshold = 0.5;

struct UserProfile {
  std::size_t id = 0;
  std::vector<double> preference;  // unit norm
  double eta = 0.1;
  double noise = 0.05;
};

using UserPopulation = std::vector<UserProfile>;

struct Interaction {
  std::size_t item = 0;
  bool positive = false;
  friend bool operator==(const Interaction&, const Interaction&) = default;
};

using History = std::vector<Interaction>;

struct Feedback {
  double accuracy = 0.0;  // r^a in [0, 1]
  bool positive = false;
  std::size_t item = 0;
  std::size_t step = 0;
};

enum class ExitCause { none, max_len, popularity_exit };
const char* to_string(ExitCause c);

struct StepResult {
  Feedback feedback;
  bool done = false;
};

/// Noise-free feedback clamp01((u . v + 1) / 2).
double expected_feedback(std::span<const double> preference, std::span<const double> item);

/// One user session against a shared read-only catalog.
///
/// Exposure is counted locally; merge into the catalog once the episode ends.
class Session {
 public:
  Session(const ItemCatalog& catalog, const UserProfile& user, const EnvConfig& cfg, std::uint64_t stream_seed);

  StepResult step(std::size_t item);

  const History& history() const { return history_; }
  std::size_t t() const { return t_; }
  std::size_t popular_run() const { return popular_run_; }
  bool done() const { return cause_ != ExitCause::none; }
  ExitCause cause() const { return cause_; }
  std::size_t max_len() const { return max_len_; }
  std::size_t exit_w() const { return exit_w_; }
  std::size_t user_id() const { return user_id_; }
  std::vector<double> peek_preference() const { return preference_; }
  const std::vector<std::uint64_t>& exposure() const { return exposure_; }
  const ItemCatalog& catalog() const { return *catalog_; }

 private:
  const ItemCatalog* catalog_;
  std::size_t user_id_;
  std::vector<double> preference_;
  double eta_;
  double noise_;
  std::size_t exit_w_;
  std::size_t max_len_;
  std::size_t history_len_;
  num::Rng rng_;
  History history_;
  std::vector<std::uint64_t> exposure_;
  std::size_t t_ = 0;
  std::size_t popular_run_ = 0;
  ExitCause cause_ = ExitCause::none;
};

/// Starts a session: fresh preference copy, history pre-filled with N positive bootstrap
/// interactions sampled from the user's top-preference items, t = 0, popular run 0.
Session reset(const ItemCatalog& catalog, const UserProfile& user, const EnvConfig& cfg, std::uint64_t stream_seed);

// ---------------------------------------------------------------------------
// World construction
// ---------------------------------------------------------------------------

struct World {
  ItemCatalog catalog;
  UserPopulation users;
};

/// Synthetic catalog (Zipf popularity, popular items clustered in embedding space) and users.
/// Identical (cfg, seed) yields identical worlds.
World generate_world(const EnvConfig& cfg, std::uint64_t seed);

/// Zipf rank of each item id (0 = most popular) used by generate_world.
std::vector<std::size_t> zipf_ranks(const EnvConfig& cfg, std::uint64_t seed);

/// CSV `user_id,eta,noise,u_0,...,u_{d-1}`.
void save_users_csv(const std::filesystem::path& path, const UserPopulation& users);
UserPopulation load_users_csv(const std::filesystem::path& path);

struct LogRecord {
  long long user_id = 0;
  std::size_t item_id = 0;
  long long timestamp = 0;
  double feedback = 0.0;
};

/// CSV `user_id,item_id,timestamp,feedback` with feedback in [0, 1].
std::vector<LogRecord> load_interaction_log(const std::filesystem::path& path);

/// Fits popularity (distinct positive users per item over all users) and initial preferences
/// (normalized mean of liked-item embeddings) from a log. Users without a liked item are dropped.
World ingest_log(std::span<const LogRecord> log, const num::Tensor& embeddings, const EnvConfig& cfg);

}  // namespace hrl4pfg
