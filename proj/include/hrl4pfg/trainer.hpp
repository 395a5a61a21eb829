#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "hrl4pfg/agent_high.hpp"
#include "hrl4pfg/agent_low.hpp"
#include "hrl4pfg/env.hpp"
#include "hrl4pfg/episode.hpp"
#include "hrl4pfg/metrics.hpp"
#include "hrl4pfg/num/checkpoint.hpp"

namespace hrl4pfg {

enum class Variant { full, wo_hie, wo_tc, wo_fm, random };

/// Accepts "full", "wo-hie", "wo-tc", "wo-fm", "random".
Variant parse_variant(const std::string& name);
const char* to_string(Variant v);

struct TrainConfig {
  std::size_t macro_interval = 3;  // M
  std::size_t epochs = 50;
  std::size_t episodes_per_epoch = 32;
  std::size_t episodes_per_update = 8;  // on-policy batch size in episodes
  std::size_t eval_episodes = 100;
  UpdateSettings high{1e-3, 3e-3, 3e-4, 0.9, 0.05};
  UpdateSettings low{3e-3, 3e-3, 3e-4, 0.9, 0.05};
  double lambda_f = 0.3;
  double lambda_g = 0.1;
  std::size_t top_l = 20;
  HighAgentConfig high_agent;
  LowAgentConfig low_agent;
  Variant variant = Variant::full;
  std::size_t workers = 1;
  std::uint64_t seed = 0;
};

void validate(const TrainConfig& cfg);

/// Agents and switches for one variant.
struct Assembly {
  Variant variant = Variant::full;
  std::unique_ptr<HighAgent> high;  // absent for wo-hie
  std::unique_ptr<LowAgent> low;
  bool force_gate = false;  // wo-tc (and wo-hie, which has no target to check)
  bool use_filter = true;   // false for wo-fm and wo-hie
  bool uniform_policy = false;
  double lambda_g = 0.1;

  num::Checkpoint checkpoint() const;
  void load(const num::Checkpoint& ckpt);
};

Assembly make_variant(const TrainConfig& cfg, const ItemCatalog& catalog);

enum class Mode { train, eval };

struct Rollout {
  EpisodeLog log;
  std::vector<HighTransition> high;
  std::vector<LowTransition> low;
};

/// Runs one session with the macro/micro interleaving. Transitions are only collected in train mode;
/// eval mode uses g = mu and the argmax item.
Rollout rollout_episode(const ItemCatalog& catalog, const UserProfile& user, const EnvConfig& env,
                        const Assembly& agents, const TrainConfig& cfg, Mode mode, std::uint64_t episode_seed);

/// Deterministic-policy evaluation over `episodes` fixed episode seeds derived from `seed`.
EvalReport evaluate(const World& world, const EnvConfig& env, const TrainConfig& cfg, const Assembly& agents,
                    std::size_t episodes, std::uint64_t seed, long long epoch = 0);

/// Raised when a loss turns non-finite. `what()` carries the diagnostic summary.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& msg, num::Checkpoint state)
      : std::runtime_error(msg), state_(std::move(state)) {}
  const num::Checkpoint& state() const { return state_; }

 private:
  num::Checkpoint state_;
};

struct EpochStats {
  UpdateStats low;
  UpdateStats high;
  std::size_t updates = 0;
};

struct TrainResult {
  std::vector<EvalReport> reports;  // one per epoch
  std::vector<EpochStats> stats;
  num::Checkpoint initial;
  num::Checkpoint final;
  std::vector<std::uint64_t> train_exposure;  // Exp(i) accumulated over training episodes
};

using EpochCallback = std::function<void(std::size_t epoch, const Assembly&, const EvalReport&)>;

/// Joint from-scratch training: per update round the low level is updated before the high level.
TrainResult train(const World& world, const EnvConfig& env, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace hrl4pfg
