#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hrl4pfg/actor_critic.hpp"
#include "hrl4pfg/catalog.hpp"
#include "hrl4pfg/env.hpp"
#include "hrl4pfg/num/checkpoint.hpp"
#include "hrl4pfg/num/nn.hpp"
#include "hrl4pfg/tracker.hpp"

namespace hrl4pfg {

struct HighAgentConfig {
  std::size_t hidden = 32;
  double sigma2_floor = 1e-4;
  double init_sigma2 = 0.02;  // exploration variance at initialization
  Reduction reduction = Reduction::last;
};

struct FairnessTarget {
  std::vector<double> g;
  std::vector<double> mu;
  std::vector<double> sigma2;
  double logprob = 0.0;
  bool valid = false;
  std::size_t window_start = 0;
  std::size_t window_length = 0;
};

/// One macro window. States are kept as history snapshots so the tracker can be trained through them.
struct HighTransition {
  History history;
  FairnessTarget target;
  double reward = 0.0;
  History next_history;
  bool done = false;
};

struct WindowStep {
  double accuracy = 0.0;  // r^a
  double fairness = 0.0;  // r^f
};

/// 0 when the gate is closed, else sum of (r^a + lambda_f r^f) over the realized window.
double high_reward(std::span<const WindowStep> window, bool gate_open, double lambda_f);
inline double high_reward(std::span<const WindowStep> window, const FairnessTarget& target, double lambda_f) {
  return high_reward(window, target.valid, lambda_f);
}

/// Gaussian actor over target vectors plus online/target state-value critics.
///
/// Parameter names: hra.tracker.*, hra.actor.*, hra.critic.online.*, hra.critic.target.*
class HighAgent {
 public:
  HighAgent(const ItemCatalog& catalog, const HighAgentConfig& cfg, std::uint64_t seed);

  HighAgent(const HighAgent&) = delete;
  HighAgent& operator=(const HighAgent&) = delete;

  std::size_t dim() const { return dim_; }
  const HighAgentConfig& config() const { return cfg_; }

  std::vector<double> state(const History& history) const;
  num::Var state(num::Tape& tape, const History& history) const;

  /// Mean and variance heads. sigma2 = floor + exp(log-variance output).
  struct Heads {
    num::Var mu;
    num::Var sigma2;
  };
  Heads heads(num::Var s_h) const;

  /// g = mu when deterministic, else g ~ N(mu, diag(sigma2)). Throws on non-finite network output.
  FairnessTarget act(std::span<const double> s_h, num::Rng& rng, bool deterministic) const;

  double critic_value(std::span<const double> s_h) const;
  double target_value(std::span<const double> s_h) const;

  /// A_i = r_i + gamma V_target(s'_i)(1 - done_i) - V_online(s_i) under current parameters.
  std::vector<double> advantages(std::span<const HighTransition> batch, double gamma) const;

  /// r + gamma V_target(s')(1 - done) per transition, evaluated once and then held fixed.
  std::vector<double> td_targets(std::span<const HighTransition> batch, double gamma) const;
  num::Var critic_loss(num::Tape& tape, std::span<const HighTransition> batch, double gamma) const;
  num::Var critic_loss(num::Tape& tape, std::span<const HighTransition> batch, std::span<const double> targets) const;
  num::Var actor_loss(num::Tape& tape, std::span<const HighTransition> batch, std::span<const double> advantages) const;

  /// One actor-critic step on an on-policy batch, then a soft target sync.
  UpdateStats update(std::span<const HighTransition> batch, const UpdateSettings& s);

  void sync_target(double tau);

  num::ParamStore& tracker_params() { return tracker_; }
  num::ParamStore& actor_params() { return actor_; }
  num::ParamStore& critic_params() { return critic_; }
  num::ParamStore& target_params() { return target_; }
  const num::ParamStore& tracker_params() const { return tracker_; }
  const num::ParamStore& actor_params() const { return actor_; }
  const num::ParamStore& critic_params() const { return critic_; }
  const num::ParamStore& target_params() const { return target_; }

  void append_to(num::Checkpoint& ckpt) const;
  void load_from(const num::Checkpoint& ckpt);

 private:
  const ItemCatalog* catalog_;
  HighAgentConfig cfg_;
  std::size_t dim_;
  Tracker tracker_model_;
  num::ParamStore tracker_{"hra."};
  num::ParamStore actor_{"hra."};
  num::ParamStore critic_{"hra.critic."};
  num::ParamStore target_{"hra.critic."};
};

}  // namespace hrl4pfg
