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

struct LowAgentConfig {
  std::size_t hidden = 32;
  double logit_scale = 0.1;  // scale of the initial output-layer weights
  Reduction reduction = Reduction::last;
};

/// Items closest to a target, in ascending (distance, id) order, and the matching |I|-length mask.
struct CandidateSet {
  std::vector<std::size_t> items;
  std::vector<unsigned char> mask;
};

/// The min(L, |I|) items nearest to g in L2. Ties go to the lower item id.
CandidateSet filter_candidates(std::span<const double> g, const ItemCatalog& catalog, std::size_t L);
/// Every item, mask all ones.
CandidateSet all_candidates(std::size_t num_items);

/// ||p_t - g|| - ||p_next - g||.
double guiding_reward(std::span<const double> p_t, std::span<const double> p_next, std::span<const double> g);

/// 0 when the gate is closed, else r_a + lambda_g r_g.
double low_reward(double r_a, double r_g, bool gate_open, double lambda_g);

struct LowTransition {
  History history;
  std::vector<double> g;
  std::vector<unsigned char> mask;
  std::size_t item = 0;
  double logprob = 0.0;
  double reward = 0.0;
  History next_history;
  bool done = false;
};

/// Masked categorical actor over all items plus online/target critics on s_l = p (+) g.
///
/// Parameter names: lra.tracker.*, lra.actor.*, lra.critic.online.*, lra.critic.target.*
class LowAgent {
 public:
  LowAgent(const ItemCatalog& catalog, const LowAgentConfig& cfg, std::uint64_t seed);

  LowAgent(const LowAgent&) = delete;
  LowAgent& operator=(const LowAgent&) = delete;

  std::size_t dim() const { return dim_; }
  std::size_t num_items() const { return num_items_; }

  std::vector<double> preference(const History& history) const;
  num::Var preference(num::Tape& tape, const History& history) const;

  std::vector<double> logits(std::span<const double> s_l) const;
  /// Masked softmax over the actor's logits; off-mask entries are exactly 0. Throws on an all-zero mask.
  std::vector<double> policy(std::span<const double> s_l, std::span<const unsigned char> mask) const;

  struct Choice {
    std::size_t item = 0;
    double logprob = 0.0;
  };
  /// Samples from the policy, or takes its argmax (lowest id on ties) when deterministic.
  Choice act(std::span<const double> s_l, std::span<const unsigned char> mask, num::Rng& rng, bool deterministic) const;

  double critic_value(std::span<const double> s_l) const;
  double target_value(std::span<const double> s_l) const;

  std::vector<double> advantages(std::span<const LowTransition> batch, double gamma) const;
  /// r + gamma V_target(s')(1 - done) per transition, evaluated once and then held fixed.
  std::vector<double> td_targets(std::span<const LowTransition> batch, double gamma) const;
  num::Var critic_loss(num::Tape& tape, std::span<const LowTransition> batch, double gamma) const;
  num::Var critic_loss(num::Tape& tape, std::span<const LowTransition> batch, std::span<const double> targets) const;
  num::Var actor_loss(num::Tape& tape, std::span<const LowTransition> batch, std::span<const double> advantages) const;
  UpdateStats update(std::span<const LowTransition> batch, const UpdateSettings& s);
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
  num::Var low_state(num::Tape& tape, const History& history, std::span<const double> g) const;
  std::vector<double> low_state(const History& history, std::span<const double> g) const;

  LowAgentConfig cfg_;
  std::size_t dim_;
  std::size_t num_items_;
  Tracker tracker_model_;
  num::ParamStore tracker_{"lra."};
  num::ParamStore actor_{"lra."};
  num::ParamStore critic_{"lra.critic."};
  num::ParamStore target_{"lra.critic."};
};

}  // namespace hrl4pfg
