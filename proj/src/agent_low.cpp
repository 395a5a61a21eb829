#include "hrl4pfg/agent_low.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "hrl4pfg/num/ops.hpp"

namespace hrl4pfg {

using num::Tensor;
using num::Var;

CandidateSet filter_candidates(std::span<const double> g, const ItemCatalog& catalog, std::size_t L) {
  if (catalog.empty()) throw std::invalid_argument("filter_candidates: empty catalog");
  if (L == 0) throw std::invalid_argument("filter_candidates: L must be >= 1");
  if (g.size() != catalog.dim()) throw std::invalid_argument("filter_candidates: target dimension mismatch");
  const std::size_t n = catalog.size();
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) dist[i] = num::l2_distance(catalog.embedding(i), g);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t k = std::min(L, n);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) { return dist[a] < dist[b] || (dist[a] == dist[b] && a < b); });
  CandidateSet c;
  c.items.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  c.mask.assign(n, 0);
  for (std::size_t i : c.items) c.mask[i] = 1;
  return c;
}

CandidateSet all_candidates(std::size_t num_items) {
  if (num_items == 0) throw std::invalid_argument("all_candidates: empty catalog");
  CandidateSet c;
  c.items.resize(num_items);
  std::iota(c.items.begin(), c.items.end(), 0);
  c.mask.assign(num_items, 1);
  return c;
}

double guiding_reward(std::span<const double> p_t, std::span<const double> p_next, std::span<const double> g) {
  if (p_t.size() != g.size() || p_next.size() != g.size())
    throw std::invalid_argument("guiding_reward: dimension mismatch");
  return num::l2_distance(p_t, g) - num::l2_distance(p_next, g);
}

double low_reward(double r_a, double r_g, bool gate_open, double lambda_g) {
  if (!(lambda_g >= 0.0)) throw std::invalid_argument("low_reward: lambda_g must be >= 0");
  return gate_open ? r_a + lambda_g * r_g : 0.0;
}

LowAgent::LowAgent(const ItemCatalog& catalog, const LowAgentConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), dim_(catalog.dim()), num_items_(catalog.size()), tracker_model_(cfg.reduction) {
  if (cfg.hidden == 0) throw std::invalid_argument("LowAgent: hidden width must be >= 1");
  num::Rng rng(num::derive_seed(seed, {0x4c52}));
  Tracker::add_params(tracker_, catalog, rng);
  const std::array<std::size_t, 3> actor_sizes{2 * dim_, cfg.hidden, num_items_};
  num::add_mlp(actor_, "actor", actor_sizes, rng, cfg.logit_scale);
  const std::array<std::size_t, 3> critic_sizes{2 * dim_, cfg.hidden, 1};
  num::add_mlp(critic_, "online", critic_sizes, rng);
  num::Rng copy_rng(0);
  num::add_mlp(target_, "target", critic_sizes, copy_rng);
  target_.soft_update_from(critic_, 1.0);
}

std::vector<double> LowAgent::preference(const History& history) const {
  return tracker_model_.encode(tracker_, history);
}

Var LowAgent::preference(num::Tape& tape, const History& history) const {
  return tracker_model_.encode(tape, tracker_, history);
}

Var LowAgent::low_state(num::Tape& tape, const History& history, std::span<const double> g) const {
  return build_low_state(preference(tape, history), tape.constant(Tensor::vector({g.begin(), g.end()})));
}

std::vector<double> LowAgent::low_state(const History& history, std::span<const double> g) const {
  return build_low_state(preference(history), g);
}

std::vector<double> LowAgent::logits(std::span<const double> s_l) const {
  if (s_l.size() != 2 * dim_) throw std::invalid_argument("LowAgent: state dimension mismatch");
  return num::mlp_forward(actor_, "actor", s_l);
}

std::vector<double> LowAgent::policy(std::span<const double> s_l, std::span<const unsigned char> mask) const {
  if (mask.size() != num_items_) throw std::invalid_argument("LowAgent::policy: mask length mismatch");
  if (std::none_of(mask.begin(), mask.end(), [](unsigned char m) { return m != 0; }))
    throw std::invalid_argument("LowAgent::policy: all-zero mask");
  return num::masked_softmax(logits(s_l), mask);
}

LowAgent::Choice LowAgent::act(std::span<const double> s_l, std::span<const unsigned char> mask, num::Rng& rng,
                               bool deterministic) const {
  const auto p = policy(s_l, mask);
  std::size_t pick = 0;
  if (deterministic) {
    for (std::size_t i = 0; i < p.size(); ++i)
      if (mask[i] && (!mask[pick] || p[i] > p[pick])) pick = i;
  } else {
    const double u = num::uniform01(rng);
    double acc = 0.0;
    pick = num_items_;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (!mask[i]) continue;
      acc += p[i];
      pick = i;
      if (u < acc) break;
    }
  }
  return {pick, std::log(p[pick])};
}

double LowAgent::critic_value(std::span<const double> s_l) const { return num::mlp_forward(critic_, "online", s_l)[0]; }

double LowAgent::target_value(std::span<const double> s_l) const { return num::mlp_forward(target_, "target", s_l)[0]; }

std::vector<double> LowAgent::advantages(std::span<const LowTransition> batch, double gamma) const {
  auto a = td_targets(batch, gamma);
  for (std::size_t i = 0; i < batch.size(); ++i) a[i] -= critic_value(low_state(batch[i].history, batch[i].g));
  return a;
}

std::vector<double> LowAgent::td_targets(std::span<const LowTransition> batch, double gamma) const {
  check_gamma(gamma);
  std::vector<double> out;
  out.reserve(batch.size());
  for (const auto& tr : batch) out.push_back(td_target(tr.reward, gamma, tr.done ? 0.0 : target_value(low_state(tr.next_history, tr.g)), tr.done));
  return out;
}

Var LowAgent::critic_loss(num::Tape& tape, std::span<const LowTransition> batch, double gamma) const {
  return critic_loss(tape, batch, td_targets(batch, gamma));
}

Var LowAgent::critic_loss(num::Tape& tape, std::span<const LowTransition> batch, std::span<const double> targets) const {
  if (batch.empty()) throw std::invalid_argument("LowAgent::critic_loss: empty batch");
  std::vector<Var> values;
  values.reserve(batch.size());
  for (const auto& tr : batch) values.push_back(num::mlp_forward(tape, critic_, "online", low_state(tape, tr.history, tr.g)));
  return squared_error_loss(values, targets);
}

Var LowAgent::actor_loss(num::Tape& tape, std::span<const LowTransition> batch,
                         std::span<const double> advantages) const {
  if (batch.empty()) throw std::invalid_argument("LowAgent::actor_loss: empty batch");
  std::vector<Var> logprobs;
  for (const auto& tr : batch) {
    Var lg = num::mlp_forward(tape, actor_, "actor", low_state(tape, tr.history, tr.g));
    logprobs.push_back(num::masked_log_softmax_at(lg, tr.mask, tr.item));
  }
  return policy_gradient_loss(logprobs, advantages);
}

UpdateStats LowAgent::update(std::span<const LowTransition> batch, const UpdateSettings& s) {
  check_settings(s);
  if (batch.empty()) throw std::invalid_argument("LowAgent::update: empty batch");
  const auto targets = td_targets(batch, s.gamma);
  std::vector<double> adv = targets;
  for (std::size_t i = 0; i < batch.size(); ++i) adv[i] -= critic_value(low_state(batch[i].history, batch[i].g));
  num::Tape tape;
  Var lc = critic_loss(tape, batch, targets);
  Var la = actor_loss(tape, batch, adv);
  UpdateStats st;
  st.critic_loss = lc.value().item();
  st.actor_loss = la.value().item();
  st.batch = batch.size();
  for (double a : adv) st.mean_advantage += a / static_cast<double>(adv.size());
  require_finite_loss(st.critic_loss, "low-level critic loss");
  require_finite_loss(st.actor_loss, "low-level actor loss");
  const auto grads = tape.backward(lc + la);
  for (auto* store : {&tracker_, &actor_, &critic_}) store->accumulate(grads);
  actor_.step(s.lr_actor);
  critic_.step(s.lr_critic);
  tracker_.step(s.lr_tracker);
  sync_target(s.tau);
  return st;
}

void LowAgent::sync_target(double tau) { target_.soft_update_from(critic_, tau); }

void LowAgent::append_to(num::Checkpoint& ckpt) const {
  for (const auto* store : {&tracker_, &actor_, &critic_, &target_}) num::append_params(ckpt, *store);
}

void LowAgent::load_from(const num::Checkpoint& ckpt) {
  for (auto* store : {&tracker_, &actor_, &critic_, &target_}) num::load_params(*store, ckpt);
}

}  // namespace hrl4pfg
