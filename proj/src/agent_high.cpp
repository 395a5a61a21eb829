#include "hrl4pfg/agent_high.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include "hrl4pfg/num/ops.hpp"

namespace hrl4pfg {

using num::Tensor;
using num::Var;

double high_reward(std::span<const WindowStep> window, bool gate_open, double lambda_f) {
  if (!(lambda_f >= 0.0)) throw std::invalid_argument("high_reward: lambda_f must be >= 0");
  if (window.empty()) throw std::invalid_argument("high_reward: empty window");
  if (!gate_open) return 0.0;
  double r = 0.0;
  for (const auto& w : window) r += w.accuracy + lambda_f * w.fairness;
  return r;
}

HighAgent::HighAgent(const ItemCatalog& catalog, const HighAgentConfig& cfg, std::uint64_t seed)
    : catalog_(&catalog), cfg_(cfg), dim_(catalog.dim()), tracker_model_(cfg.reduction) {
  if (!(cfg.sigma2_floor > 0.0)) throw std::invalid_argument("HighAgent: sigma2 floor must be > 0");
  if (!(cfg.init_sigma2 > cfg.sigma2_floor)) throw std::invalid_argument("HighAgent: init_sigma2 must exceed the floor");
  if (cfg.hidden == 0) throw std::invalid_argument("HighAgent: hidden width must be >= 1");
  num::Rng rng(num::derive_seed(seed, {0x4842}));
  Tracker::add_params(tracker_, catalog, rng);

  const std::size_t d = dim_, h = cfg.hidden;
  const std::array<std::size_t, 3> actor_sizes{d, h, 2 * d};
  num::add_mlp(actor_, "actor", actor_sizes, rng, 0.1);
  // The mean head starts near the identity map on s_h; the log-variance head starts at init_sigma2.
  if (h >= d) {
    Tensor w0 = actor_.value("actor.l0.w");
    for (std::size_t i = 0; i < d; ++i) w0.data()[i * d + i] += 0.5;
    actor_.set(actor_.index("actor.l0.w"), std::move(w0));
    Tensor w1 = actor_.value("actor.l1.w");
    for (std::size_t i = 0; i < d; ++i) w1.data()[i * h + i] += 2.0;
    actor_.set(actor_.index("actor.l1.w"), std::move(w1));
  }
  Tensor b1 = actor_.value("actor.l1.b");
  for (std::size_t i = 0; i < d; ++i) b1.data()[d + i] = std::log(cfg.init_sigma2 - cfg.sigma2_floor);
  actor_.set(actor_.index("actor.l1.b"), std::move(b1));

  const std::array<std::size_t, 3> critic_sizes{d, h, 1};
  num::add_mlp(critic_, "online", critic_sizes, rng);
  num::Rng copy_rng(0);
  num::add_mlp(target_, "target", critic_sizes, copy_rng);
  target_.soft_update_from(critic_, 1.0);
}

std::vector<double> HighAgent::state(const History& history) const { return tracker_model_.encode(tracker_, history); }

Var HighAgent::state(num::Tape& tape, const History& history) const {
  return tracker_model_.encode(tape, tracker_, history);
}

HighAgent::Heads HighAgent::heads(Var s_h) const {
  Var out = num::mlp_forward(*s_h.tape, actor_, "actor", s_h);
  Var mu = num::slice(out, 0, dim_);
  Var sigma2 = num::add_scalar(num::exp(num::slice(out, dim_, dim_)), cfg_.sigma2_floor);
  return {mu, sigma2};
}

FairnessTarget HighAgent::act(std::span<const double> s_h, num::Rng& rng, bool deterministic) const {
  if (s_h.size() != dim_) throw std::invalid_argument("HighAgent::act: state dimension mismatch");
  num::require_finite(s_h, "HighAgent::act state");
  const auto out = num::mlp_forward(actor_, "actor", s_h);
  FairnessTarget t;
  t.mu.assign(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(dim_));
  t.sigma2.resize(dim_);
  for (std::size_t k = 0; k < dim_; ++k) t.sigma2[k] = cfg_.sigma2_floor + std::exp(out[dim_ + k]);
  for (std::size_t k = 0; k < dim_; ++k) {
    if (!std::isfinite(t.mu[k]) || !std::isfinite(t.sigma2[k]))
      throw std::runtime_error("HighAgent::act: non-finite actor output");
  }
  t.g = t.mu;
  if (!deterministic) {
    for (std::size_t k = 0; k < dim_; ++k) t.g[k] += std::sqrt(t.sigma2[k]) * num::standard_normal(rng);
  }
  t.logprob = num::gaussian_logprob(t.g, t.mu, t.sigma2);
  t.valid = catalog_->target_is_valid(t.g);
  return t;
}

double HighAgent::critic_value(std::span<const double> s_h) const { return num::mlp_forward(critic_, "online", s_h)[0]; }

double HighAgent::target_value(std::span<const double> s_h) const { return num::mlp_forward(target_, "target", s_h)[0]; }

std::vector<double> HighAgent::advantages(std::span<const HighTransition> batch, double gamma) const {
  auto a = td_targets(batch, gamma);
  for (std::size_t i = 0; i < batch.size(); ++i) a[i] -= critic_value(state(batch[i].history));
  return a;
}

std::vector<double> HighAgent::td_targets(std::span<const HighTransition> batch, double gamma) const {
  check_gamma(gamma);
  std::vector<double> out;
  out.reserve(batch.size());
  for (const auto& tr : batch) out.push_back(td_target(tr.reward, gamma, tr.done ? 0.0 : target_value(state(tr.next_history)), tr.done));
  return out;
}

Var HighAgent::critic_loss(num::Tape& tape, std::span<const HighTransition> batch, double gamma) const {
  return critic_loss(tape, batch, td_targets(batch, gamma));
}

Var HighAgent::critic_loss(num::Tape& tape, std::span<const HighTransition> batch, std::span<const double> targets) const {
  if (batch.empty()) throw std::invalid_argument("HighAgent::critic_loss: empty batch");
  std::vector<Var> values;
  values.reserve(batch.size());
  for (const auto& tr : batch) values.push_back(num::mlp_forward(tape, critic_, "online", state(tape, tr.history)));
  return squared_error_loss(values, targets);
}

Var HighAgent::actor_loss(num::Tape& tape, std::span<const HighTransition> batch,
                          std::span<const double> advantages) const {
  if (batch.empty()) throw std::invalid_argument("HighAgent::actor_loss: empty batch");
  std::vector<Var> logprobs;
  for (const auto& tr : batch) {
    const Heads h = heads(state(tape, tr.history));
    logprobs.push_back(num::gaussian_logprob(tape.constant(Tensor::vector(tr.target.g)), h.mu, h.sigma2));
  }
  return policy_gradient_loss(logprobs, advantages);
}

UpdateStats HighAgent::update(std::span<const HighTransition> batch, const UpdateSettings& s) {
  check_settings(s);
  if (batch.empty()) throw std::invalid_argument("HighAgent::update: empty batch");
  const auto targets = td_targets(batch, s.gamma);
  std::vector<double> adv = targets;
  for (std::size_t i = 0; i < batch.size(); ++i) adv[i] -= critic_value(state(batch[i].history));
  num::Tape tape;
  Var lc = critic_loss(tape, batch, targets);
  Var la = actor_loss(tape, batch, adv);
  UpdateStats st;
  st.critic_loss = lc.value().item();
  st.actor_loss = la.value().item();
  st.batch = batch.size();
  for (double a : adv) st.mean_advantage += a / static_cast<double>(adv.size());
  require_finite_loss(st.critic_loss, "high-level critic loss");
  require_finite_loss(st.actor_loss, "high-level actor loss");
  const auto grads = tape.backward(lc + la);
  for (auto* store : {&tracker_, &actor_, &critic_}) store->accumulate(grads);
  actor_.step(s.lr_actor);
  critic_.step(s.lr_critic);
  tracker_.step(s.lr_tracker);
  sync_target(s.tau);
  return st;
}

void HighAgent::sync_target(double tau) { target_.soft_update_from(critic_, tau); }

void HighAgent::append_to(num::Checkpoint& ckpt) const {
  for (const auto* store : {&tracker_, &actor_, &critic_, &target_}) num::append_params(ckpt, *store);
}

void HighAgent::load_from(const num::Checkpoint& ckpt) {
  for (auto* store : {&tracker_, &actor_, &critic_, &target_}) num::load_params(*store, ckpt);
}

}  // namespace hrl4pfg
