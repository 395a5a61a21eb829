#pragma once

#include <span>

#include "hrl4pfg/num/tape.hpp"

namespace hrl4pfg {

/// Learning-rate and discount settings for one level of the hierarchy.
struct UpdateSettings {
  double lr_actor = 1e-3;
  double lr_critic = 3e-3;
  double lr_tracker = 3e-4;  // state tracker of the level
  double gamma = 0.9;
  double tau = 0.01;
};

/// Scalar diagnostics from one update step.
struct UpdateStats {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double mean_advantage = 0.0;
  std::size_t batch = 0;
};

void check_gamma(double gamma);
void check_settings(const UpdateSettings& s);

/// r + gamma * v_next * (1 - done).
double td_target(double reward, double gamma, double v_next, bool done);

/// mean((v_i - target_i)^2). Throws on empty or mismatched input.
num::Var squared_error_loss(std::span<const num::Var> values, std::span<const double> targets);

/// -mean(logprob_i * advantage_i); advantages are constants.
num::Var policy_gradient_loss(std::span<const num::Var> logprobs, std::span<const double> advantages);

/// Throws std::runtime_error carrying `what` when `x` is not finite.
void require_finite_loss(double x, const char* what);

}  // namespace hrl4pfg
