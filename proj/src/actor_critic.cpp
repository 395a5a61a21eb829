#include "hrl4pfg/actor_critic.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "hrl4pfg/num/ops.hpp"

namespace hrl4pfg {

void check_gamma(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0, 1]");
}

void check_settings(const UpdateSettings& s) {
  check_gamma(s.gamma);
  if (!(s.lr_actor > 0.0) || !(s.lr_critic > 0.0) || !(s.lr_tracker > 0.0)) throw std::invalid_argument("learning rates must be > 0");
  if (!(s.tau > 0.0 && s.tau <= 1.0)) throw std::invalid_argument("tau must lie in (0, 1]");
}

double td_target(double reward, double gamma, double v_next, bool done) {
  return done ? reward : reward + gamma * v_next;
}

num::Var squared_error_loss(std::span<const num::Var> values, std::span<const double> targets) {
  if (values.empty()) throw std::invalid_argument("critic loss: empty batch");
  if (values.size() != targets.size()) throw std::invalid_argument("critic loss: value/target count mismatch");
  num::Var acc = num::square(num::add_scalar(num::sum(values[0]), -targets[0]));
  for (std::size_t i = 1; i < values.size(); ++i) acc = acc + num::square(num::add_scalar(num::sum(values[i]), -targets[i]));
  return num::scale(acc, 1.0 / static_cast<double>(values.size()));
}

num::Var policy_gradient_loss(std::span<const num::Var> logprobs, std::span<const double> advantages) {
  if (logprobs.empty()) throw std::invalid_argument("actor loss: empty batch");
  if (logprobs.size() != advantages.size()) throw std::invalid_argument("actor loss: logprob/advantage count mismatch");
  num::Var acc = num::scale(logprobs[0], advantages[0]);
  for (std::size_t i = 1; i < logprobs.size(); ++i) acc = acc + num::scale(logprobs[i], advantages[i]);
  return num::scale(acc, -1.0 / static_cast<double>(logprobs.size()));
}

void require_finite_loss(double x, const char* what) {
  if (!std::isfinite(x)) throw std::runtime_error(std::string("non-finite ") + what + " (" + std::to_string(x) + ")");
}

}  // namespace hrl4pfg
