#include "hrl4pfg/num/param_store.hpp"

#include <cmath>
#include <stdexcept>

#include "hrl4pfg/num/tape.hpp"

namespace hrl4pfg::num {

std::size_t ParamStore::add(std::string_view name, Tensor value) {
  std::string full = prefix_ + std::string(name);
  if (by_name_.contains(full)) throw std::invalid_argument("ParamStore: duplicate parameter " + full);
  require_finite(value.data(), "ParamStore::add");
  names_.push_back(full);
  grads_.push_back(Tensor::zeros_like(value));
  m_.push_back(Tensor::zeros_like(value));
  v_.push_back(Tensor::zeros_like(value));
  values_.push_back(std::move(value));
  by_name_.emplace(std::move(full), values_.size() - 1);
  return values_.size() - 1;
}

bool ParamStore::contains(std::string_view name) const {
  return by_name_.find(prefix_ + std::string(name)) != by_name_.end();
}

std::size_t ParamStore::index(std::string_view name) const {
  auto it = by_name_.find(prefix_ + std::string(name));
  if (it == by_name_.end()) throw std::out_of_range("ParamStore: no parameter " + prefix_ + std::string(name));
  return it->second;
}

void ParamStore::set(std::size_t i, Tensor value) {
  if (value.shape() != values_.at(i).shape()) {
    throw std::invalid_argument("ParamStore::set: shape mismatch for " + names_[i] + ": expected " +
                                shape_string(values_[i].shape()) + ", got " + shape_string(value.shape()));
  }
  require_finite(value.data(), names_[i].c_str());
  values_[i] = std::move(value);
}

void ParamStore::zero_grad() {
  for (auto& g : grads_) g.fill(0.0);
}

void ParamStore::add_grad(std::size_t i, std::span<const double> g) {
  auto dst = grads_.at(i).data();
  if (g.size() != dst.size()) throw std::invalid_argument("ParamStore::add_grad: size mismatch for " + names_[i]);
  for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += g[k];
}

void ParamStore::accumulate(const Gradients& g) {
  for (const auto& [key, t] : g.entries()) {
    if (key.first == this) add_grad(key.second, t.data());
  }
}

void ParamStore::step(double lr) {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw std::invalid_argument("ParamStore::step: learning rate must be > 0");
  ++steps_;
  if (optimizer_ == Optimizer::sgd) {
    for (std::size_t i = 0; i < values_.size(); ++i) {
      auto w = values_[i].data();
      auto g = grads_[i].data();
      for (std::size_t k = 0; k < w.size(); ++k) w[k] -= lr * g[k];
    }
  } else {
    const double t = static_cast<double>(steps_);
    const double c1 = 1.0 - std::pow(adam_.beta1, t);
    const double c2 = 1.0 - std::pow(adam_.beta2, t);
    for (std::size_t i = 0; i < values_.size(); ++i) {
      auto w = values_[i].data();
      auto g = grads_[i].data();
      auto m = m_[i].data();
      auto v = v_[i].data();
      for (std::size_t k = 0; k < w.size(); ++k) {
        m[k] = adam_.beta1 * m[k] + (1.0 - adam_.beta1) * g[k];
        v[k] = adam_.beta2 * v[k] + (1.0 - adam_.beta2) * g[k] * g[k];
        w[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + adam_.eps);
      }
    }
  }
  zero_grad();
}

void ParamStore::soft_update_from(const ParamStore& online, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("soft_update_from: tau must lie in (0, 1]");
  if (online.size() != size()) throw std::invalid_argument("soft_update_from: parameter count mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (online.values_[i].shape() != values_[i].shape()) {
      throw std::invalid_argument("soft_update_from: shape mismatch at " + names_[i]);
    }
    auto dst = values_[i].data();
    auto src = online.values_[i].data();
    if (tau == 1.0) {
      std::copy(src.begin(), src.end(), dst.begin());
    } else {
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = tau * src[k] + (1.0 - tau) * dst[k];
    }
  }
}

double ParamStore::grad_norm() const {
  double s = 0.0;
  for (const auto& g : grads_) {
    for (double x : g.data()) s += x * x;
  }
  return std::sqrt(s);
}

bool ParamStore::same_values(const ParamStore& other) const {
  return names_ == other.names_ && values_ == other.values_;
}

}  // namespace hrl4pfg::num
