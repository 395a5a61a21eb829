#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "hrl4pfg/num/tensor.hpp"

namespace hrl4pfg::num {

class Gradients;

enum class Optimizer { sgd, adam };

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Named trainable tensors with same-shaped gradient slots and optimizer state.
///
/// Insertion order is preserved; it defines checkpoint order.
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(std::string prefix, Optimizer opt = Optimizer::adam) : prefix_(std::move(prefix)), optimizer_(opt) {}

  /// Adds a parameter. Names are stored as `prefix + name`. Duplicate names throw.
  std::size_t add(std::string_view name, Tensor value);

  std::size_t size() const { return values_.size(); }
  bool contains(std::string_view name) const;
  /// Index of `prefix + name`; throws std::out_of_range when missing.
  std::size_t index(std::string_view name) const;

  const std::string& prefix() const { return prefix_; }
  const std::string& full_name(std::size_t i) const { return names_.at(i); }
  const Tensor& value(std::size_t i) const { return values_.at(i); }
  const Tensor& value(std::string_view name) const { return values_.at(index(name)); }
  const Tensor& grad(std::size_t i) const { return grads_.at(i); }
  /// Replaces a parameter value. Shape must match and values must be finite.
  void set(std::size_t i, Tensor value);

  void zero_grad();
  /// Adds every gradient in `g` that belongs to this store.
  void accumulate(const Gradients& g);
  void add_grad(std::size_t i, std::span<const double> g);

  Optimizer optimizer() const { return optimizer_; }
  void set_optimizer(Optimizer opt, AdamSettings s = {}) {
    optimizer_ = opt;
    adam_ = s;
  }
  std::uint64_t steps() const { return steps_; }

  /// theta <- theta - lr * update(grad), then gradients are zeroed.
  void step(double lr);

  /// target <- tau * online + (1 - tau) * target, matched by position. Throws on shape mismatch.
  void soft_update_from(const ParamStore& online, double tau);

  double grad_norm() const;

  bool same_values(const ParamStore& other) const;

 private:
  std::string prefix_;
  Optimizer optimizer_ = Optimizer::adam;
  AdamSettings adam_;
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::vector<Tensor> grads_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::map<std::string, std::size_t, std::less<>> by_name_;
  std::uint64_t steps_ = 0;
};

}  // namespace hrl4pfg::num
