#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "hrl4pfg/num/tensor.hpp"

namespace hrl4pfg::num {

class ParamStore;
class Tape;

/// Handle to a node recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
};

/// Gradients produced by one backward pass, keyed by (store, parameter index).
class Gradients {
 public:
  void add(const ParamStore* store, std::size_t index, const Tensor& g);
  const Tensor* find(const ParamStore* store, std::size_t index) const;
  const std::map<std::pair<const ParamStore*, std::size_t>, Tensor>& entries() const { return entries_; }

 private:
  std::map<std::pair<const ParamStore*, std::size_t>, Tensor> entries_;
};

/// Reverse-mode tape. One tape per forward pass; backward may run once.
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var scalar(double v) { return constant(Tensor::scalar(v)); }
  /// Leaf bound to a stored parameter. Repeated calls return the same node.
  Var param(const ParamStore& store, std::size_t index);
  Var param(const ParamStore& store, std::string_view name);

  /// Records an op result. `parents` receive gradient from `back`.
  Var record(Tensor value, std::vector<std::size_t> parents, Backward back);

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  /// Gradient slot of a node, lazily allocated.
  Tensor& grad(std::size_t id);
  bool wants_grad(std::size_t id) const { return nodes_.at(id).needs_grad; }
  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

  /// Seeds d(loss)/d(loss) = 1 and walks nodes in reverse creation order.
  /// Throws std::logic_error on a second call or a non-scalar loss.
  Gradients backward(Var loss);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool needs_grad = false;
    Backward back;
    const ParamStore* store = nullptr;
    std::size_t param_index = 0;
  };

  std::vector<Node> nodes_;
  std::map<std::pair<const ParamStore*, std::size_t>, std::size_t> param_nodes_;
  bool consumed_ = false;
};

/// Functional form of Tape::backward.
Gradients backward(Tape& tape, Var loss);

}  // namespace hrl4pfg::num
