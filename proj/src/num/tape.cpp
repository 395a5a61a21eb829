#include "hrl4pfg/num/tape.hpp"

#include <stdexcept>

#include "hrl4pfg/num/param_store.hpp"

namespace hrl4pfg::num {

const Tensor& Var::value() const {
  if (!tape) throw std::logic_error("Var: unbound handle");
  return tape->value(id);
}

void Gradients::add(const ParamStore* store, std::size_t index, const Tensor& g) {
  auto key = std::make_pair(store, index);
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    entries_.emplace(key, g);
    return;
  }
  auto dst = it->second.data();
  auto src = g.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

const Tensor* Gradients::find(const ParamStore* store, std::size_t index) const {
  auto it = entries_.find(std::make_pair(store, index));
  return it == entries_.end() ? nullptr : &it->second;
}

Var Tape::constant(Tensor value) {
  require_finite(value.data(), "Tape::constant");
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

Var Tape::param(const ParamStore& store, std::size_t index) {
  auto key = std::make_pair(&store, index);
  if (auto it = param_nodes_.find(key); it != param_nodes_.end()) return Var{this, it->second};
  Node n;
  n.value = store.value(index);
  n.needs_grad = true;
  n.store = &store;
  n.param_index = index;
  nodes_.push_back(std::move(n));
  param_nodes_.emplace(key, nodes_.size() - 1);
  return Var{this, nodes_.size() - 1};
}

Var Tape::param(const ParamStore& store, std::string_view name) { return param(store, store.index(name)); }

Var Tape::record(Tensor value, std::vector<std::size_t> parents, Backward back) {
  if (consumed_) throw std::logic_error("Tape: recording after backward; start a new forward pass");
  Node n;
  n.value = std::move(value);
  for (std::size_t p : parents) {
    if (nodes_.at(p).needs_grad) n.needs_grad = true;
  }
  if (n.needs_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

Tensor& Tape::grad(std::size_t id) {
  Node& n = nodes_.at(id);
  if (!n.has_grad) {
    n.grad = Tensor::zeros_like(n.value);
    n.has_grad = true;
  }
  return n.grad;
}

Gradients Tape::backward(Var loss) {
  if (loss.tape != this) throw std::logic_error("Tape::backward: loss belongs to another tape");
  if (consumed_) throw std::logic_error("Tape::backward: tape already consumed (stale tape)");
  if (value(loss.id).size() != 1) throw std::logic_error("Tape::backward: loss must be a scalar");
  consumed_ = true;

  Gradients out;
  if (!nodes_[loss.id].needs_grad) return out;
  grad(loss.id)[0] = 1.0;
  for (std::size_t k = loss.id + 1; k-- > 0;) {
    Node& n = nodes_[k];
    if (!n.needs_grad || !n.has_grad) continue;
    if (n.store) {
      out.add(n.store, n.param_index, n.grad);
    } else if (n.back) {
      n.back(*this, k);
    }
  }
  return out;
}

Gradients backward(Tape& tape, Var loss) { return tape.backward(loss); }

}  // namespace hrl4pfg::num
