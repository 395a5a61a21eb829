#include "hrl4pfg/tracker.hpp"

#include <cmath>
#include <stdexcept>

#include "hrl4pfg/num/ops.hpp"

namespace hrl4pfg {

using num::Tensor;
using num::Var;

Reduction parse_reduction(const std::string& s) {
  if (s == "last") return Reduction::last;
  if (s == "mean") return Reduction::mean;
  throw std::invalid_argument("unknown tracker reduction '" + s + "' (expected last|mean)");
}

const char* to_string(Reduction r) { return r == Reduction::last ? "last" : "mean"; }

void Tracker::add_params(num::ParamStore& store, const ItemCatalog& catalog, num::Rng& rng) {
  const std::size_t d = catalog.dim();
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  auto uniform = [&](double b) { return b * (2.0 * num::uniform01(rng) - 1.0); };

  store.add("tracker.item_table", catalog.embeddings());
  std::vector<double> fb(2 * d);
  for (double& x : fb) x = 0.1 * uniform(1.0);
  store.add("tracker.feedback_table", Tensor::matrix(2, d, std::move(fb)));

  // W_in starts as [I | small]: the interaction embedding begins close to the item vector.
  std::vector<double> w_in(d * 2 * d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < 2 * d; ++j) w_in[i * 2 * d + j] = (i == j ? 1.0 : 0.0) + 0.1 * uniform(bound);
  store.add("tracker.w_in", Tensor::matrix(d, 2 * d, std::move(w_in)));

  for (const char* name : {"tracker.w_q", "tracker.w_k"}) {
    std::vector<double> w(d * d);
    for (double& x : w) x = uniform(bound);
    store.add(name, Tensor::matrix(d, d, std::move(w)));
  }
  std::vector<double> w_v(d * d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) w_v[i * d + j] = (i == j ? 1.0 : 0.0) + 0.1 * uniform(bound);
  store.add("tracker.w_v", Tensor::matrix(d, d, std::move(w_v)));
}

Var Tracker::encode(num::Tape& tape, const num::ParamStore& store, const History& history) const {
  if (history.empty()) throw std::invalid_argument("Tracker::encode: empty history");
  std::vector<std::size_t> items, fb;
  items.reserve(history.size());
  fb.reserve(history.size());
  for (const auto& h : history) {
    items.push_back(h.item);
    fb.push_back(h.positive ? 1 : 0);
  }
  Var table = tape.param(store, "tracker.item_table");
  const std::size_t d = table.value().cols();
  Var raw = num::concat_cols(num::gather_rows(table, items), num::gather_rows(tape.param(store, "tracker.feedback_table"), fb));
  Var e = num::matmul(raw, num::transpose(tape.param(store, "tracker.w_in")));
  Var q = num::matmul(e, num::transpose(tape.param(store, "tracker.w_q")));
  Var k = num::matmul(e, num::transpose(tape.param(store, "tracker.w_k")));
  Var v = num::matmul(e, num::transpose(tape.param(store, "tracker.w_v")));
  Var out = num::scaled_dot_attention(q, k, v, static_cast<double>(d));
  if (reduction_ == Reduction::last) return num::row(out, history.size() - 1);
  Var acc = num::row(out, 0);
  for (std::size_t i = 1; i < history.size(); ++i) acc = num::add(acc, num::row(out, i));
  return num::scale(acc, 1.0 / static_cast<double>(history.size()));
}

std::vector<double> Tracker::encode(const num::ParamStore& store, const History& history) const {
  num::Tape tape;
  return encode(tape, store, history).value().storage();
}

std::vector<double> build_low_state(std::span<const double> p, std::span<const double> g) {
  if (p.size() != g.size()) throw std::invalid_argument("build_low_state: preference/target dimension mismatch");
  std::vector<double> s(p.begin(), p.end());
  s.insert(s.end(), g.begin(), g.end());
  return s;
}

Var build_low_state(Var p, Var g) {
  if (p.size() != g.size()) throw std::invalid_argument("build_low_state: preference/target dimension mismatch");
  return num::concat(p, g);
}

}  // namespace hrl4pfg
