#include "hrl4pfg/num/nn.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hrl4pfg::num {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string layer_name(std::string_view name, std::size_t k, char what) {
  return std::string(name) + ".l" + std::to_string(k) + "." + what;
}

void check_layer(const Tensor& w, const Tensor& b, std::size_t in, std::string_view name, std::size_t k) {
  if (w.rank() != 2 || b.rank() != 1 || w.rows() != b.size() || w.cols() != in) {
    throw std::invalid_argument("mlp_forward: shape chain broken at " + layer_name(name, k, 'w') + " (weight " +
                                shape_string(w.shape()) + ", bias " + shape_string(b.shape()) + ", input width " +
                                std::to_string(in) + ")");
  }
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = splitmix(base);
  for (std::uint64_t p : parts) h = splitmix(h ^ splitmix(p + 0x632be59bd9b4e019ULL));
  return h;
}

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double standard_normal(Rng& rng) {
  // Box-Muller, one draw per call.
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void add_mlp(ParamStore& store, std::string_view name, std::span<const std::size_t> sizes, Rng& rng, double out_scale) {
  if (sizes.size() < 2) throw std::invalid_argument("add_mlp: need at least input and output sizes");
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    const std::size_t in = sizes[k], out = sizes[k + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    const double mult = (k + 2 == sizes.size()) ? out_scale : 1.0;
    std::vector<double> w(in * out);
    for (double& x : w) x = mult * bound * (2.0 * uniform01(rng) - 1.0);
    store.add(layer_name(name, k, 'w'), Tensor::matrix(out, in, std::move(w)));
    store.add(layer_name(name, k, 'b'), Tensor::vector(std::vector<double>(out, 0.0)));
  }
}

std::size_t mlp_depth(const ParamStore& store, std::string_view name) {
  std::size_t k = 0;
  while (store.contains(layer_name(name, k, 'w'))) ++k;
  return k;
}

Var mlp_forward(Tape& tape, const ParamStore& store, std::string_view name, Var x) {
  const std::size_t depth = mlp_depth(store, name);
  if (depth == 0) throw std::invalid_argument("mlp_forward: no layers named " + std::string(name));
  Var h = x;
  for (std::size_t k = 0; k < depth; ++k) {
    const std::size_t wi = store.index(layer_name(name, k, 'w'));
    const std::size_t bi = store.index(layer_name(name, k, 'b'));
    check_layer(store.value(wi), store.value(bi), h.size(), name, k);
    h = linear(tape.param(store, wi), tape.param(store, bi), h);
    if (k + 1 < depth) h = tanh(h);
  }
  return h;
}

std::vector<double> mlp_forward(const ParamStore& store, std::string_view name, std::span<const double> x) {
  const std::size_t depth = mlp_depth(store, name);
  if (depth == 0) throw std::invalid_argument("mlp_forward: no layers named " + std::string(name));
  require_finite(x, "mlp_forward");
  std::vector<double> h(x.begin(), x.end());
  for (std::size_t k = 0; k < depth; ++k) {
    const Tensor& w = store.value(layer_name(name, k, 'w'));
    const Tensor& b = store.value(layer_name(name, k, 'b'));
    check_layer(w, b, h.size(), name, k);
    const std::size_t out = w.rows(), in = w.cols();
    std::vector<double> next(out);
    for (std::size_t i = 0; i < out; ++i) {
      double s = b[i];
      for (std::size_t j = 0; j < in; ++j) s += w[i * in + j] * h[j];
      next[i] = (k + 1 < depth) ? std::tanh(s) : s;
    }
    h = std::move(next);
  }
  return h;
}

}  // namespace hrl4pfg::num
