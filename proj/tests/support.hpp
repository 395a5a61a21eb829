#pragma once

// Shared generators and oracles for the unit and acceptance tests.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "hrl4pfg/catalog.hpp"
#include "hrl4pfg/env.hpp"
#include "hrl4pfg/num/nn.hpp"
#include "hrl4pfg/num/param_store.hpp"
#include "hrl4pfg/num/tape.hpp"

namespace hrl4pfg::testkit {

inline double uniform(num::Rng& rng, double lo, double hi) { return lo + (hi - lo) * num::uniform01(rng); }

inline std::size_t index_below(num::Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(num::uniform01(rng) * static_cast<double>(n)) % n;
}

inline std::vector<double> random_vector(num::Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = uniform(rng, lo, hi);
  return v;
}

inline num::Tensor random_matrix(num::Rng& rng, std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
  return num::Tensor::matrix(r, c, random_vector(rng, r * c, lo, hi));
}

inline std::vector<double> unit(std::vector<double> v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  for (double& x : v) x /= n;
  return v;
}

/// Catalog with random unit embeddings and random distinct-ish popularities.
inline ItemCatalog random_catalog(num::Rng& rng, std::size_t n, std::size_t d) {
  std::vector<double> emb;
  for (std::size_t i = 0; i < n; ++i) {
    auto v = unit(random_vector(rng, d));
    emb.insert(emb.end(), v.begin(), v.end());
  }
  std::vector<double> pop(n);
  for (double& p : pop) p = uniform(rng, 0.001, 1.0);
  return ItemCatalog(num::Tensor::matrix(n, d, std::move(emb)), std::move(pop));
}

inline History random_history(num::Rng& rng, std::size_t n, std::size_t num_items) {
  History h;
  for (std::size_t i = 0; i < n; ++i) h.push_back({index_below(rng, num_items), num::uniform01(rng) < 0.5});
  return h;
}

/// Naive softmax(q K^T / sqrt(scale)) V with explicit loops.
inline num::Tensor naive_attention(const num::Tensor& q, const num::Tensor& k, const num::Tensor& v, double scale) {
  const std::size_t n = q.rows(), m = k.rows(), d = q.cols(), dv = v.cols();
  std::vector<double> out(n * dv, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> w(m);
    double mx = -1e300;
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += q.at(i, c) * k.at(j, c);
      w[j] = s / std::sqrt(scale);
      mx = std::max(mx, w[j]);
    }
    double z = 0.0;
    for (double& x : w) z += (x = std::exp(x - mx));
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t c = 0; c < dv; ++c) out[i * dv + c] += w[j] / z * v.at(j, c);
  }
  return num::Tensor::matrix(n, dv, std::move(out));
}

/// Central finite differences against one backward pass over every entry of `stores`.
/// Returns the norm-wise relative error ||analytic - numeric|| / max(||analytic||, ||numeric||, 1e-12).
inline double gradient_check(const std::vector<num::ParamStore*>& stores,
                             const std::function<num::Var(num::Tape&)>& loss, double h = 1e-5) {
  std::vector<double> analytic, numeric;
  {
    num::Tape tape;
    const auto grads = tape.backward(loss(tape));
    for (auto* s : stores) {
      for (std::size_t i = 0; i < s->size(); ++i) {
        const num::Tensor* g = grads.find(s, i);
        for (std::size_t k = 0; k < s->value(i).size(); ++k) analytic.push_back(g ? (*g)[k] : 0.0);
      }
    }
  }
  auto eval = [&] {
    num::Tape tape;
    return loss(tape).value().item();
  };
  for (auto* s : stores) {
    for (std::size_t i = 0; i < s->size(); ++i) {
      const num::Tensor base = s->value(i);
      for (std::size_t k = 0; k < base.size(); ++k) {
        num::Tensor t = base;
        t.data()[k] = base[k] + h;
        s->set(i, t);
        const double up = eval();
        t.data()[k] = base[k] - h;
        s->set(i, t);
        const double down = eval();
        s->set(i, base);
        numeric.push_back((up - down) / (2.0 * h));
      }
    }
  }
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    diff += (analytic[k] - numeric[k]) * (analytic[k] - numeric[k]);
    na += analytic[k] * analytic[k];
    nn += numeric[k] * numeric[k];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), 1e-12});
}

}  // namespace hrl4pfg::testkit
