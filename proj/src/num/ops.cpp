#include "hrl4pfg/num/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hrl4pfg::num {

namespace {

Tape& tape_of(Var a, Var b) {
  if (!a.tape || a.tape != b.tape) throw std::logic_error("ops: operands live on different tapes");
  return *a.tape;
}

void require_same_shape(Var a, Var b, const char* op) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                                shape_string(b.shape()));
  }
}

void require_rank(Var a, std::size_t r, const char* op) {
  if (a.value().rank() != r) {
    throw std::invalid_argument(std::string(op) + ": expected rank " + std::to_string(r) + ", got " +
                                shape_string(a.shape()));
  }
}

void softmax_inplace(std::span<double> x) {
  const double mx = *std::max_element(x.begin(), x.end());
  double z = 0.0;
  for (double& v : x) {
    v = std::exp(v - mx);
    z += v;
  }
  for (double& v : x) v /= z;
}

}  // namespace

// ---------------------------------------------------------------------------
// Plain numerics
// ---------------------------------------------------------------------------

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("softmax: empty input");
  require_finite(logits, "softmax");
  std::vector<double> out(logits.begin(), logits.end());
  softmax_inplace(out);
  return out;
}

std::vector<double> masked_softmax(std::span<const double> logits, std::span<const unsigned char> mask) {
  if (logits.size() != mask.size()) throw std::invalid_argument("masked_softmax: mask length mismatch");
  require_finite(logits, "masked_softmax");
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (mask[i]) mx = std::max(mx, logits[i]);
  }
  if (!std::isfinite(mx)) throw std::invalid_argument("masked_softmax: mask selects no position");
  std::vector<double> out(logits.size(), 0.0);
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (mask[i]) {
      out[i] = std::exp(logits[i] - mx);
      z += out[i];
    }
  }
  for (double& v : out) v /= z;
  return out;
}

Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v, double scale) {
  if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2) throw std::invalid_argument("scaled_dot_attention: rank-2 inputs required");
  if (q.cols() != k.cols() || k.rows() != v.rows()) {
    throw std::invalid_argument("scaled_dot_attention: dimension mismatch " + shape_string(q.shape()) + ", " +
                                shape_string(k.shape()) + ", " + shape_string(v.shape()));
  }
  if (!(scale > 0.0)) throw std::invalid_argument("scaled_dot_attention: scale must be > 0");
  const std::size_t n = q.rows(), m = k.rows(), d = q.cols(), dv = v.cols();
  const double inv = 1.0 / std::sqrt(scale);
  Tensor out(Shape{n, dv});
  std::vector<double> w(m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += q.at(i, c) * k.at(j, c);
      w[j] = s * inv;
    }
    softmax_inplace(w);
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t c = 0; c < dv; ++c) out.at(i, c) += w[j] * v.at(j, c);
    }
  }
  return out;
}

double gaussian_logprob(std::span<const double> x, std::span<const double> mu, std::span<const double> sigma2) {
  if (x.size() != mu.size() || x.size() != sigma2.size()) throw std::invalid_argument("gaussian_logprob: length mismatch");
  double lp = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(sigma2[k] > 0.0)) throw std::invalid_argument("gaussian_logprob: variance must be > 0");
    const double r = x[k] - mu[k];
    lp += -0.5 * std::log(2.0 * std::numbers::pi * sigma2[k]) - r * r / (2.0 * sigma2[k]);
  }
  return lp;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("l2_distance: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a, b, "add");
  std::vector<double> out(a.value().storage());
  auto bv = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return t.record(Tensor::unchecked(a.shape(), std::move(out)), {a.id, b.id}, [a = a.id, b = b.id](Tape& tp, std::size_t self) {
    const auto& g = tp.grad(self).storage();
    for (std::size_t p : {a, b}) {
      if (!tp.wants_grad(p)) continue;
      auto dst = tp.grad(p).data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i];
    }
  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.value().storage());
  auto bv = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return t.record(Tensor::unchecked(a.shape(), std::move(out)), {a.id, b.id}, [a = a.id, b = b.id](Tape& tp, std::size_t self) {
    const auto& g = tp.grad(self).storage();
    if (tp.wants_grad(a)) {
      auto dst = tp.grad(a).data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i];
    }
    if (tp.wants_grad(b)) {
      auto dst = tp.grad(b).data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.value().storage());
  auto bv = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return t.record(Tensor::unchecked(a.shape(), std::move(out)), {a.id, b.id}, [a = a.id, b = b.id](Tape& tp, std::size_t self) {
    const auto& g = tp.grad(self).storage();
    if (tp.wants_grad(a)) {
      const auto bv = tp.value(b).data();
      auto dst = tp.grad(a).data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i] * bv[i];
    }
    if (tp.wants_grad(b)) {
      const auto av = tp.value(a).data();
      auto dst = tp.grad(b).data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i] * av[i];
    }
  });
}

Var scale(Var a, double s) {
  std::vector<double> out(a.value().storage());
  for (double& v : out) v *= s;
  return a.tape->record(Tensor::unchecked(a.shape(), std::move(out)), {a.id}, [a = a.id, s](Tape& tp, std::size_t self) {
    const auto& g = tp.grad(self).storage();
    auto dst = tp.grad(a).data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += s * g[i];
  });
}

Var add_scalar(Var a, double s) {
  std::vector<double> out(a.value().storage());
  for (double& v : out) v += s;
  return a.tape->record(Tensor::unchecked(a.shape(), std::move(out)), {a.id}, [a = a.id](Tape& tp, std::size_t self) {
    const auto& g = tp.grad(self).storage();
    auto dst = tp.grad(a).data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i];
  });
}

Var tanh(Var a) {
  std::vector<double> out(a.value().storage());
  for (double& v : out) v = std::tanh(v);
  return a.tape->record(Tensor::unchecked(a.shape(), std::move(out)), {a.id}, [a = a.id](Tape& tp, std::size_t self) {
    const auto& g = tp.grad(self).storage();
    const auto y = tp.value(self).data();
    auto dst = tp.grad(a).data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var exp(Var a) {
  std::vector<double> out(a.value().storage());
  for (double& v : out) v = std::exp(v);
  return a.tape->record(Tensor::unchecked(a.shape(), std::move(out)), {a.id}, [a = a.id](Tape& tp, std::size_t self) {
    const auto& g = tp.grad(self).storage();
    const auto y = tp.value(self).data();
    auto dst = tp.grad(a).data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i] * y[i];
  });
}

Var square(Var a) {
  std::vector<double> out(a.value().storage());
  for (double& v : out) v *= v;
  return a.tape->record(Tensor::unchecked(a.shape(), std::move(out)), {a.id}, [a = a.id](Tape& tp, std::size_t self) {
    const auto& g = tp.grad(self).storage();
    const auto x = tp.value(a).data();
    auto dst = tp.grad(a).data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += 2.0 * g[i] * x[i];
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return a.tape->record(Tensor::unchecked(Shape{}, {s}), {a.id}, [a = a.id](Tape& tp, std::size_t self) {
    const double g = tp.grad(self)[0];
    for (double& d : tp.grad(a).data()) d += g;
  });
}

Var mean(Var a) {
  if (a.size() == 0) throw std::invalid_argument("mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Var dot(Var a, Var b) { return sum(mul(a, b)); }

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.cols() != B.rows()) {
    throw std::invalid_argument("matmul: inner dimension mismatch " + shape_string(A.shape()) + " x " + shape_string(B.shape()));
  }
  const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * B[p * n + j];
    }
  }
  return t.record(Tensor::unchecked(Shape{m, n}, std::move(out)), {a.id, b.id},
                  [a = a.id, b = b.id, m, k, n](Tape& tp, std::size_t self) {
                    const auto& G = tp.grad(self).storage();
                    if (tp.wants_grad(a)) {
                      const auto Bv = tp.value(b).data();
                      auto dA = tp.grad(a).data();
                      for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t p = 0; p < k; ++p) {
                          double s = 0.0;
                          for (std::size_t j = 0; j < n; ++j) s += G[i * n + j] * Bv[p * n + j];
                          dA[i * k + p] += s;
                        }
                    }
                    if (tp.wants_grad(b)) {
                      const auto Av = tp.value(a).data();
                      auto dB = tp.grad(b).data();
                      for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t p = 0; p < k; ++p) {
                          const double aip = Av[i * k + p];
                          for (std::size_t j = 0; j < n; ++j) dB[p * n + j] += aip * G[i * n + j];
                        }
                    }
                  });
}

Var matvec(Var w, Var x) {
  Tape& t = tape_of(w, x);
  require_rank(w, 2, "matvec");
  require_rank(x, 1, "matvec");
  const Tensor& W = w.value();
  const Tensor& X = x.value();
  const std::size_t m = W.rows(), k = W.cols();
  if (X.size() != k) {
    throw std::invalid_argument("matvec: shape mismatch " + shape_string(W.shape()) + " x " + shape_string(X.shape()));
  }
  std::vector<double> out(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t p = 0; p < k; ++p) s += W[i * k + p] * X[p];
    out[i] = s;
  }
  return t.record(Tensor::unchecked(Shape{m}, std::move(out)), {w.id, x.id}, [w = w.id, x = x.id, m, k](Tape& tp, std::size_t self) {
    const auto& g = tp.grad(self).storage();
    if (tp.wants_grad(w)) {
      const auto Xv = tp.value(x).data();
      auto dW = tp.grad(w).data();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) dW[i * k + p] += g[i] * Xv[p];
    }
    if (tp.wants_grad(x)) {
      const auto Wv = tp.value(w).data();
      auto dX = tp.grad(x).data();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) dX[p] += g[i] * Wv[i * k + p];
    }
  });
}

Var transpose(Var a) {
  require_rank(a, 2, "transpose");
  const Tensor& A = a.value();
  const std::size_t m = A.rows(), n = A.cols();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = A[i * n + j];
  return a.tape->record(Tensor::unchecked(Shape{n, m}, std::move(out)), {a.id}, [a = a.id, m, n](Tape& tp, std::size_t self) {
    const auto& g = tp.grad(self).storage();
    auto dA = tp.grad(a).data();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) dA[i * n + j] += g[j * m + i];
  });
}

Var linear(Var w, Var b, Var x) { return add(matvec(w, x), b); }

// ---------------------------------------------------------------------------
// Indexing and reshaping
// ---------------------------------------------------------------------------

Var row(Var a, std::size_t i) {
  require_rank(a, 2, "row");
  const Tensor& A = a.value();
  if (i >= A.rows()) throw std::out_of_range("row: index out of range");
  const std::size_t n = A.cols();
  std::vector<double> out(A.storage().begin() + static_cast<std::ptrdiff_t>(i * n),
                          A.storage().begin() + static_cast<std::ptrdiff_t>((i + 1) * n));
  return a.tape->record(Tensor::unchecked(Shape{n}, std::move(out)), {a.id}, [a = a.id, i, n](Tape& tp, std::size_t self) {
    const auto& g = tp.grad(self).storage();
    auto dA = tp.grad(a).data();
    for (std::size_t c = 0; c < n; ++c) dA[i * n + c] += g[c];
  });
}

Var gather_rows(Var table, std::span<const std::size_t> indices) {
  require_rank(table, 2, "gather_rows");
  const Tensor& T = table.value();
  const std::size_t n = T.cols();
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  std::vector<double> out;
  out.reserve(idx.size() * n);
  for (std::size_t r : idx) {
    if (r >= T.rows()) throw std::out_of_range("gather_rows: index " + std::to_string(r) + " out of range");
    for (std::size_t c = 0; c < n; ++c) out.push_back(T[r * n + c]);
  }
  const std::size_t rows = idx.size();
  return table.tape->record(Tensor::unchecked(Shape{rows, n}, std::move(out)), {table.id},
                            [t = table.id, idx = std::move(idx), n](Tape& tp, std::size_t self) {
                              const auto& g = tp.grad(self).storage();
                              auto dT = tp.grad(t).data();
                              for (std::size_t k = 0; k < idx.size(); ++k)
                                for (std::size_t c = 0; c < n; ++c) dT[idx[k] * n + c] += g[k * n + c];
                            });
}

Var concat(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_rank(a, 1, "concat");
  require_rank(b, 1, "concat");
  const std::size_t na = a.size(), nb = b.size();
  std::vector<double> out(a.value().storage());
  out.insert(out.end(), b.value().storage().begin(), b.value().storage().end());
  return t.record(Tensor::unchecked(Shape{na + nb}, std::move(out)), {a.id, b.id}, [a = a.id, b = b.id, na, nb](Tape& tp, std::size_t self) {
    const auto& g = tp.grad(self).storage();
    if (tp.wants_grad(a)) {
      auto d = tp.grad(a).data();
      for (std::size_t i = 0; i < na; ++i) d[i] += g[i];
    }
    if (tp.wants_grad(b)) {
      auto d = tp.grad(b).data();
      for (std::size_t i = 0; i < nb; ++i) d[i] += g[na + i];
    }
  });
}

Var concat_cols(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_rank(a, 2, "concat_cols");
  require_rank(b, 2, "concat_cols");
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.rows() != B.rows()) throw std::invalid_argument("concat_cols: row count mismatch");
  const std::size_t m = A.rows(), na = A.cols(), nb = B.cols(), n = na + nb;
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t c = 0; c < na; ++c) out[i * n + c] = A[i * na + c];
    for (std::size_t c = 0; c < nb; ++c) out[i * n + na + c] = B[i * nb + c];
  }
  return t.record(Tensor::unchecked(Shape{m, n}, std::move(out)), {a.id, b.id},
                  [a = a.id, b = b.id, m, na, nb, n](Tape& tp, std::size_t self) {
                    const auto& g = tp.grad(self).storage();
                    if (tp.wants_grad(a)) {
                      auto d = tp.grad(a).data();
                      for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t c = 0; c < na; ++c) d[i * na + c] += g[i * n + c];
                    }
                    if (tp.wants_grad(b)) {
                      auto d = tp.grad(b).data();
                      for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t c = 0; c < nb; ++c) d[i * nb + c] += g[i * n + na + c];
                    }
                  });
}

Var slice(Var v, std::size_t offset, std::size_t length) {
  require_rank(v, 1, "slice");
  if (offset + length > v.size()) throw std::out_of_range("slice: range exceeds vector length");
  const auto& src = v.value().storage();
  std::vector<double> out(src.begin() + static_cast<std::ptrdiff_t>(offset),
                          src.begin() + static_cast<std::ptrdiff_t>(offset + length));
  return v.tape->record(Tensor::unchecked(Shape{length}, std::move(out)), {v.id}, [v = v.id, offset, length](Tape& tp, std::size_t self) {
    const auto& g = tp.grad(self).storage();
    auto d = tp.grad(v).data();
    for (std::size_t i = 0; i < length; ++i) d[offset + i] += g[i];
  });
}

// ---------------------------------------------------------------------------
// Softmax family
// ---------------------------------------------------------------------------

namespace {

// dx_i += y_i (g_i - sum_j g_j y_j) over one row.
void softmax_row_backward(std::span<const double> y, std::span<const double> g, std::span<double> dx) {
  double gy = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) gy += g[j] * y[j];
  for (std::size_t j = 0; j < y.size(); ++j) dx[j] += y[j] * (g[j] - gy);
}

}  // namespace

Var softmax(Var logits) {
  require_rank(logits, 1, "softmax");
  std::vector<double> y = softmax(logits.value().data());
  return logits.tape->record(Tensor::unchecked(logits.shape(), std::move(y)), {logits.id}, [x = logits.id](Tape& tp, std::size_t self) {
    softmax_row_backward(tp.value(self).data(), tp.grad(self).data(), tp.grad(x).data());
  });
}

Var softmax_rows(Var a) {
  require_rank(a, 2, "softmax_rows");
  const std::size_t m = a.value().rows(), n = a.value().cols();
  if (n == 0) throw std::invalid_argument("softmax_rows: empty rows");
  std::vector<double> y(a.value().storage());
  for (std::size_t i = 0; i < m; ++i) softmax_inplace(std::span<double>(y).subspan(i * n, n));
  return a.tape->record(Tensor::unchecked(a.shape(), std::move(y)), {a.id}, [x = a.id, m, n](Tape& tp, std::size_t self) {
    auto yv = tp.value(self).data();
    auto g = tp.grad(self).data();
    auto dx = tp.grad(x).data();
    for (std::size_t i = 0; i < m; ++i) {
      softmax_row_backward(yv.subspan(i * n, n), g.subspan(i * n, n), dx.subspan(i * n, n));
    }
  });
}

Var scaled_dot_attention(Var q, Var k, Var v, double scale_factor) {
  require_rank(q, 2, "scaled_dot_attention");
  require_rank(k, 2, "scaled_dot_attention");
  require_rank(v, 2, "scaled_dot_attention");
  if (q.value().cols() != k.value().cols() || k.value().rows() != v.value().rows()) {
    throw std::invalid_argument("scaled_dot_attention: dimension mismatch " + shape_string(q.shape()) + ", " +
                                shape_string(k.shape()) + ", " + shape_string(v.shape()));
  }
  if (!(scale_factor > 0.0)) throw std::invalid_argument("scaled_dot_attention: scale must be > 0");
  Var scores = scale(matmul(q, transpose(k)), 1.0 / std::sqrt(scale_factor));
  return matmul(softmax_rows(scores), v);
}

Var gaussian_logprob(Var x, Var mu, Var sigma2) {
  Tape& t = tape_of(x, mu);
  tape_of(mu, sigma2);
  require_same_shape(x, mu, "gaussian_logprob");
  require_same_shape(x, sigma2, "gaussian_logprob");
  const double lp = gaussian_logprob(x.value().data(), mu.value().data(), sigma2.value().data());
  return t.record(Tensor::unchecked(Shape{}, {lp}), {x.id, mu.id, sigma2.id},
                  [x = x.id, mu = mu.id, s2 = sigma2.id](Tape& tp, std::size_t self) {
                    const double g = tp.grad(self)[0];
                    const auto xv = tp.value(x).data();
                    const auto mv = tp.value(mu).data();
                    const auto sv = tp.value(s2).data();
                    const std::size_t d = xv.size();
                    // d/dmu = (x-mu)/s2 ; d/dx = -(x-mu)/s2 ; d/ds2 = -1/(2 s2) + (x-mu)^2/(2 s2^2)
                    if (tp.wants_grad(mu)) {
                      auto dm = tp.grad(mu).data();
                      for (std::size_t k = 0; k < d; ++k) dm[k] += g * (xv[k] - mv[k]) / sv[k];
                    }
                    if (tp.wants_grad(x)) {
                      auto dx = tp.grad(x).data();
                      for (std::size_t k = 0; k < d; ++k) dx[k] -= g * (xv[k] - mv[k]) / sv[k];
                    }
                    if (tp.wants_grad(s2)) {
                      auto ds = tp.grad(s2).data();
                      for (std::size_t k = 0; k < d; ++k) {
                        const double r = xv[k] - mv[k];
                        ds[k] += g * (-0.5 / sv[k] + r * r / (2.0 * sv[k] * sv[k]));
                      }
                    }
                  });
}

Var masked_log_softmax_at(Var logits, std::span<const unsigned char> mask, std::size_t index) {
  require_rank(logits, 1, "masked_log_softmax_at");
  const std::size_t n = logits.size();
  if (mask.size() != n) throw std::invalid_argument("masked_log_softmax_at: mask length mismatch");
  if (index >= n || !mask[index]) throw std::invalid_argument("masked_log_softmax_at: index is masked out");
  std::vector<unsigned char> m(mask.begin(), mask.end());
  const auto x = logits.value().data();
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    if (m[i]) mx = std::max(mx, x[i]);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (m[i]) z += std::exp(x[i] - mx);
  const double lse = mx + std::log(z);
  const double out = x[index] - lse;
  return logits.tape->record(Tensor::unchecked(Shape{}, {out}), {logits.id},
                             [l = logits.id, m = std::move(m), index, lse](Tape& tp, std::size_t self) {
                               const double g = tp.grad(self)[0];
                               const auto xv = tp.value(l).data();
                               auto dx = tp.grad(l).data();
                               for (std::size_t i = 0; i < xv.size(); ++i) {
                                 if (!m[i]) continue;
                                 const double p = std::exp(xv[i] - lse);
                                 dx[i] += g * ((i == index ? 1.0 : 0.0) - p);
                               }
                             });
}

}  // namespace hrl4pfg::num
