#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hrl4pfg/num/tape.hpp"
#include "hrl4pfg/num/tensor.hpp"

namespace hrl4pfg::num {

// ---------------------------------------------------------------------------
// Plain numerics (no tape).
// ---------------------------------------------------------------------------

/// Max-subtracted softmax. Throws on empty or non-finite input.
std::vector<double> softmax(std::span<const double> logits);

/// Softmax restricted to positions with mask[i] != 0; other positions get exactly 0.
std::vector<double> masked_softmax(std::span<const double> logits, std::span<const unsigned char> mask);

/// softmax(Q K^T / sqrt(scale)) V for n x d inputs.
Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v, double scale);

/// Diagonal Gaussian log density. Throws on nonpositive variance or length mismatch.
double gaussian_logprob(std::span<const double> x, std::span<const double> mu, std::span<const double> sigma2);

double l2_distance(std::span<const double> a, std::span<const double> b);
double dot(std::span<const double> a, std::span<const double> b);

// ---------------------------------------------------------------------------
// Differentiable ops recorded on a tape.
// ---------------------------------------------------------------------------

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var tanh(Var a);
Var exp(Var a);
Var square(Var a);
Var sum(Var a);
Var mean(Var a);
Var dot(Var a, Var b);

/// (m x k) * (k x n)
Var matmul(Var a, Var b);
/// (m x k) * (k) -> (m)
Var matvec(Var w, Var x);
Var transpose(Var a);
/// W x + b
Var linear(Var w, Var b, Var x);

Var row(Var a, std::size_t i);
/// Rows of `table` at `indices`, stacked into a (|indices| x cols) matrix.
Var gather_rows(Var table, std::span<const std::size_t> indices);
Var concat(Var a, Var b);
/// Column-wise concatenation of two matrices with equal row counts.
Var concat_cols(Var a, Var b);
Var slice(Var v, std::size_t offset, std::size_t length);

Var softmax(Var logits);
Var softmax_rows(Var a);
Var scaled_dot_attention(Var q, Var k, Var v, double scale);

/// Scalar log N(x | mu, diag(sigma2)); gradients flow to all three inputs.
Var gaussian_logprob(Var x, Var mu, Var sigma2);

/// log of the masked-softmax probability at `index`. Throws if the mask excludes `index`.
Var masked_log_softmax_at(Var logits, std::span<const unsigned char> mask, std::size_t index);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }

}  // namespace hrl4pfg::num
