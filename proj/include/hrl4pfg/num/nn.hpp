#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hrl4pfg/num/ops.hpp"
#include "hrl4pfg/num/param_store.hpp"

namespace hrl4pfg::num {

using Rng = std::mt19937_64;

/// Mixes a base seed with stream identifiers (splitmix64 finalizer per part).
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts);

double standard_normal(Rng& rng);
double uniform01(Rng& rng);

/// Registers `<name>.l<k>.w` (out x in) and `<name>.l<k>.b` for consecutive pairs in `sizes`.
/// Weights ~ U(-1/sqrt(in), 1/sqrt(in)); the last layer's weights are multiplied by `out_scale`.
void add_mlp(ParamStore& store, std::string_view name, std::span<const std::size_t> sizes, Rng& rng,
             double out_scale = 1.0);

/// Number of affine layers registered under `name`.
std::size_t mlp_depth(const ParamStore& store, std::string_view name);

/// Affine layers with tanh between them; the output layer is linear.
/// Throws std::invalid_argument when layer shapes do not chain or the input width is wrong.
Var mlp_forward(Tape& tape, const ParamStore& store, std::string_view name, Var x);
std::vector<double> mlp_forward(const ParamStore& store, std::string_view name, std::span<const double> x);

}  // namespace hrl4pfg::num
