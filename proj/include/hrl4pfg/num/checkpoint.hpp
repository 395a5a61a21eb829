#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "hrl4pfg/num/param_store.hpp"
#include "hrl4pfg/num/tensor.hpp"

namespace hrl4pfg::num {

/// Leading bytes of every checkpoint file.
inline constexpr std::string_view kCheckpointMagic = "HRL4PFG1";

struct NamedTensor {
  std::string name;
  Tensor value;
  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

using Checkpoint = std::vector<NamedTensor>;

/// Layout after the magic, repeated per tensor (all integers little-endian u64):
///   name length, name bytes, rank, dims[rank], then prod(dims) IEEE-754 binary64 values (LE).
std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Appends every parameter of `store` (full names) to `out`.
void append_params(Checkpoint& out, const ParamStore& store);

/// Loads every parameter of `store` from `ckpt` by full name.
/// Throws std::runtime_error naming the tensor when missing or shape-incompatible.
void load_params(ParamStore& store, const Checkpoint& ckpt);

}  // namespace hrl4pfg::num
