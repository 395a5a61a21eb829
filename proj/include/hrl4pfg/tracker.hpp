#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hrl4pfg/catalog.hpp"
#include "hrl4pfg/env.hpp"
#include "hrl4pfg/num/nn.hpp"

namespace hrl4pfg {

/// How the N attention output rows collapse into one state vector.
enum class Reduction { last, mean };

Reduction parse_reduction(const std::string& s);
const char* to_string(Reduction r);

/// Attention state tracker over the last N interactions.
///
/// Each interaction (item, positive?) is embedded as W_in [item_table[item]; feedback_table[positive]],
/// projected to Q, K, V (square d x d maps, no bias) and passed through single-head scaled dot-product
/// attention with scale d. The state is the output row of the latest position (or the row mean).
///
/// Parameters live in a caller-owned ParamStore under `tracker.*`. The item table starts as a copy of the
/// catalog embeddings and is trained with the rest; the catalog itself is never modified.
class Tracker {
 public:
  Tracker() = default;
  explicit Tracker(Reduction reduction) : reduction_(reduction) {}

  static void add_params(num::ParamStore& store, const ItemCatalog& catalog, num::Rng& rng);

  num::Var encode(num::Tape& tape, const num::ParamStore& store, const History& history) const;
  std::vector<double> encode(const num::ParamStore& store, const History& history) const;

  Reduction reduction() const { return reduction_; }

 private:
  Reduction reduction_ = Reduction::last;
};

/// s_l = p (+) g. Throws when the two halves differ in length.
std::vector<double> build_low_state(std::span<const double> p, std::span<const double> g);
num::Var build_low_state(num::Var p, num::Var g);

}  // namespace hrl4pfg
