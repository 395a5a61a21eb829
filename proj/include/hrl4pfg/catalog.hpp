#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "hrl4pfg/num/tensor.hpp"

namespace hrl4pfg {

/// Size of the popular (head) set: ceil(0.2 n), the top 20% of items by popularity.
constexpr std::size_t popular_count(std::size_t n) { return (n + 4) / 5; }

/// N_j / |U|, clamped below at 1 / (2|U|) so that -log(pop) stays finite.
double popularity(std::uint64_t positive_user_count, std::uint64_t total_users);

/// -ln(pop) for pop in (0, 1].
double fairness_reward(double pop);

struct CenterRadius {
  std::vector<double> center;
  double radius = 0.0;
};

/// Row mean of `embeddings` and the largest L2 distance of any row from it.
CenterRadius center_and_radius(const num::Tensor& embeddings);

/// Tail flags (1 = long-tail) for a popularity vector: the ceil(0.2 n) most popular items are head,
/// ties broken by ascending item id.
std::vector<unsigned char> tail_partition(std::span<const double> pop);

/// Share of exposure landing on tail items. Throws when the total is zero.
double exposure_ratio(std::span<const std::uint64_t> exposure, std::span<const unsigned char> tail);

/// Item universe: fixed embeddings, frozen popularity, head/tail split and exposure counters.
class ItemCatalog {
 public:
  ItemCatalog() = default;
  /// `embeddings` is |I| x d. Throws on empty catalog, size mismatch or pop outside (0, 1].
  ItemCatalog(num::Tensor embeddings, std::vector<double> pop);

  std::size_t size() const { return pop_.size(); }
  std::size_t dim() const { return dim_; }
  bool empty() const { return pop_.empty(); }

  const num::Tensor& embeddings() const { return embeddings_; }
  std::span<const double> embedding(std::size_t item) const;
  void set_embeddings(num::Tensor embeddings);

  double pop(std::size_t item) const { return pop_.at(item); }
  const std::vector<double>& pops() const { return pop_; }
  bool is_tail(std::size_t item) const { return tail_.at(item) != 0; }
  bool is_popular(std::size_t item) const { return tail_.at(item) == 0; }
  const std::vector<unsigned char>& tail_flags() const { return tail_; }

  std::span<const double> center() const { return geometry_.center; }
  double radius() const { return geometry_.radius; }

  /// ||g - center|| <= radius (inclusive).
  bool target_is_valid(std::span<const double> g) const;

  const std::vector<std::uint64_t>& exposure() const { return exposure_; }
  void add_exposure(std::size_t item, std::uint64_t count = 1);
  void merge_exposure(std::span<const std::uint64_t> counts);
  void reset_exposure();
  double exposure_ratio() const;

 private:
  std::size_t dim_ = 0;
  num::Tensor embeddings_;
  std::vector<double> pop_;
  std::vector<unsigned char> tail_;
  CenterRadius geometry_;
  std::vector<std::uint64_t> exposure_;
};

/// CSV `item_id,pop,tail,e_0,...,e_{d-1}`; numbers written with 17 significant digits.
void save_catalog_csv(const std::filesystem::path& path, const ItemCatalog& catalog);
ItemCatalog load_catalog_csv(const std::filesystem::path& path);

}  // namespace hrl4pfg
