#include "hrl4pfg/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>

#include "hrl4pfg/csv.hpp"
#include "hrl4pfg/num/ops.hpp"

namespace hrl4pfg {

double popularity(std::uint64_t positive_user_count, std::uint64_t total_users) {
  if (total_users == 0) throw std::invalid_argument("popularity: total_users must be positive");
  if (positive_user_count > total_users) throw std::invalid_argument("popularity: positive count exceeds total users");
  const double u = static_cast<double>(total_users);
  return std::max(static_cast<double>(positive_user_count) / u, 1.0 / (2.0 * u));
}

double fairness_reward(double pop) {
  if (!(pop > 0.0 && pop <= 1.0)) throw std::invalid_argument("fairness_reward: pop must lie in (0, 1]");
  return -std::log(pop);
}

CenterRadius center_and_radius(const num::Tensor& embeddings) {
  if (embeddings.rank() != 2 || embeddings.rows() == 0) throw std::invalid_argument("center_and_radius: empty catalog");
  const std::size_t n = embeddings.rows(), d = embeddings.cols();
  CenterRadius out;
  out.center.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k) out.center[k] += embeddings.at(i, k);
  for (double& c : out.center) c /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.radius = std::max(out.radius, num::l2_distance(embeddings.data().subspan(i * d, d), out.center));
  }
  return out;
}

std::vector<unsigned char> tail_partition(std::span<const double> pop) {
  const std::size_t n = pop.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pop[a] > pop[b]; });
  const std::size_t head = popular_count(n);
  std::vector<unsigned char> tail(n, 1);
  for (std::size_t r = 0; r < head && r < n; ++r) tail[order[r]] = 0;
  return tail;
}

double exposure_ratio(std::span<const std::uint64_t> exposure, std::span<const unsigned char> tail) {
  if (exposure.size() != tail.size()) throw std::invalid_argument("exposure_ratio: length mismatch");
  std::uint64_t total = 0, on_tail = 0;
  for (std::size_t i = 0; i < exposure.size(); ++i) {
    total += exposure[i];
    if (tail[i]) on_tail += exposure[i];
  }
  if (total == 0) throw std::invalid_argument("exposure_ratio: total exposure is zero");
  return static_cast<double>(on_tail) / static_cast<double>(total);
}

ItemCatalog::ItemCatalog(num::Tensor embeddings, std::vector<double> pop) : pop_(std::move(pop)) {
  if (pop_.empty()) throw std::invalid_argument("ItemCatalog: empty catalog");
  for (std::size_t i = 0; i < pop_.size(); ++i) {
    if (!(pop_[i] > 0.0 && pop_[i] <= 1.0)) {
      throw std::invalid_argument("ItemCatalog: pop of item " + std::to_string(i) + " outside (0, 1]");
    }
  }
  tail_ = tail_partition(pop_);
  exposure_.assign(pop_.size(), 0);
  set_embeddings(std::move(embeddings));
}

std::span<const double> ItemCatalog::embedding(std::size_t item) const {
  if (item >= size()) throw std::out_of_range("ItemCatalog: unknown item " + std::to_string(item));
  return embeddings_.data().subspan(item * dim_, dim_);
}

void ItemCatalog::set_embeddings(num::Tensor embeddings) {
  if (embeddings.rank() != 2 || embeddings.rows() != pop_.size()) {
    throw std::invalid_argument("ItemCatalog: embedding matrix " + num::shape_string(embeddings.shape()) +
                                " does not match " + std::to_string(pop_.size()) + " items");
  }
  dim_ = embeddings.cols();
  embeddings_ = std::move(embeddings);
  geometry_ = center_and_radius(embeddings_);
}

bool ItemCatalog::target_is_valid(std::span<const double> g) const {
  if (g.size() != dim_) throw std::invalid_argument("target_is_valid: target dimension mismatch");
  return num::l2_distance(g, geometry_.center) <= geometry_.radius;
}

void ItemCatalog::add_exposure(std::size_t item, std::uint64_t count) {
  if (item >= size()) throw std::out_of_range("ItemCatalog: unknown item " + std::to_string(item));
  exposure_[item] += count;
}

void ItemCatalog::merge_exposure(std::span<const std::uint64_t> counts) {
  if (counts.size() != size()) throw std::invalid_argument("merge_exposure: length mismatch");
  for (std::size_t i = 0; i < counts.size(); ++i) exposure_[i] += counts[i];
}

void ItemCatalog::reset_exposure() { std::fill(exposure_.begin(), exposure_.end(), 0); }

double ItemCatalog::exposure_ratio() const { return hrl4pfg::exposure_ratio(exposure_, tail_); }

void save_catalog_csv(const std::filesystem::path& path, const ItemCatalog& catalog) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("catalog: cannot write " + path.string());
  f << "item_id,pop,tail";
  for (std::size_t k = 0; k < catalog.dim(); ++k) f << ",e_" << k;
  f << "\r\n";
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    f << i << ',' << csv::format_double(catalog.pop(i)) << ',' << (catalog.is_tail(i) ? 1 : 0);
    for (double x : catalog.embedding(i)) f << ',' << csv::format_double(x);
    f << "\r\n";
  }
  if (!f) throw std::runtime_error("catalog: write failed for " + path.string());
}

ItemCatalog load_catalog_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("catalog: cannot open " + path.string());
  std::string line;
  if (!csv::next_line(f, line)) throw std::runtime_error("catalog: empty file " + path.string());
  const auto header = csv::split_record(line);
  if (header.size() < 4 || header[0] != "item_id" || header[1] != "pop" || header[2] != "tail") {
    throw std::runtime_error("catalog: unexpected header in " + path.string());
  }
  const std::size_t d = header.size() - 3;
  for (std::size_t k = 0; k < d; ++k) {
    if (header[3 + k] != "e_" + std::to_string(k)) throw std::runtime_error("catalog: bad embedding column " + header[3 + k]);
  }
  std::vector<double> pop, emb;
  std::vector<unsigned char> tail;
  while (csv::next_line(f, line)) {
    const auto rec = csv::split_record(line);
    if (rec.size() != d + 3) throw std::runtime_error("catalog: wrong field count on row " + std::to_string(pop.size()));
    if (csv::parse_int(rec[0], "item_id") != static_cast<long long>(pop.size())) {
      throw std::runtime_error("catalog: item ids must be 0..n-1 in order");
    }
    pop.push_back(csv::parse_double(rec[1], "pop"));
    tail.push_back(static_cast<unsigned char>(csv::parse_int(rec[2], "tail") != 0));
    for (std::size_t k = 0; k < d; ++k) emb.push_back(csv::parse_double(rec[3 + k], "embedding"));
  }
  const std::size_t n = pop.size();
  ItemCatalog cat(num::Tensor::matrix(n, d, std::move(emb)), std::move(pop));
  if (cat.tail_flags() != tail) throw std::runtime_error("catalog: tail flags disagree with the top-20% popularity split");
  return cat;
}

}  // namespace hrl4pfg
