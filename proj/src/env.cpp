#include "hrl4pfg/env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "hrl4pfg/csv.hpp"
#include "hrl4pfg/num/ops.hpp"

namespace hrl4pfg {

namespace {

void normalize(std::vector<double>& v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  if (n > 0.0)
    for (double& x : v) x /= n;
}

std::vector<double> random_unit(std::size_t d, num::Rng& rng) {
  std::vector<double> v(d);
  do {
    for (double& x : v) x = num::standard_normal(rng);
    normalize(v);
  } while (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; }));
  return v;
}

// normalize(a * dir + z / sqrt(d)), z ~ N(0, I).
std::vector<double> pulled_unit(std::span<const double> dir, double a, num::Rng& rng) {
  const double inv = 1.0 / std::sqrt(static_cast<double>(dir.size()));
  std::vector<double> v(dir.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = a * dir[k] + inv * num::standard_normal(rng);
  normalize(v);
  return v;
}

}  // namespace

const char* to_string(ExitCause c) {
  switch (c) {
    case ExitCause::none: return "none";
    case ExitCause::max_len: return "max_len";
    case ExitCause::popularity_exit: return "popularity_exit";
  }
  return "unknown";
}

void validate(const EnvConfig& cfg) {
  if (cfg.max_len != 30 && cfg.max_len != 50) throw std::invalid_argument("env: max_len must be 30 or 50");
  if (cfg.exit_w < 1) throw std::invalid_argument("env: exit_w must be >= 1");
  if (cfg.history_len < 1) throw std::invalid_argument("env: history_len must be >= 1");
  if (cfg.num_items < 1) throw std::invalid_argument("env: num_items must be >= 1");
  if (cfg.dim < 1) throw std::invalid_argument("env: dim must be >= 1");
  if (cfg.num_users < 1) throw std::invalid_argument("env: num_users must be >= 1");
  if (!(cfg.eta >= 0.0 && cfg.eta < 1.0)) throw std::invalid_argument("env: eta must lie in [0, 1)");
  if (!(cfg.noise >= 0.0)) throw std::invalid_argument("env: noise must be >= 0");
  if (!(cfg.zipf_s > 0.0)) throw std::invalid_argument("env: zipf_s must be > 0");
}

double expected_feedback(std::span<const double> preference, std::span<const double> item) {
  return std::clamp((num::dot(preference, item) + 1.0) / 2.0, 0.0, 1.0);
}

Session::Session(const ItemCatalog& catalog, const UserProfile& user, const EnvConfig& cfg, std::uint64_t stream_seed)
    : catalog_(&catalog),
      user_id_(user.id),
      preference_(user.preference),
      eta_(user.eta),
      noise_(user.noise),
      exit_w_(cfg.exit_w),
      max_len_(cfg.max_len),
      history_len_(cfg.history_len),
      rng_(stream_seed),
      exposure_(catalog.size(), 0) {
  validate(cfg);
  if (preference_.size() != catalog.dim()) throw std::invalid_argument("Session: user preference dimension mismatch");
  if (!(eta_ >= 0.0 && eta_ < 1.0) || !(noise_ >= 0.0)) throw std::invalid_argument("Session: invalid user drift/noise");

  // Bootstrap: N draws from the user's top-2N items with non-negative alignment.
  const std::size_t n = catalog.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> align(n);
  for (std::size_t i = 0; i < n; ++i) align[i] = num::dot(preference_, catalog.embedding(i));
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return align[a] > align[b]; });
  std::vector<std::size_t> pool;
  for (std::size_t r = 0; r < std::min(n, 2 * history_len_); ++r) {
    if (align[order[r]] >= 0.0) pool.push_back(order[r]);
  }
  if (pool.empty()) pool.push_back(order[0]);
  const auto pick = [&](std::size_t bound) {
    return std::min(bound - 1, static_cast<std::size_t>(num::uniform01(rng_) * static_cast<double>(bound)));
  };
  for (std::size_t k = 0; k < history_len_; ++k) {
    if (pool.size() >= history_len_) {
      std::swap(pool[k], pool[k + pick(pool.size() - k)]);
      history_.push_back({pool[k], true});
    } else {
      history_.push_back({pool[pick(pool.size())], true});
    }
  }
}

StepResult Session::step(std::size_t item) {
  if (done()) throw std::logic_error("Session::step: session already terminated");
  if (item >= catalog_->size()) throw std::out_of_range("Session::step: unknown item " + std::to_string(item));
  const auto v = catalog_->embedding(item);
  const double eps = num::standard_normal(rng_);
  const double r = std::clamp((num::dot(preference_, v) + 1.0) / 2.0 + noise_ * eps, 0.0, 1.0);
  const bool positive = r >= kPositiveThreshold;
  if (positive && eta_ > 0.0) {
    std::vector<double> next(preference_.size());
    for (std::size_t k = 0; k < next.size(); ++k) next[k] = (1.0 - eta_) * preference_[k] + eta_ * v[k];
    double norm = 0.0;
    for (double x : next) norm += x * x;
    if (norm > 0.0) {
      normalize(next);
      preference_ = std::move(next);
    }
  }
  ++exposure_[item];
  popular_run_ = catalog_->is_popular(item) ? popular_run_ + 1 : 0;
  const std::size_t step_index = t_;
  ++t_;
  history_.erase(history_.begin());
  history_.push_back({item, positive});
  if (t_ == max_len_) {
    cause_ = ExitCause::max_len;
  } else if (popular_run_ == exit_w_) {
    cause_ = ExitCause::popularity_exit;
  }
  return {Feedback{r, positive, item, step_index}, done()};
}

Session reset(const ItemCatalog& catalog, const UserProfile& user, const EnvConfig& cfg, std::uint64_t stream_seed) {
  return Session(catalog, user, cfg, stream_seed);
}

// ---------------------------------------------------------------------------
// World construction
// ---------------------------------------------------------------------------

std::vector<std::size_t> zipf_ranks(const EnvConfig& cfg, std::uint64_t seed) {
  num::Rng rng(num::derive_seed(seed, {0x7a1bf}));
  std::vector<std::size_t> by_rank(cfg.num_items);
  std::iota(by_rank.begin(), by_rank.end(), std::size_t{0});
  for (std::size_t i = by_rank.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(num::uniform01(rng) * static_cast<double>(i));
    std::swap(by_rank[i - 1], by_rank[j]);
  }
  std::vector<std::size_t> rank(cfg.num_items);
  for (std::size_t r = 0; r < by_rank.size(); ++r) rank[by_rank[r]] = r;
  return rank;
}

World generate_world(const EnvConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  const std::size_t n = cfg.num_items, d = cfg.dim, users = cfg.num_users;
  const auto rank = zipf_ranks(cfg, seed);
  num::Rng rng(num::derive_seed(seed, {0xca7a109}));
  const std::vector<double> popular_dir = random_unit(d, rng);

  std::vector<double> pop(n);
  std::vector<double> emb(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    const double expected = static_cast<double>(users) * std::pow(static_cast<double>(rank[i] + 1), -cfg.zipf_s);
    pop[i] = popularity(static_cast<std::uint64_t>(std::llround(expected)), users);
  }
  const auto tail = tail_partition(pop);
  // Items visited in rank order so the embedding stream does not depend on the id permutation.
  std::vector<std::size_t> by_rank(n);
  for (std::size_t i = 0; i < n; ++i) by_rank[rank[i]] = i;
  for (std::size_t r = 0; r < n; ++r) {
    const double a = tail[by_rank[r]] ? 0.0 : cfg.pop_cluster;
    const auto v = pulled_unit(popular_dir, a, rng);
    std::copy(v.begin(), v.end(), emb.begin() + static_cast<std::ptrdiff_t>(by_rank[r] * d));
  }

  World w{ItemCatalog(num::Tensor::matrix(n, d, std::move(emb)), std::move(pop)), {}};
  num::Rng urng(num::derive_seed(seed, {0x05e75}));
  w.users.reserve(users);
  for (std::size_t u = 0; u < users; ++u) {
    w.users.push_back(UserProfile{u, pulled_unit(popular_dir, cfg.user_pop_bias, urng), cfg.eta, cfg.noise});
  }
  return w;
}

void save_users_csv(const std::filesystem::path& path, const UserPopulation& users) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("users: cannot write " + path.string());
  const std::size_t d = users.empty() ? 0 : users.front().preference.size();
  f << "user_id,eta,noise";
  for (std::size_t k = 0; k < d; ++k) f << ",u_" << k;
  f << "\r\n";
  for (const auto& u : users) {
    f << u.id << ',' << csv::format_double(u.eta) << ',' << csv::format_double(u.noise);
    for (double x : u.preference) f << ',' << csv::format_double(x);
    f << "\r\n";
  }
  if (!f) throw std::runtime_error("users: write failed for " + path.string());
}

UserPopulation load_users_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("users: cannot open " + path.string());
  std::string line;
  if (!csv::next_line(f, line)) throw std::runtime_error("users: empty file " + path.string());
  const auto header = csv::split_record(line);
  if (header.size() < 4 || header[0] != "user_id" || header[1] != "eta" || header[2] != "noise") {
    throw std::runtime_error("users: unexpected header in " + path.string());
  }
  const std::size_t d = header.size() - 3;
  UserPopulation out;
  while (csv::next_line(f, line)) {
    const auto rec = csv::split_record(line);
    if (rec.size() != d + 3) throw std::runtime_error("users: wrong field count on row " + std::to_string(out.size()));
    UserProfile u;
    u.id = static_cast<std::size_t>(csv::parse_int(rec[0], "user_id"));
    u.eta = csv::parse_double(rec[1], "eta");
    u.noise = csv::parse_double(rec[2], "noise");
    for (std::size_t k = 0; k < d; ++k) u.preference.push_back(csv::parse_double(rec[3 + k], "preference"));
    out.push_back(std::move(u));
  }
  return out;
}

std::vector<LogRecord> load_interaction_log(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("log: cannot open " + path.string());
  std::string line;
  if (!csv::next_line(f, line) || csv::split_record(line) != std::vector<std::string>{"user_id", "item_id", "timestamp", "feedback"}) {
    throw std::runtime_error("log: expected header user_id,item_id,timestamp,feedback");
  }
  std::vector<LogRecord> out;
  while (csv::next_line(f, line)) {
    const auto rec = csv::split_record(line);
    if (rec.size() != 4) throw std::runtime_error("log: wrong field count on row " + std::to_string(out.size()));
    LogRecord r;
    r.user_id = csv::parse_int(rec[0], "user_id");
    const long long item = csv::parse_int(rec[1], "item_id");
    if (item < 0) throw std::runtime_error("log: negative item id");
    r.item_id = static_cast<std::size_t>(item);
    r.timestamp = csv::parse_int(rec[2], "timestamp");
    r.feedback = csv::parse_double(rec[3], "feedback");
    if (!(r.feedback >= 0.0 && r.feedback <= 1.0)) throw std::runtime_error("log: feedback outside [0, 1]");
    out.push_back(r);
  }
  return out;
}

World ingest_log(std::span<const LogRecord> log, const num::Tensor& embeddings, const EnvConfig& cfg) {
  if (embeddings.rank() != 2 || embeddings.rows() == 0) throw std::invalid_argument("ingest_log: empty embedding matrix");
  const std::size_t n = embeddings.rows(), d = embeddings.cols();
  std::map<long long, std::size_t> user_index;
  for (const auto& r : log) user_index.emplace(r.user_id, 0);
  if (user_index.empty()) throw std::invalid_argument("ingest_log: empty log");
  std::size_t next = 0;
  for (auto& [id, idx] : user_index) idx = next++;

  std::vector<std::set<std::size_t>> likers(n);
  std::vector<std::vector<double>> liked_sum(user_index.size(), std::vector<double>(d, 0.0));
  std::vector<std::size_t> liked_count(user_index.size(), 0);
  for (const auto& r : log) {
    if (r.item_id >= n) throw std::out_of_range("ingest_log: item " + std::to_string(r.item_id) + " not in catalog");
    if (r.feedback < kPositiveThreshold) continue;
    const std::size_t u = user_index.at(r.user_id);
    likers[r.item_id].insert(u);
    for (std::size_t k = 0; k < d; ++k) liked_sum[u][k] += embeddings.at(r.item_id, k);
    ++liked_count[u];
  }
  std::vector<double> pop(n);
  for (std::size_t i = 0; i < n; ++i) pop[i] = popularity(likers[i].size(), user_index.size());

  World w{ItemCatalog(embeddings, std::move(pop)), {}};
  for (std::size_t u = 0; u < liked_sum.size(); ++u) {
    if (liked_count[u] == 0) continue;
    auto pref = liked_sum[u];
    normalize(pref);
    if (std::all_of(pref.begin(), pref.end(), [](double x) { return x == 0.0; })) continue;
    w.users.push_back(UserProfile{u, std::move(pref), cfg.eta, cfg.noise});
  }
  return w;
}

}  // namespace hrl4pfg
