#include "hrl4pfg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "hrl4pfg/catalog.hpp"
#include "hrl4pfg/csv.hpp"
#include "json.hpp"

namespace hrl4pfg {

EpisodeMetrics episode_metrics(std::span<const double> accuracy) {
  if (accuracy.empty()) throw std::invalid_argument("episode_metrics: empty episode");
  EpisodeMetrics m;
  for (double r : accuracy) m.r_cum += r;
  m.len = accuracy.size();
  m.r_single = m.r_cum / static_cast<double>(m.len);
  return m;
}

EpisodeMetrics episode_metrics(const EpisodeLog& log) {
  std::vector<double> acc;
  acc.reserve(log.steps.size());
  for (const auto& s : log.steps) acc.push_back(s.accuracy);
  return episode_metrics(acc);
}

double gini(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("gini: empty input");
  std::vector<double> s(x.begin(), x.end());
  double total = 0.0;
  for (double v : s) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("gini: entries must be finite and >= 0");
    total += v;
  }
  if (total <= 0.0) throw std::invalid_argument("gini: all-zero exposure");
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) acc += (2.0 * static_cast<double>(i + 1) - n - 1.0) * s[i];
  return acc / (n * total);
}

double gini(std::span<const std::uint64_t> counts) {
  std::vector<double> x(counts.begin(), counts.end());
  return gini(x);
}

MeanSd mean_sd(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean_sd: empty input");
  MeanSd r;
  for (double x : xs) r.mean += x;
  r.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return r;
}

EvalReport aggregate(std::span<const EpisodeLog> logs, std::span<const unsigned char> tail_flags, long long epoch) {
  if (logs.empty()) throw std::invalid_argument("aggregate: no episodes");
  EvalReport r;
  r.epoch = epoch;
  r.exposure.assign(tail_flags.size(), 0);
  std::vector<double> cum, single, len;
  for (const auto& log : logs) {
    const auto m = episode_metrics(log);
    r.episodes.push_back(m);
    cum.push_back(m.r_cum);
    single.push_back(m.r_single);
    len.push_back(static_cast<double>(m.len));
    if (log.exposure.size() != tail_flags.size()) throw std::invalid_argument("aggregate: exposure length mismatch");
    for (std::size_t i = 0; i < log.exposure.size(); ++i) r.exposure[i] += log.exposure[i];
    if (log.cause == ExitCause::max_len) ++r.exit_maxlen;
    if (log.cause == ExitCause::popularity_exit) ++r.exit_popularity;
  }
  r.r_cum = mean_sd(cum);
  r.r_single = mean_sd(single);
  r.len = mean_sd(len);
  r.gini = gini(r.exposure);
  r.rho = exposure_ratio(r.exposure, tail_flags);
  return r;
}

std::string report_csv_header() {
  return "epoch,r_cum_mean,r_cum_sd,r_single_mean,r_single_sd,len_mean,len_sd,gini,rho,exit_maxlen,exit_popularity,"
         "gini_pct";
}

std::string report_csv_row(const EvalReport& r) {
  using csv::format_double;
  std::string s = std::to_string(r.epoch);
  for (double v : {r.r_cum.mean, r.r_cum.sd, r.r_single.mean, r.r_single.sd, r.len.mean, r.len.sd, r.gini, r.rho})
    s += "," + format_double(v);
  s += "," + std::to_string(r.exit_maxlen) + "," + std::to_string(r.exit_popularity);
  s += "," + format_double(100.0 * r.gini);
  return s;
}

void write_reports_csv(const std::filesystem::path& path, std::span<const EvalReport> reports) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << report_csv_header() << "\r\n";
  for (const auto& r : reports) f << report_csv_row(r) << "\r\n";
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

namespace {

nlohmann::ordered_json to_json(const EvalReport& r, bool with_episodes) {
  nlohmann::ordered_json j;
  j["epoch"] = r.epoch;
  j["r_cum_mean"] = r.r_cum.mean;
  j["r_cum_sd"] = r.r_cum.sd;
  j["r_single_mean"] = r.r_single.mean;
  j["r_single_sd"] = r.r_single.sd;
  j["len_mean"] = r.len.mean;
  j["len_sd"] = r.len.sd;
  j["gini"] = r.gini;
  j["rho"] = r.rho;
  j["exit_maxlen"] = r.exit_maxlen;
  j["exit_popularity"] = r.exit_popularity;
  j["gini_pct"] = 100.0 * r.gini;
  if (with_episodes) {
    auto eps = nlohmann::ordered_json::array();
    for (const auto& e : r.episodes) eps.push_back({{"r_cum", e.r_cum}, {"r_single", e.r_single}, {"len", e.len}});
    j["episodes"] = std::move(eps);
  }
  return j;
}

}  // namespace

std::string report_json(const EvalReport& r, bool with_episodes) { return to_json(r, with_episodes).dump(2) + "\n"; }

std::string reports_json(std::span<const EvalReport> reports, const std::string& variant) {
  nlohmann::ordered_json j;
  j["variant"] = variant;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : reports) rows.push_back(to_json(r, false));
  j["reports"] = std::move(rows);
  return j.dump(2) + "\n";
}

}  // namespace hrl4pfg
