#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hrl4pfg/episode.hpp"

namespace hrl4pfg {

struct EpisodeMetrics {
  double r_cum = 0.0;
  double r_single = 0.0;
  std::size_t len = 0;
};

/// R_cum over accuracy rewards only, R_single = R_cum / Len. Throws on an empty log.
EpisodeMetrics episode_metrics(const EpisodeLog& log);
EpisodeMetrics episode_metrics(std::span<const double> accuracy);

/// Gini index of a nonnegative exposure vector via the sorted formula. Throws when all entries are zero.
double gini(std::span<const double> x);
double gini(std::span<const std::uint64_t> counts);

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  // sample sd; 0 for a single value
};

MeanSd mean_sd(std::span<const double> xs);

struct EvalReport {
  long long epoch = 0;
  std::vector<EpisodeMetrics> episodes;
  MeanSd r_cum;
  MeanSd r_single;
  MeanSd len;
  double gini = 0.0;
  double rho = 0.0;
  std::size_t exit_maxlen = 0;
  std::size_t exit_popularity = 0;
  std::vector<std::uint64_t> exposure;  // pooled over the batch
};

/// Aggregates a batch of episodes. Gini and rho use exposure pooled over every episode.
EvalReport aggregate(std::span<const EpisodeLog> logs, std::span<const unsigned char> tail_flags, long long epoch = 0);

/// `epoch,r_cum_mean,r_cum_sd,r_single_mean,r_single_sd,len_mean,len_sd,gini,rho,exit_maxlen,exit_popularity,gini_pct`
std::string report_csv_header();
std::string report_csv_row(const EvalReport& r);
void write_reports_csv(const std::filesystem::path& path, std::span<const EvalReport> reports);

/// JSON document with the CSV fields (plus per-episode values when `with_episodes`).
std::string report_json(const EvalReport& r, bool with_episodes = false);
std::string reports_json(std::span<const EvalReport> reports, const std::string& variant);

}  // namespace hrl4pfg
