#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hrl4pfg/env.hpp"

namespace hrl4pfg {

struct StepRecord {
  std::size_t item = 0;
  double accuracy = 0.0;  // r^a
  double fairness = 0.0;  // r^f
  double guiding = 0.0;   // r^g
  double low = 0.0;       // r^l
  bool valid = false;     // gate state of the governing target
  std::size_t window = 0; // index into EpisodeLog::windows
};

struct WindowRecord {
  std::size_t start = 0;
  std::size_t length = 0;
  std::vector<double> g;
  double reward = 0.0;  // r^h
  bool valid = false;
};

/// Full trajectory of one session.
struct EpisodeLog {
  std::vector<StepRecord> steps;
  std::vector<WindowRecord> windows;
  ExitCause cause = ExitCause::none;
  std::size_t user_id = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> exposure;  // per item, this episode only

  std::size_t len() const { return steps.size(); }
};

}  // namespace hrl4pfg
