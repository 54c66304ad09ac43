#pragma once

#include <cstddef>
#include <span>

namespace thermeval {

struct LatencyStats {
  std::size_t n = 0;
  double mean_ms = 0.0;
  double median_ms = 0.0;
  double p95_ms = 0.0;  // nearest rank
  double fps = 0.0;     // 1000 / mean_ms
};

/// Summary of per-call latencies in milliseconds. Empty input yields n = 0
/// and zeros elsewhere.
LatencyStats summarize_latencies(std::span<const double> samples_ms);

}  // namespace thermeval
