#include "thermeval/latency.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace thermeval {

LatencyStats summarize_latencies(std::span<const double> samples_ms) {
  LatencyStats stats;
  stats.n = samples_ms.size();
  if (samples_ms.empty()) return stats;

  std::vector<double> sorted(samples_ms.begin(), samples_ms.end());
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  for (double v : sorted) sum += v;
  const std::size_t n = sorted.size();
  stats.mean_ms = sum / static_cast<double>(n);
  stats.median_ms = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
  stats.p95_ms = sorted[std::clamp<std::size_t>(rank, 1, n) - 1];
  stats.fps = stats.mean_ms > 0.0 ? 1000.0 / stats.mean_ms : 0.0;
  return stats;
}

}  // namespace thermeval
