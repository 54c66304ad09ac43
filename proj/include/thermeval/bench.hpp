#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "thermeval/detector.hpp"
#include "thermeval/error.hpp"
#include "thermeval/evaluate.hpp"
#include "thermeval/latency.hpp"
#include "thermeval/metrics.hpp"

namespace thermeval {

/// Monotonic time source in milliseconds. Tests inject fake clocks.
using BenchClock = std::function<double()>;

/// std::chrono::steady_clock in milliseconds.
double steady_clock_ms();

struct BenchOptions {
  std::size_t warmup = 10;
  std::size_t iterations = 30;  // passes over the image list
  BenchClock clock = steady_clock_ms;

  void validate() const;
};

struct BenchResult {
  LatencyStats latency;        // per detect call, detect() only
  double throughput_ips = 0.0; // images per second over the whole timed loop
};

/// Raised when a detect call fails mid-run. Carries the stats of the calls
/// that completed before the failure.
class BenchError : public Error {
 public:
  BenchError(const std::string& message, LatencyStats partial)
      : Error(ErrorKind::kValidation, message), partial_(partial) {}

  const LatencyStats& partial() const noexcept { return partial_; }

 private:
  LatencyStats partial_;
};

/// Runs `warmup` unmeasured passes, then `iterations` passes timing every
/// identity-view detect call separately.
BenchResult bench_detector(const Detector& detector, std::span<const ImageContext> images,
                           const BenchOptions& options = {});

/// Same loop for a whole protocol: one timed call per image covers every
/// view or member plus fusion.
BenchResult bench_protocol(const Protocol& protocol, std::span<const ImageContext> images,
                           const BenchOptions& options = {});

/// Image contexts for every manifest entry, in manifest order. The contexts
/// borrow the dataset's ground truth.
std::vector<ImageContext> image_contexts(const Dataset& dataset);

struct ModeRun {
  std::string detector;  // label for the row
  Protocol protocol;
};

struct ModeRow {
  std::string mode;
  std::string detector;
  double precision = 0.0;
  double recall = 0.0;
  std::optional<double> map;  // fraction
  BenchResult bench;
  bool best_precision = false;
  bool best_recall = false;
  bool best_map = false;
  bool best_latency = false;
};

struct ModeComparison {
  std::vector<ModeRow> rows;
};

/// Evaluates each run on the dataset (single thread) and benchmarks it on
/// the same images. The best value per column is flagged on every row that
/// attains it, so ties flag several rows.
ModeComparison compare_modes(const Dataset& dataset, std::span<const ModeRun> runs,
                             const EvalConfig& config, const BenchOptions& options = {});

std::string format_comparison(const ModeComparison& comparison, bool as_json);

/// JSON or aligned text for a single benchmark.
std::string format_bench(const std::string& name, const BenchResult& result, bool as_json);

}  // namespace thermeval
