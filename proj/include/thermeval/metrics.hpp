#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "thermeval/geometry.hpp"
#include "thermeval/latency.hpp"

namespace thermeval {

enum class ApMode {
  kAllPoint,      // monotone precision envelope, exact step integration
  kRawTrapezoid,  // trapezoids under the unenveloped curve
};

struct EvalConfig {
  double iou_threshold = 0.5;
  double confidence_threshold = 0.5;
  ApMode ap_mode = ApMode::kAllPoint;
  bool report_percent = true;

  void validate() const;
};

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const ConfusionCounts&) const = default;
};

struct MatchVerdict {
  bool true_positive = false;
  std::optional<std::size_t> gt_index;

  bool operator==(const MatchVerdict&) const = default;
};

struct MatchResult {
  /// One verdict per input detection, in input order.
  std::vector<MatchVerdict> verdicts;
  /// Indices of ground-truth boxes left unmatched, ascending.
  std::vector<std::size_t> unmatched_gt;
};

/// Greedy matching: detections in score-descending order (ties: lower index
/// first); each takes its best-IoU unmatched same-class ground truth when
/// that IoU is >= `iou_threshold` (ties: lower GT index).
MatchResult match_detections(std::span<const Detection> detections,
                             std::span<const GroundTruthBox> ground_truth,
                             double iou_threshold);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

/// Percentages: tp/(tp+fp)*100 and tp/(tp+fn)*100, 0 for empty denominators.
PrecisionRecall precision_recall(const ConfusionCounts& counts);

struct PRPoint {
  double score_cutoff = 0.0;
  double recall = 0.0;
  double precision = 0.0;

  bool operator==(const PRPoint&) const = default;
};

/// Detections and ground truth of one image.
struct ImageDetections {
  std::vector<Detection> detections;
  std::vector<GroundTruthBox> ground_truth;
};

/// One point per distinct detection score of `class_id`, descending. Each
/// point holds cumulative recall and precision of the detections scoring
/// at or above that cutoff. Empty when the class has no detections.
std::vector<PRPoint> pr_curve(std::span<const ImageDetections> images, int class_id,
                              double iou_threshold);

/// Area under a curve ordered by descending cutoff, in [0, 1].
double average_precision(std::span<const PRPoint> curve, ApMode mode = ApMode::kAllPoint);

struct ClassAp {
  int class_id = 0;
  std::size_t gt_count = 0;
  double ap = 0.0;
};

/// Mean AP over classes with at least one ground-truth box. Throws
/// ValidationError when no class qualifies.
double mean_average_precision(std::span<const ClassAp> per_class);

struct ClassMetrics {
  int class_id = 0;
  std::string name;
  std::size_t gt_count = 0;
  std::size_t detection_count = 0;  // all scores
  ConfusionCounts counts;           // at the confidence threshold
  double precision = 0.0;           // percent
  double recall = 0.0;              // percent
  double ap = 0.0;                  // fraction
  std::vector<PRPoint> curve;
};

struct MetricsReport {
  std::string protocol;
  EvalConfig config;
  std::size_t images = 0;
  std::vector<ClassMetrics> classes;
  ConfusionCounts totals;
  /// Micro-averaged over all classes at the confidence threshold, percent.
  double precision = 0.0;
  double recall = 0.0;
  /// Fraction in [0,1]; absent when no class has ground truth.
  std::optional<double> map;
  /// Per-image wall time of running the protocol.
  LatencyStats latency;
};

enum class ReportFormat { kJson, kTable, kCsv };

/// Latency is excluded unless `include_timing`, so reports of the same
/// inputs are byte-identical.
std::string format_report(const MetricsReport& report, ReportFormat format,
                          bool include_timing = false);

/// CSV with header class,score_cutoff,recall,precision.
std::string pr_curves_csv(const MetricsReport& report);
/// Standalone SVG plot of every class curve.
std::string pr_curves_svg(const MetricsReport& report, const std::string& title);

}  // namespace thermeval
