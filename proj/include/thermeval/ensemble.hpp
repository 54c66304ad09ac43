#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "thermeval/detector.hpp"
#include "thermeval/formats.hpp"
#include "thermeval/metrics.hpp"
#include "thermeval/tta.hpp"

namespace thermeval {

struct EnsembleConfig {
  std::vector<DetectorPtr> members;
  MergeStrategy merge = NmsMerge{0.5};
  /// Per-member score multipliers; empty means 1.0 for every member.
  std::vector<double> weights;
  /// When set, each member runs test-time augmentation before pooling.
  std::optional<TtaConfig> member_tta;

  double weight(std::size_t member) const {
    return weights.empty() ? 1.0 : weights[member];
  }
  void validate() const;
};

/// Pools every member's detections in member order (scores multiplied by
/// the member weight, clamped to 1) and fuses them. A single member's
/// output is returned without fusion.
std::vector<Detection> ensemble_detect(const EnsembleConfig& config, const ImageContext& image);

struct SubsetScore {
  std::vector<std::size_t> members;  // candidate indices, ascending
  double map = 0.0;
  double precision = 0.0;  // percent, at the confidence threshold
  double recall = 0.0;
};

struct SubsetSelection {
  SubsetScore best;
  /// Every evaluated subset, best first: higher mAP, then fewer members,
  /// then lexicographically smaller index list.
  std::vector<SubsetScore> ranked;
};

inline constexpr std::size_t kMaxSubsetCandidates = 8;

/// Exhaustive search over all non-empty subsets of at most `max_size`
/// candidates, each evaluated as an ensemble on `validation`.
SubsetSelection select_best_subset(std::span<const DetectorPtr> candidates,
                                   const Dataset& validation, const EvalConfig& eval_config,
                                   std::size_t max_size,
                                   const MergeStrategy& merge = NmsMerge{0.5},
                                   std::size_t threads = 1);

std::string format_selection(const SubsetSelection& selection,
                             std::span<const DetectorPtr> candidates, bool as_json);

}  // namespace thermeval
