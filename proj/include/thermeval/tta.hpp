#pragma once

#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "thermeval/detector.hpp"
#include "thermeval/geometry.hpp"

namespace thermeval {

// View specifications. Shift and Crop take pixel values unless `relative`
// is set, in which case values are fractions of the canvas extent and are
// resolved per image.
struct Identity {
  bool operator==(const Identity&) const = default;
};
struct HFlip {
  bool operator==(const HFlip&) const = default;
};
struct VFlip {
  bool operator==(const VFlip&) const = default;
};
struct Shift {
  double dx = 0.0;
  double dy = 0.0;
  bool relative = false;
  bool operator==(const Shift&) const = default;
};
struct Crop {
  BBox rect;
  bool rescale = true;  // stretch the crop back to the full canvas
  bool relative = false;
  bool operator==(const Crop&) const = default;
};
struct Scale {
  double sx = 1.0;
  double sy = 1.0;
  bool operator==(const Scale&) const = default;
};

using TransformSpec = std::variant<Identity, HFlip, VFlip, Shift, Crop, Scale>;

/// Converts relative Shift/Crop values to pixels for `canvas`.
TransformSpec resolve_spec(const TransformSpec& spec, Size canvas);

/// Throws ValidationError when the resolved spec is unusable on `canvas`
/// (crop without area or outside the canvas, non-positive scale, ...).
void validate_spec(const TransformSpec& spec, Size canvas);

/// Source-to-view coordinate map.
AffineTransform view_transform(const TransformSpec& spec, Size canvas);
/// Extent of the view image.
Size view_canvas(const TransformSpec& spec, Size canvas);
/// Part of the source canvas that is visible in the view.
BBox visible_source_region(const TransformSpec& spec, Size canvas);

/// Stable textual fingerprint, e.g. "identity", "hflip", "shift:32,0",
/// "shift:0.05,0:rel", "crop:0.05,0.05,0.95,0.95:rel:rescale". Used as the
/// view_id of detection records.
std::string view_id(const TransformSpec& spec);
/// Inverse of view_id. Throws ParseError on unknown syntax.
TransformSpec parse_view_id(std::string_view id);

/// Maps view-frame detections back into the source frame. Boxes whose
/// visible fraction within visible_source_region() falls below
/// `min_visible_fraction` are dropped; kept boxes are clamped to the canvas.
std::vector<Detection> inverse_map(std::span<const Detection> view_detections,
                                   const TransformSpec& spec, Size canvas,
                                   double min_visible_fraction = 0.25);

struct NmsMerge {
  double iou = 0.5;
  bool operator==(const NmsMerge&) const = default;
};

/// Clusters same-class boxes around the highest-scoring member; each
/// cluster becomes one box with score-weighted mean coordinates and the
/// mean score of the cluster.
struct WeightedFusionMerge {
  double iou = 0.5;
  bool operator==(const WeightedFusionMerge&) const = default;
};

using MergeStrategy = std::variant<NmsMerge, WeightedFusionMerge>;

std::string merge_name(const MergeStrategy& merge);

/// Fuses pooled detections. Pool order is the tie-breaker, so callers pool
/// in (view or member index, detection index) order.
std::vector<Detection> fuse(std::span<const Detection> pooled, const MergeStrategy& merge);

struct TtaConfig {
  /// Identity, HFlip, Shift(+5% of width), Crop(central 90%, rescaled).
  std::vector<TransformSpec> views = default_views();
  MergeStrategy merge = NmsMerge{0.5};
  double min_visible_fraction = 0.25;

  static std::vector<TransformSpec> default_views();
  void validate() const;
};

/// Runs every view, maps detections back to the source frame, pools them
/// in view order and fuses.
std::vector<Detection> tta_detect(const Detector& detector, const ImageContext& image,
                                  const TtaConfig& config);

}  // namespace thermeval
