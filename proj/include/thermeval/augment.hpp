#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "thermeval/formats.hpp"
#include "thermeval/geometry.hpp"
#include "thermeval/tta.hpp"

namespace thermeval {

/// Rotation about the canvas center (see AffineTransform::rotation).
struct Rotation {
  double degrees = 0.0;
  bool operator==(const Rotation&) const = default;
};

/// Shear about the canvas center by the given angles.
struct Shear {
  double ax_degrees = 0.0;
  double ay_degrees = 0.0;
  bool operator==(const Shear&) const = default;
};

using AugmentSpec =
    std::variant<Identity, HFlip, VFlip, Shift, Crop, Scale, Rotation, Shear>;

AugmentSpec to_augment_spec(const TransformSpec& spec);

struct LabeledSample {
  std::string image_id;
  int width = 0;
  int height = 0;
  std::vector<GroundTruthBox> boxes;
  std::optional<GrayImage> pixels;

  Size canvas() const noexcept {
    return {static_cast<double>(width), static_cast<double>(height)};
  }
  /// Positive canvas, boxes valid and inside it, raster matching the canvas.
  void validate() const;
  bool operator==(const LabeledSample&) const = default;
};

struct BoxOrigin {
  std::size_t sample = 0;  // input sample index (0 outside mosaic)
  std::size_t box = 0;     // index within that sample's boxes
  bool operator==(const BoxOrigin&) const = default;
};

struct DroppedBox {
  std::size_t sample = 0;
  std::size_t box = 0;
  int class_id = 0;
  double visible_fraction = 0.0;
};

struct AugmentResult {
  LabeledSample sample;
  /// origins[i] is the input box that became sample.boxes[i].
  std::vector<BoxOrigin> origins;
  /// Input boxes removed because their visible fraction fell below the
  /// threshold. Every input box appears in exactly one of the two lists.
  std::vector<DroppedBox> dropped;
};

/// Coordinate map of `spec` on `canvas`, and the output canvas size.
AffineTransform augment_transform(const AugmentSpec& spec, Size canvas);
Size augment_canvas(const AugmentSpec& spec, Size canvas);

/// Maps boxes through the spec, clips them to the output canvas and drops
/// those with visible fraction below `min_visible_fraction`. The raster, if
/// present, is resampled with nearest-neighbor lookups at pixel centers.
AugmentResult apply_labeled(const LabeledSample& sample, const AugmentSpec& spec,
                            double min_visible_fraction = 0.10);

/// Magnitude ranges for randomized training augmentation. Each enabled
/// transform is drawn in the order flip, rotation, shear, translation.
struct AugmentPolicy {
  double flip_probability = 0.5;
  double max_rotation_degrees = 10.0;
  double max_shear_degrees = 5.0;
  double max_translation_fraction = 0.1;
  double min_visible_fraction = 0.10;
};

/// Draws one augmentation per policy from Xoshiro256(seed) and applies them
/// in sequence.
AugmentResult augment_random(const LabeledSample& sample, const AugmentPolicy& policy,
                             std::uint64_t seed);

struct MosaicParams {
  int size = 640;
  double pivot_x = 320.0;
  double pivot_y = 320.0;
  double min_visible_fraction = 0.10;
  /// Pivot clamp region as fractions of size, per axis.
  double clamp_lo = 0.25;
  double clamp_hi = 0.75;

  void validate() const;
};

/// Pivot clamped into [clamp_lo*size, clamp_hi*size] on both axes.
Point effective_pivot(const MosaicParams& params);

/// Top-left, top-right, bottom-left, bottom-right.
std::array<BBox, 4> mosaic_quadrants(int size, Point pivot);

/// Params with the pivot drawn uniformly over the clamp region.
MosaicParams random_mosaic_params(int size, std::uint64_t seed,
                                  double min_visible_fraction = 0.10);

/// Stretches sample i onto quadrant i. Boxes are clipped to their quadrant
/// and dropped below the visibility threshold (measured against the mapped,
/// unclipped box). Rasters are composited only when all four are present.
AugmentResult mosaic(std::span<const LabeledSample> samples, const MosaicParams& params);

}  // namespace thermeval
