#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace thermeval {

/// Canvas extent in pixels.
struct Size {
  double width = 0.0;
  double height = 0.0;

  bool operator==(const Size&) const = default;
};

struct Point {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point&) const = default;
};

/// Axis-aligned box in corner form, continuous pixel units. Area carries no
/// +1 pixel correction.
struct BBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const noexcept { return x_max - x_min; }
  double height() const noexcept { return y_max - y_min; }
  double area() const noexcept { return width() * height(); }
  Point center() const noexcept {
    return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)};
  }

  /// Finite coordinates with min <= max on both axes.
  bool valid() const noexcept;

  bool operator==(const BBox&) const = default;
};

/// Throws ValidationError when the box breaks the BBox invariants.
BBox checked_box(double x_min, double y_min, double x_max, double y_max);

struct Detection {
  BBox bbox;
  int class_id = 0;
  double score = 0.0;

  bool operator==(const Detection&) const = default;
};

struct GroundTruthBox {
  BBox bbox;
  int class_id = 0;

  bool operator==(const GroundTruthBox&) const = default;
};

/// 2x3 coordinate map: x' = a*x + b*y + tx, y' = c*x + d*y + ty.
/// Construction rejects singular or non-finite coefficients.
class AffineTransform {
 public:
  AffineTransform() = default;
  AffineTransform(double a, double b, double tx, double c, double d, double ty);

  static AffineTransform identity() { return {}; }
  static AffineTransform translation(double dx, double dy);
  static AffineTransform scaling(double sx, double sy);
  static AffineTransform horizontal_flip(double canvas_width);
  static AffineTransform vertical_flip(double canvas_height);
  /// Rotation by `degrees` about (cx, cy) using x' = cx + cos*(x-cx) -
  /// sin*(y-cy). Multiples of 90 degrees use exact coefficients.
  static AffineTransform rotation(double degrees, double cx, double cy);
  /// Shear about (cx, cy): x' = x + tan(ax)*(y-cy), y' = y + tan(ay)*(x-cx).
  static AffineTransform shear(double ax_degrees, double ay_degrees, double cx,
                               double cy);

  Point apply(Point p) const noexcept;
  AffineTransform inverse() const;
  /// The map that applies `*this` first, then `next`.
  AffineTransform then(const AffineTransform& next) const;
  double determinant() const noexcept { return a_ * d_ - b_ * c_; }

  /// True when the map sends axis-aligned boxes to axis-aligned boxes
  /// without a hull (no rotation or shear component).
  bool axis_preserving() const noexcept { return b_ == 0.0 && c_ == 0.0; }

  std::array<double, 6> coefficients() const noexcept {
    return {a_, b_, tx_, c_, d_, ty_};
  }

  bool operator==(const AffineTransform&) const = default;

 private:
  double a_ = 1.0;
  double b_ = 0.0;
  double tx_ = 0.0;
  double c_ = 0.0;
  double d_ = 1.0;
  double ty_ = 0.0;
};

/// Intersection area over union area; 0 when the union area is 0.
double iou(const BBox& a, const BBox& b) noexcept;

/// Greedy suppression in score-descending order, ties broken by input index.
/// A box is suppressed when its IoU with an already kept box is >=
/// `iou_threshold` (same class only when `class_aware`).
std::vector<Detection> nms(std::span<const Detection> detections,
                           double iou_threshold, bool class_aware = true);

/// Axis-aligned hull of the four mapped corners.
BBox transform_box(const AffineTransform& transform, const BBox& box) noexcept;

struct ClippedBox {
  BBox box;
  /// Clipped area divided by the original area.
  double visible_fraction = 0.0;
};

/// Intersection with [0,w]x[0,h]. Empty when the intersection has no area
/// or the input box has zero area.
std::optional<ClippedBox> clip_box(const BBox& box, double canvas_width,
                                   double canvas_height);

/// Same as clip_box against an arbitrary region.
std::optional<ClippedBox> clip_box_to(const BBox& box, const BBox& region);

}  // namespace thermeval
