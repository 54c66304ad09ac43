#include "thermeval/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "thermeval/error.hpp"

namespace thermeval {

bool BBox::valid() const noexcept {
  return std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(x_max) &&
         std::isfinite(y_max) && x_min <= x_max && y_min <= y_max;
}

BBox checked_box(double x_min, double y_min, double x_max, double y_max) {
  BBox box{x_min, y_min, x_max, y_max};
  if (!box.valid()) {
    std::ostringstream msg;
    msg << "invalid box [" << x_min << ", " << y_min << ", " << x_max << ", "
        << y_max << "]";
    throw ValidationError(msg.str());
  }
  return box;
}

AffineTransform::AffineTransform(double a, double b, double tx, double c,
                                 double d, double ty)
    : a_(a), b_(b), tx_(tx), c_(c), d_(d), ty_(ty) {
  for (double v : {a, b, tx, c, d, ty}) {
    if (!std::isfinite(v)) {
      throw ValidationError("affine transform has a non-finite coefficient");
    }
  }
  const double det = determinant();
  if (det == 0.0 || !std::isfinite(det)) {
    throw ValidationError("affine transform is not invertible");
  }
}

AffineTransform AffineTransform::translation(double dx, double dy) {
  return {1.0, 0.0, dx, 0.0, 1.0, dy};
}

AffineTransform AffineTransform::scaling(double sx, double sy) {
  return {sx, 0.0, 0.0, 0.0, sy, 0.0};
}

AffineTransform AffineTransform::horizontal_flip(double canvas_width) {
  return {-1.0, 0.0, canvas_width, 0.0, 1.0, 0.0};
}

AffineTransform AffineTransform::vertical_flip(double canvas_height) {
  return {1.0, 0.0, 0.0, 0.0, -1.0, canvas_height};
}

AffineTransform AffineTransform::rotation(double degrees, double cx,
                                          double cy) {
  double cos_t = 0.0;
  double sin_t = 0.0;
  const double quarters = degrees / 90.0;
  if (std::isfinite(quarters) && quarters == std::floor(quarters)) {
    static constexpr double kCos[] = {1.0, 0.0, -1.0, 0.0};
    static constexpr double kSin[] = {0.0, 1.0, 0.0, -1.0};
    const auto k = static_cast<long long>(std::fmod(quarters, 4.0) + 4.0) % 4;
    cos_t = kCos[k];
    sin_t = kSin[k];
  } else {
    const double rad = degrees * std::numbers::pi / 180.0;
    cos_t = std::cos(rad);
    sin_t = std::sin(rad);
  }
  return {cos_t, -sin_t, cx - cos_t * cx + sin_t * cy,
          sin_t, cos_t,  cy - sin_t * cx - cos_t * cy};
}

AffineTransform AffineTransform::shear(double ax_degrees, double ay_degrees,
                                       double cx, double cy) {
  const double kx = std::tan(ax_degrees * std::numbers::pi / 180.0);
  const double ky = std::tan(ay_degrees * std::numbers::pi / 180.0);
  return {1.0, kx, -kx * cy, ky, 1.0, -ky * cx};
}

Point AffineTransform::apply(Point p) const noexcept {
  return {a_ * p.x + b_ * p.y + tx_, c_ * p.x + d_ * p.y + ty_};
}

AffineTransform AffineTransform::inverse() const {
  const double det = determinant();
  const double ia = d_ / det;
  const double ib = -b_ / det;
  const double ic = -c_ / det;
  const double id = a_ / det;
  return {ia, ib, -(ia * tx_ + ib * ty_), ic, id, -(ic * tx_ + id * ty_)};
}

AffineTransform AffineTransform::then(const AffineTransform& next) const {
  const auto& n = next;
  return {n.a_ * a_ + n.b_ * c_, n.a_ * b_ + n.b_ * d_,
          n.a_ * tx_ + n.b_ * ty_ + n.tx_, n.c_ * a_ + n.d_ * c_,
          n.c_ * b_ + n.d_ * d_, n.c_ * tx_ + n.d_ * ty_ + n.ty_};
}

double iou(const BBox& a, const BBox& b) noexcept {
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<Detection> nms(std::span<const Detection> detections,
                           double iou_threshold, bool class_aware) {
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    return detections[l].score > detections[r].score;
  });

  std::vector<Detection> kept;
  kept.reserve(detections.size());
  for (std::size_t idx : order) {
    const Detection& cand = detections[idx];
    const bool suppressed =
        std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
          if (class_aware && k.class_id != cand.class_id) return false;
          return iou(k.bbox, cand.bbox) >= iou_threshold;
        });
    if (!suppressed) kept.push_back(cand);
  }
  return kept;
}

BBox transform_box(const AffineTransform& transform, const BBox& box) noexcept {
  const std::array<Point, 4> corners = {
      transform.apply({box.x_min, box.y_min}),
      transform.apply({box.x_max, box.y_min}),
      transform.apply({box.x_min, box.y_max}),
      transform.apply({box.x_max, box.y_max}),
  };
  BBox out{corners[0].x, corners[0].y, corners[0].x, corners[0].y};
  for (const Point& p : corners) {
    out.x_min = std::min(out.x_min, p.x);
    out.y_min = std::min(out.y_min, p.y);
    out.x_max = std::max(out.x_max, p.x);
    out.y_max = std::max(out.y_max, p.y);
  }
  return out;
}

std::optional<ClippedBox> clip_box_to(const BBox& box, const BBox& region) {
  const double area = box.area();
  if (!(area > 0.0)) return std::nullopt;
  BBox clipped{std::max(box.x_min, region.x_min), std::max(box.y_min, region.y_min),
               std::min(box.x_max, region.x_max), std::min(box.y_max, region.y_max)};
  if (clipped.x_max <= clipped.x_min || clipped.y_max <= clipped.y_min) {
    return std::nullopt;
  }
  const double fraction =
      clipped == box ? 1.0 : std::clamp(clipped.area() / area, 0.0, 1.0);
  return ClippedBox{clipped, fraction};
}

std::optional<ClippedBox> clip_box(const BBox& box, double canvas_width,
                                   double canvas_height) {
  return clip_box_to(box, BBox{0.0, 0.0, canvas_width, canvas_height});
}

}  // namespace thermeval
