#include "thermeval/tta.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "thermeval/error.hpp"

namespace thermeval {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string fmt_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = text.find(sep, pos);
    parts.push_back(text.substr(pos, next == std::string_view::npos ? std::string_view::npos
                                                                     : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return parts;
}

std::vector<double> parse_numbers(std::string_view text, std::size_t expected,
                                  std::string_view id) {
  std::vector<double> values;
  for (auto part : split(text, ',')) {
    double v = 0.0;
    const char* first = part.data();
    const char* last = part.data() + part.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
      throw ParseError("view id '" + std::string(id) + "': bad number '" +
                       std::string(part) + "'");
    }
    values.push_back(v);
  }
  if (values.size() != expected) {
    throw ParseError("view id '" + std::string(id) + "': expected " +
                     std::to_string(expected) + " numbers");
  }
  return values;
}

}  // namespace

TransformSpec resolve_spec(const TransformSpec& spec, Size canvas) {
  return std::visit(
      Overloaded{
          [&](const Shift& s) -> TransformSpec {
            if (!s.relative) return s;
            return Shift{s.dx * canvas.width, s.dy * canvas.height, false};
          },
          [&](const Crop& c) -> TransformSpec {
            if (!c.relative) return c;
            return Crop{BBox{c.rect.x_min * canvas.width, c.rect.y_min * canvas.height,
                             c.rect.x_max * canvas.width, c.rect.y_max * canvas.height},
                        c.rescale, false};
          },
          [](const auto& other) -> TransformSpec { return other; },
      },
      spec);
}

void validate_spec(const TransformSpec& spec, Size canvas) {
  if (!(canvas.width > 0.0 && canvas.height > 0.0)) {
    throw ValidationError("view spec needs a positive canvas");
  }
  const TransformSpec resolved = resolve_spec(spec, canvas);
  std::visit(Overloaded{
                 [&](const Shift& s) {
                   if (!std::isfinite(s.dx) || !std::isfinite(s.dy)) {
                     throw ValidationError("shift offsets must be finite");
                   }
                 },
                 [&](const Crop& c) {
                   if (!c.rect.valid() || !(c.rect.area() > 0.0)) {
                     throw ValidationError("crop rectangle must have positive area");
                   }
                   if (c.rect.x_min < 0.0 || c.rect.y_min < 0.0 ||
                       c.rect.x_max > canvas.width || c.rect.y_max > canvas.height) {
                     throw ValidationError("crop rectangle must lie within the canvas");
                   }
                 },
                 [&](const Scale& s) {
                   if (!(s.sx > 0.0 && s.sy > 0.0) || !std::isfinite(s.sx) ||
                       !std::isfinite(s.sy)) {
                     throw ValidationError("scale factors must be positive");
                   }
                 },
                 [](const auto&) {},
             },
             resolved);
}

AffineTransform view_transform(const TransformSpec& spec, Size canvas) {
  validate_spec(spec, canvas);
  return std::visit(
      Overloaded{
          [](const Identity&) { return AffineTransform::identity(); },
          [&](const HFlip&) { return AffineTransform::horizontal_flip(canvas.width); },
          [&](const VFlip&) { return AffineTransform::vertical_flip(canvas.height); },
          [](const Shift& s) { return AffineTransform::translation(s.dx, s.dy); },
          [&](const Crop& c) {
            const auto to_origin =
                AffineTransform::translation(-c.rect.x_min, -c.rect.y_min);
            if (!c.rescale) return to_origin;
            const double sx = canvas.width / c.rect.width();
            const double sy = canvas.height / c.rect.height();
            return AffineTransform(sx, 0.0, -c.rect.x_min * sx, 0.0, sy,
                                   -c.rect.y_min * sy);
          },
          [](const Scale& s) { return AffineTransform::scaling(s.sx, s.sy); },
      },
      resolve_spec(spec, canvas));
}

Size view_canvas(const TransformSpec& spec, Size canvas) {
  return std::visit(Overloaded{
                        [&](const Crop& c) {
                          return c.rescale ? canvas : Size{c.rect.width(), c.rect.height()};
                        },
                        [&](const Scale& s) {
                          return Size{canvas.width * s.sx, canvas.height * s.sy};
                        },
                        [&](const auto&) { return canvas; },
                    },
                    resolve_spec(spec, canvas));
}

BBox visible_source_region(const TransformSpec& spec, Size canvas) {
  const Size vc = view_canvas(spec, canvas);
  const BBox view_rect{0.0, 0.0, vc.width, vc.height};
  const BBox back = transform_box(view_transform(spec, canvas).inverse(), view_rect);
  return BBox{std::clamp(back.x_min, 0.0, canvas.width),
              std::clamp(back.y_min, 0.0, canvas.height),
              std::clamp(back.x_max, 0.0, canvas.width),
              std::clamp(back.y_max, 0.0, canvas.height)};
}

std::string view_id(const TransformSpec& spec) {
  return std::visit(
      Overloaded{
          [](const Identity&) { return std::string(kIdentityView); },
          [](const HFlip&) { return std::string("hflip"); },
          [](const VFlip&) { return std::string("vflip"); },
          [](const Shift& s) {
            return "shift:" + fmt_number(s.dx) + "," + fmt_number(s.dy) +
                   (s.relative ? ":rel" : "");
          },
          [](const Crop& c) {
            return "crop:" + fmt_number(c.rect.x_min) + "," + fmt_number(c.rect.y_min) +
                   "," + fmt_number(c.rect.x_max) + "," + fmt_number(c.rect.y_max) +
                   (c.relative ? ":rel" : "") + (c.rescale ? ":rescale" : "");
          },
          [](const Scale& s) {
            return "scale:" + fmt_number(s.sx) + "," + fmt_number(s.sy);
          },
      },
      spec);
}

TransformSpec parse_view_id(std::string_view id) {
  const auto parts = split(id, ':');
  const std::string_view kind = parts.front();
  bool relative = false;
  bool rescale = false;
  for (std::size_t i = 2; i < parts.size(); ++i) {
    if (parts[i] == "rel") {
      relative = true;
    } else if (parts[i] == "rescale") {
      rescale = true;
    } else {
      throw ParseError("view id '" + std::string(id) + "': unknown flag '" +
                       std::string(parts[i]) + "'");
    }
  }
  auto no_args = [&](TransformSpec s) -> TransformSpec {
    if (parts.size() != 1) {
      throw ParseError("view id '" + std::string(id) + "' takes no arguments");
    }
    return s;
  };
  if (kind == kIdentityView) return no_args(Identity{});
  if (kind == "hflip") return no_args(HFlip{});
  if (kind == "vflip") return no_args(VFlip{});
  if (parts.size() < 2) {
    throw ParseError("view id '" + std::string(id) + "' is missing its arguments");
  }
  if (kind == "shift") {
    if (rescale) throw ParseError("view id '" + std::string(id) + "': shift has no rescale");
    const auto v = parse_numbers(parts[1], 2, id);
    return Shift{v[0], v[1], relative};
  }
  if (kind == "crop") {
    const auto v = parse_numbers(parts[1], 4, id);
    return Crop{BBox{v[0], v[1], v[2], v[3]}, rescale, relative};
  }
  if (kind == "scale") {
    if (rescale || relative) {
      throw ParseError("view id '" + std::string(id) + "': scale takes no flags");
    }
    const auto v = parse_numbers(parts[1], 2, id);
    return Scale{v[0], v[1]};
  }
  throw ParseError("unknown view id '" + std::string(id) + "'");
}

std::vector<Detection> inverse_map(std::span<const Detection> view_detections,
                                   const TransformSpec& spec, Size canvas,
                                   double min_visible_fraction) {
  const AffineTransform back = view_transform(spec, canvas).inverse();
  const BBox region = visible_source_region(spec, canvas);
  std::vector<Detection> out;
  out.reserve(view_detections.size());
  for (const auto& det : view_detections) {
    const BBox source = transform_box(back, det.bbox);
    const auto visible = clip_box_to(source, region);
    if (!visible || visible->visible_fraction < min_visible_fraction) continue;
    const BBox clamped{std::clamp(source.x_min, 0.0, canvas.width),
                       std::clamp(source.y_min, 0.0, canvas.height),
                       std::clamp(source.x_max, 0.0, canvas.width),
                       std::clamp(source.y_max, 0.0, canvas.height)};
    out.push_back({clamped, det.class_id, det.score});
  }
  return out;
}

std::string merge_name(const MergeStrategy& merge) {
  return std::visit(Overloaded{
                        [](const NmsMerge& m) { return "nms@" + fmt_number(m.iou); },
                        [](const WeightedFusionMerge& m) {
                          return "weighted-fusion@" + fmt_number(m.iou);
                        },
                    },
                    merge);
}

namespace {

std::vector<Detection> weighted_fusion(std::span<const Detection> pooled, double threshold) {
  std::vector<std::size_t> order(pooled.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    return pooled[l].score > pooled[r].score;
  });

  struct Cluster {
    Detection seed;
    std::vector<std::size_t> members;
  };
  std::vector<Cluster> clusters;
  for (std::size_t idx : order) {
    const Detection& det = pooled[idx];
    std::size_t best = clusters.size();
    double best_iou = -1.0;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      if (clusters[c].seed.class_id != det.class_id) continue;
      const double overlap = iou(clusters[c].seed.bbox, det.bbox);
      if (overlap >= threshold && overlap > best_iou) {
        best = c;
        best_iou = overlap;
      }
    }
    if (best == clusters.size()) {
      clusters.push_back({det, {idx}});
    } else {
      clusters[best].members.push_back(idx);
    }
  }

  std::vector<Detection> fused;
  fused.reserve(clusters.size());
  for (const auto& cluster : clusters) {
    double weight = 0.0;
    double score_sum = 0.0;
    BBox acc{0.0, 0.0, 0.0, 0.0};
    for (std::size_t idx : cluster.members) {
      const Detection& d = pooled[idx];
      weight += d.score;
      score_sum += d.score;
      acc.x_min += d.score * d.bbox.x_min;
      acc.y_min += d.score * d.bbox.y_min;
      acc.x_max += d.score * d.bbox.x_max;
      acc.y_max += d.score * d.bbox.y_max;
    }
    const double n = static_cast<double>(cluster.members.size());
    BBox box;
    if (weight > 0.0) {
      box = {acc.x_min / weight, acc.y_min / weight, acc.x_max / weight,
             acc.y_max / weight};
    } else {
      BBox sum{0.0, 0.0, 0.0, 0.0};
      for (std::size_t idx : cluster.members) {
        sum.x_min += pooled[idx].bbox.x_min;
        sum.y_min += pooled[idx].bbox.y_min;
        sum.x_max += pooled[idx].bbox.x_max;
        sum.y_max += pooled[idx].bbox.y_max;
      }
      box = {sum.x_min / n, sum.y_min / n, sum.x_max / n, sum.y_max / n};
    }
    if (cluster.members.size() == 1) box = cluster.seed.bbox;
    fused.push_back({box, cluster.seed.class_id, score_sum / n});
  }
  std::stable_sort(fused.begin(), fused.end(),
                   [](const Detection& l, const Detection& r) { return l.score > r.score; });
  return fused;
}

}  // namespace

std::vector<Detection> fuse(std::span<const Detection> pooled, const MergeStrategy& merge) {
  return std::visit(Overloaded{
                        [&](const NmsMerge& m) { return nms(pooled, m.iou, true); },
                        [&](const WeightedFusionMerge& m) {
                          return weighted_fusion(pooled, m.iou);
                        },
                    },
                    merge);
}

std::vector<TransformSpec> TtaConfig::default_views() {
  return {Identity{}, HFlip{}, Shift{0.05, 0.0, true},
          Crop{BBox{0.05, 0.05, 0.95, 0.95}, true, true}};
}

void TtaConfig::validate() const {
  if (std::none_of(views.begin(), views.end(), [](const TransformSpec& s) {
        return std::holds_alternative<Identity>(s);
      })) {
    throw ValidationError("TTA view set must include the identity view");
  }
  const double merge_iou =
      std::visit([](const auto& m) { return m.iou; }, merge);
  if (!(merge_iou >= 0.0 && merge_iou <= 1.0)) {
    throw ValidationError("merge IoU threshold must lie in [0,1]");
  }
  if (!(min_visible_fraction >= 0.0 && min_visible_fraction <= 1.0)) {
    throw ValidationError("min_visible_fraction must lie in [0,1]");
  }
}

std::vector<Detection> tta_detect(const Detector& detector, const ImageContext& image,
                                  const TtaConfig& config) {
  config.validate();
  std::vector<Detection> pooled;
  for (const auto& spec : config.views) {
    const ViewKey key{image.image_id, view_id(spec)};
    const AffineTransform forward = view_transform(spec, image.canvas);
    const auto in_view =
        detect(detector, image, key, forward, view_canvas(spec, image.canvas));
    const auto mapped = inverse_map(in_view, spec, image.canvas, config.min_visible_fraction);
    pooled.insert(pooled.end(), mapped.begin(), mapped.end());
  }
  return fuse(pooled, config.merge);
}

}  // namespace thermeval
