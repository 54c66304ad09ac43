#include "thermeval/augment.hpp"

#include <algorithm>
#include <cmath>

#include "thermeval/error.hpp"
#include "thermeval/rng.hpp"

namespace thermeval {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::optional<TransformSpec> as_view_spec(const AugmentSpec& spec) {
  return std::visit(Overloaded{
                        [](const Rotation&) -> std::optional<TransformSpec> {
                          return std::nullopt;
                        },
                        [](const Shear&) -> std::optional<TransformSpec> {
                          return std::nullopt;
                        },
                        [](const auto& s) -> std::optional<TransformSpec> { return s; },
                    },
                    spec);
}

int to_pixels(double extent) {
  const auto px = static_cast<int>(std::lround(extent));
  if (px <= 0) throw ValidationError("augmented canvas would be empty");
  return px;
}

// Nearest-neighbor resampling: output pixel (x, y) reads the source pixel
// containing inverse(x + 0.5, y + 0.5); outside reads as 0.
void resample_into(const GrayImage& src, const AffineTransform& inverse, const BBox& region,
                   GrayImage& dst) {
  const int x0 = std::max(0, static_cast<int>(std::floor(region.x_min)));
  const int y0 = std::max(0, static_cast<int>(std::floor(region.y_min)));
  const int x1 = std::min(dst.width, static_cast<int>(std::ceil(region.x_max)));
  const int y1 = std::min(dst.height, static_cast<int>(std::ceil(region.y_max)));
  for (int y = y0; y < y1; ++y) {
    const double cy = y + 0.5;
    if (cy < region.y_min || cy >= region.y_max) continue;
    for (int x = x0; x < x1; ++x) {
      const double cx = x + 0.5;
      if (cx < region.x_min || cx >= region.x_max) continue;
      const Point p = inverse.apply({cx, cy});
      const double fx = std::floor(p.x);
      const double fy = std::floor(p.y);
      std::uint8_t value = 0;
      if (fx >= 0.0 && fy >= 0.0 && fx < src.width && fy < src.height) {
        value = src.at(static_cast<int>(fx), static_cast<int>(fy));
      }
      dst.pixels[static_cast<std::size_t>(y) * dst.width + x] = value;
    }
  }
}

}  // namespace

AugmentSpec to_augment_spec(const TransformSpec& spec) {
  return std::visit([](const auto& s) -> AugmentSpec { return s; }, spec);
}

void LabeledSample::validate() const {
  if (width <= 0 || height <= 0) {
    throw ValidationError("sample '" + image_id + "' needs a positive canvas");
  }
  for (const auto& b : boxes) {
    if (!b.bbox.valid() || b.bbox.x_min < 0.0 || b.bbox.y_min < 0.0 ||
        b.bbox.x_max > width || b.bbox.y_max > height) {
      throw ValidationError("sample '" + image_id + "' has a box outside its canvas");
    }
  }
  if (pixels && (pixels->width != width || pixels->height != height ||
                 pixels->pixels.size() != static_cast<std::size_t>(width) * height)) {
    throw ValidationError("sample '" + image_id + "' raster does not match its canvas");
  }
}

AffineTransform augment_transform(const AugmentSpec& spec, Size canvas) {
  if (auto view = as_view_spec(spec)) return view_transform(*view, canvas);
  const double cx = canvas.width / 2.0;
  const double cy = canvas.height / 2.0;
  if (const auto* r = std::get_if<Rotation>(&spec)) {
    if (!std::isfinite(r->degrees)) throw ValidationError("rotation angle must be finite");
    return AffineTransform::rotation(r->degrees, cx, cy);
  }
  const auto& s = std::get<Shear>(spec);
  if (!(std::abs(s.ax_degrees) < 90.0 && std::abs(s.ay_degrees) < 90.0)) {
    throw ValidationError("shear angles must lie in (-90, 90) degrees");
  }
  return AffineTransform::shear(s.ax_degrees, s.ay_degrees, cx, cy);
}

Size augment_canvas(const AugmentSpec& spec, Size canvas) {
  if (auto view = as_view_spec(spec)) return view_canvas(*view, canvas);
  return canvas;
}

AugmentResult apply_labeled(const LabeledSample& sample, const AugmentSpec& spec,
                            double min_visible_fraction) {
  sample.validate();
  if (!(min_visible_fraction > 0.0 && min_visible_fraction <= 1.0)) {
    throw ValidationError("min_visible_fraction must lie in (0,1]");
  }
  const AffineTransform t = augment_transform(spec, sample.canvas());
  const Size out_canvas = augment_canvas(spec, sample.canvas());

  AugmentResult result;
  result.sample.image_id = sample.image_id;
  result.sample.width = to_pixels(out_canvas.width);
  result.sample.height = to_pixels(out_canvas.height);
  const double w = result.sample.width;
  const double h = result.sample.height;

  for (std::size_t i = 0; i < sample.boxes.size(); ++i) {
    const auto& gt = sample.boxes[i];
    const auto clipped = clip_box(transform_box(t, gt.bbox), w, h);
    const double fraction = clipped ? clipped->visible_fraction : 0.0;
    if (!clipped || fraction < min_visible_fraction) {
      result.dropped.push_back({0, i, gt.class_id, fraction});
      continue;
    }
    result.sample.boxes.push_back({clipped->box, gt.class_id});
    result.origins.push_back({0, i});
  }

  if (sample.pixels) {
    GrayImage out{result.sample.width, result.sample.height, {}};
    out.pixels.assign(static_cast<std::size_t>(out.width) * out.height, 0);
    resample_into(*sample.pixels, t.inverse(), BBox{0.0, 0.0, w, h}, out);
    result.sample.pixels = std::move(out);
  }
  return result;
}

AugmentResult augment_random(const LabeledSample& sample, const AugmentPolicy& policy,
                             std::uint64_t seed) {
  Xoshiro256 rng(seed);
  std::vector<AugmentSpec> steps;
  if (rng.uniform() < policy.flip_probability) steps.push_back(HFlip{});
  steps.push_back(Rotation{rng.uniform(-policy.max_rotation_degrees,
                                       policy.max_rotation_degrees)});
  steps.push_back(Shear{rng.uniform(-policy.max_shear_degrees, policy.max_shear_degrees),
                        rng.uniform(-policy.max_shear_degrees, policy.max_shear_degrees)});
  steps.push_back(Shift{
      rng.uniform(-policy.max_translation_fraction, policy.max_translation_fraction) *
          sample.width,
      rng.uniform(-policy.max_translation_fraction, policy.max_translation_fraction) *
          sample.height,
      false});

  AugmentResult acc{sample, {}, {}};
  for (std::size_t i = 0; i < sample.boxes.size(); ++i) acc.origins.push_back({0, i});
  for (const auto& step : steps) {
    AugmentResult next = apply_labeled(acc.sample, step, policy.min_visible_fraction);
    // Re-express origins and drops in terms of the original sample.
    for (auto& o : next.origins) o = acc.origins[o.box];
    for (auto& d : next.dropped) {
      const BoxOrigin origin = acc.origins[d.box];
      d.sample = origin.sample;
      d.box = origin.box;
    }
    next.dropped.insert(next.dropped.begin(), acc.dropped.begin(), acc.dropped.end());
    acc = std::move(next);
  }
  return acc;
}

void MosaicParams::validate() const {
  if (size <= 0) throw ValidationError("mosaic size must be positive");
  if (!(min_visible_fraction > 0.0 && min_visible_fraction <= 1.0)) {
    throw ValidationError("mosaic min_visible_fraction must lie in (0,1]");
  }
  if (!(clamp_lo > 0.0 && clamp_lo <= clamp_hi && clamp_hi < 1.0)) {
    throw ValidationError("mosaic clamp region must satisfy 0 < lo <= hi < 1");
  }
  if (!std::isfinite(pivot_x) || !std::isfinite(pivot_y)) {
    throw ValidationError("mosaic pivot must be finite");
  }
}

Point effective_pivot(const MosaicParams& params) {
  const double lo = params.clamp_lo * params.size;
  const double hi = params.clamp_hi * params.size;
  return {std::clamp(params.pivot_x, lo, hi), std::clamp(params.pivot_y, lo, hi)};
}

std::array<BBox, 4> mosaic_quadrants(int size, Point pivot) {
  const double s = size;
  return {BBox{0.0, 0.0, pivot.x, pivot.y}, BBox{pivot.x, 0.0, s, pivot.y},
          BBox{0.0, pivot.y, pivot.x, s}, BBox{pivot.x, pivot.y, s, s}};
}

MosaicParams random_mosaic_params(int size, std::uint64_t seed,
                                  double min_visible_fraction) {
  MosaicParams params;
  params.size = size;
  params.min_visible_fraction = min_visible_fraction;
  Xoshiro256 rng(seed);
  params.pivot_x = rng.uniform(params.clamp_lo * size, params.clamp_hi * size);
  params.pivot_y = rng.uniform(params.clamp_lo * size, params.clamp_hi * size);
  return params;
}

AugmentResult mosaic(std::span<const LabeledSample> samples, const MosaicParams& params) {
  if (samples.size() != 4) {
    throw ValidationError("mosaic needs exactly 4 samples, got " +
                          std::to_string(samples.size()));
  }
  params.validate();
  for (const auto& s : samples) {
    if (s.width <= 0 || s.height <= 0) {
      throw ValidationError("mosaic sample '" + s.image_id + "' needs a positive canvas");
    }
  }
  const Point pivot = effective_pivot(params);
  const auto quads = mosaic_quadrants(params.size, pivot);

  AugmentResult result;
  result.sample.image_id = "mosaic";
  result.sample.width = params.size;
  result.sample.height = params.size;

  std::array<AffineTransform, 4> maps;
  for (std::size_t q = 0; q < 4; ++q) {
    const auto& s = samples[q];
    const auto& rect = quads[q];
    const double sx = rect.width() / s.width;
    const double sy = rect.height() / s.height;
    maps[q] = AffineTransform(sx, 0.0, rect.x_min, 0.0, sy, rect.y_min);
    for (std::size_t i = 0; i < s.boxes.size(); ++i) {
      const auto& gt = s.boxes[i];
      const auto clipped = clip_box_to(transform_box(maps[q], gt.bbox), rect);
      const double fraction = clipped ? clipped->visible_fraction : 0.0;
      if (!clipped || fraction < params.min_visible_fraction) {
        result.dropped.push_back({q, i, gt.class_id, fraction});
        continue;
      }
      result.sample.boxes.push_back({clipped->box, gt.class_id});
      result.origins.push_back({q, i});
    }
  }

  const bool all_rasters = std::all_of(samples.begin(), samples.end(),
                                       [](const LabeledSample& s) { return s.pixels.has_value(); });
  if (all_rasters) {
    GrayImage out{params.size, params.size, {}};
    out.pixels.assign(static_cast<std::size_t>(params.size) * params.size, 0);
    for (std::size_t q = 0; q < 4; ++q) {
      const auto& raster = *samples[q].pixels;
      if (raster.width != samples[q].width || raster.height != samples[q].height) {
        throw ValidationError("mosaic sample '" + samples[q].image_id +
                              "' raster does not match its canvas");
      }
      resample_into(raster, maps[q].inverse(), quads[q], out);
    }
    result.sample.pixels = std::move(out);
  }
  return result;
}

}  // namespace thermeval
