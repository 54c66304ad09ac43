#include "thermeval/detector.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "thermeval/error.hpp"
#include "thermeval/rng.hpp"

namespace thermeval {

std::vector<Detection> detect(const Detector& detector, const ImageContext& image,
                              const ViewKey& view, const AffineTransform& view_transform,
                              Size view_canvas) {
  const bool transformed = view.view_id != kIdentityView;
  if ((transformed && !detector.supports_transformed_views()) ||
      !detector.supports_view(view.view_id)) {
    throw CapabilityError("detector '" + detector.name() + "' cannot serve view '" +
                          view.view_id + "'");
  }
  return detector.detect(image, view, view_transform, view_canvas);
}

FileDetector::FileDetector(std::string name, std::span<const DetectionRecord> records,
                           std::set<std::string> known_images)
    : name_(std::move(name)), images_(std::move(known_images)) {
  views_.insert(std::string(kIdentityView));
  const bool collect_images = images_.empty();
  for (const auto& rec : records) {
    store_[ViewKey{rec.image_id, rec.view_id}].push_back(rec.detection());
    views_.insert(rec.view_id);
    if (collect_images) images_.insert(rec.image_id);
  }
}

bool FileDetector::supports_transformed_views() const { return views_.size() > 1; }

bool FileDetector::supports_view(const std::string& view_id) const {
  return views_.contains(view_id);
}

std::vector<Detection> FileDetector::detect(const ImageContext& image, const ViewKey& view,
                                            const AffineTransform&, Size) const {
  if (!views_.contains(view.view_id)) {
    throw CapabilityError("detection store '" + name_ + "' has no records for view '" +
                          view.view_id + "'");
  }
  if (!images_.contains(view.image_id)) {
    throw LookupError("detection store '" + name_ + "' has no entry for image '" +
                      view.image_id + "'");
  }
  (void)image;
  const auto it = store_.find(view);
  if (it == store_.end()) return {};
  return it->second;
}

void MockNoise::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) throw ValidationError(std::string("mock noise: ") + what);
  };
  check(p_miss >= 0.0 && p_miss <= 1.0, "p_miss must lie in [0,1]");
  check(std::isfinite(jitter_sigma) && jitter_sigma >= 0.0,
        "jitter_sigma must be finite and non-negative");
  check(std::isfinite(fp_rate) && fp_rate >= 0.0, "fp_rate must be finite and non-negative");
  check(score_lo >= 0.0 && score_lo <= score_hi && score_hi <= 1.0,
        "score range must satisfy 0 <= lo <= hi <= 1");
  check(fp_score_lo >= 0.0 && fp_score_lo <= fp_score_hi && fp_score_hi <= 1.0,
        "false-positive score range must satisfy 0 <= lo <= hi <= 1");
  check(fp_classes >= 1, "fp_classes must be at least 1");
}

std::vector<Detection> mock_detect(std::span<const GroundTruthBox> ground_truth,
                                   const AffineTransform& view_transform,
                                   Size view_canvas, const MockNoise& noise,
                                   const ViewKey& view) {
  Xoshiro256 rng(view_seed(noise.global_seed, view.image_id, view.view_id));

  std::vector<bool> missed(ground_truth.size());
  for (std::size_t i = 0; i < ground_truth.size(); ++i) {
    missed[i] = rng.uniform() < noise.p_miss;
  }

  std::vector<Detection> out;
  const bool jitter = noise.jitter_sigma > 0.0;
  for (std::size_t i = 0; i < ground_truth.size(); ++i) {
    if (missed[i]) continue;
    const BBox mapped = transform_box(view_transform, ground_truth[i].bbox);
    const double x0 = mapped.x_min + rng.normal(0.0, noise.jitter_sigma);
    const double y0 = mapped.y_min + rng.normal(0.0, noise.jitter_sigma);
    const double x1 = mapped.x_max + rng.normal(0.0, noise.jitter_sigma);
    const double y1 = mapped.y_max + rng.normal(0.0, noise.jitter_sigma);
    const double score = rng.uniform(noise.score_lo, noise.score_hi);
    BBox box = mapped;
    if (jitter) {
      const BBox jittered{std::min(x0, x1), std::min(y0, y1), std::max(x0, x1),
                          std::max(y0, y1)};
      const auto clipped = clip_box(jittered, view_canvas.width, view_canvas.height);
      if (!clipped) continue;
      box = clipped->box;
    }
    out.push_back({box, ground_truth[i].class_id, score});
  }

  const std::uint64_t fp_count = rng.poisson(noise.fp_rate);
  for (std::uint64_t k = 0; k < fp_count; ++k) {
    const double xa = rng.uniform() * view_canvas.width;
    const double ya = rng.uniform() * view_canvas.height;
    const double xb = rng.uniform() * view_canvas.width;
    const double yb = rng.uniform() * view_canvas.height;
    const double score = rng.uniform(noise.fp_score_lo, noise.fp_score_hi);
    const int cls = std::min(static_cast<int>(rng.uniform() * noise.fp_classes),
                             noise.fp_classes - 1);
    out.push_back({BBox{std::min(xa, xb), std::min(ya, yb), std::max(xa, xb),
                        std::max(ya, yb)},
                   cls, score});
  }
  return out;
}

MockDetector::MockDetector(std::string name, MockNoise noise)
    : name_(std::move(name)), noise_(noise) {
  noise_.validate();
}

std::vector<Detection> MockDetector::detect(const ImageContext& image, const ViewKey& view,
                                            const AffineTransform& view_transform,
                                            Size view_canvas) const {
  return mock_detect(image.ground_truth, view_transform, view_canvas, noise_, view);
}

ConstantCostDetector::ConstantCostDetector(DetectorPtr inner, std::chrono::microseconds cost)
    : inner_(std::move(inner)), cost_(cost) {
  if (!inner_) throw ValidationError("constant-cost stub needs an inner detector");
  if (cost_.count() < 0) throw ValidationError("constant-cost stub needs a non-negative cost");
}

std::vector<Detection> ConstantCostDetector::detect(const ImageContext& image,
                                                    const ViewKey& view,
                                                    const AffineTransform& view_transform,
                                                    Size view_canvas) const {
  if (cost_.count() > 0) std::this_thread::sleep_for(cost_);
  return inner_->detect(image, view, view_transform, view_canvas);
}

}  // namespace thermeval
