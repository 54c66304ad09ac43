#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "thermeval/formats.hpp"
#include "thermeval/geometry.hpp"

namespace thermeval {

/// Identifies one view of one image. `view_id` is "identity" or the
/// fingerprint of a TransformSpec (see tta.hpp).
struct ViewKey {
  std::string image_id;
  std::string view_id = std::string(kIdentityView);

  bool operator==(const ViewKey&) const = default;
  auto operator<=>(const ViewKey&) const = default;
};

/// What a detector may look at for one image. Mock detectors read the
/// ground truth; replay detectors only use the id.
struct ImageContext {
  std::string image_id;
  Size canvas;
  std::span<const GroundTruthBox> ground_truth;
};

/// Uniform inference interface. Implementations are immutable after
/// construction and detect() may be called concurrently.
class Detector {
 public:
  virtual ~Detector() = default;

  virtual std::string name() const = 0;
  /// Whether views other than identity can be served at all.
  virtual bool supports_transformed_views() const = 0;
  virtual bool supports_view(const std::string& view_id) const = 0;

  /// Detections in the view's coordinate frame. `view_transform` maps the
  /// source image into the view; `view_canvas` is the view's extent.
  virtual std::vector<Detection> detect(const ImageContext& image, const ViewKey& view,
                                        const AffineTransform& view_transform,
                                        Size view_canvas) const = 0;
};

using DetectorPtr = std::shared_ptr<Detector>;

/// Checks capability, then calls detector.detect. Throws CapabilityError
/// for views the detector cannot serve.
std::vector<Detection> detect(const Detector& detector, const ImageContext& image,
                              const ViewKey& view, const AffineTransform& view_transform,
                              Size view_canvas);

/// Replays stored detection records keyed by (image_id, view_id).
class FileDetector final : public Detector {
 public:
  /// `known_images` is the set of image ids the store answers for; an image
  /// in that set with no records yields no detections. When empty, the ids
  /// present in `records` are used.
  FileDetector(std::string name, std::span<const DetectionRecord> records,
               std::set<std::string> known_images = {});

  std::string name() const override { return name_; }
  bool supports_transformed_views() const override;
  bool supports_view(const std::string& view_id) const override;
  std::vector<Detection> detect(const ImageContext& image, const ViewKey& view,
                                const AffineTransform& view_transform,
                                Size view_canvas) const override;

  const std::set<std::string>& views() const noexcept { return views_; }

 private:
  std::string name_;
  std::map<ViewKey, std::vector<Detection>> store_;
  std::set<std::string> views_;
  std::set<std::string> images_;
};

/// Noise model of the seeded mock detector.
struct MockNoise {
  double p_miss = 0.0;        // per box per view
  double jitter_sigma = 0.0;  // pixels, per corner coordinate
  double fp_rate = 0.0;       // Poisson mean of false positives per view
  double score_lo = 1.0;      // matched-box score range
  double score_hi = 1.0;
  double fp_score_lo = 0.0;   // false-positive score range
  double fp_score_hi = 0.5;
  int fp_classes = 7;         // false-positive class drawn from [0, fp_classes)
  std::uint64_t global_seed = 0;

  /// Throws ValidationError on out-of-range parameters.
  void validate() const;
};

/// Draw order, per view, from Xoshiro256(view_seed(global_seed, image, view)):
///  1. one uniform per input box, in input order: missed when u < p_miss;
///  2. per surviving box: four normals (x_min, y_min, x_max, y_max jitter)
///     then one uniform for the score;
///  3. one Poisson draw for the false-positive count, then per false
///     positive four uniforms (x_a, y_a, x_b, y_b as fractions of the view
///     canvas), one uniform for the score and one uniform for the class.
/// Jittered boxes are re-normalized so min <= max and clipped to the view
/// canvas; boxes left without area are dropped. With jitter_sigma == 0 the
/// mapped ground-truth box is emitted unclipped.
std::vector<Detection> mock_detect(std::span<const GroundTruthBox> ground_truth,
                                   const AffineTransform& view_transform,
                                   Size view_canvas, const MockNoise& noise,
                                   const ViewKey& view);

class MockDetector final : public Detector {
 public:
  MockDetector(std::string name, MockNoise noise);

  std::string name() const override { return name_; }
  bool supports_transformed_views() const override { return true; }
  bool supports_view(const std::string&) const override { return true; }
  std::vector<Detection> detect(const ImageContext& image, const ViewKey& view,
                                const AffineTransform& view_transform,
                                Size view_canvas) const override;

  const MockNoise& noise() const noexcept { return noise_; }

 private:
  std::string name_;
  MockNoise noise_;
};

/// Decorator that sleeps a fixed time per detect() call before delegating.
/// Used as the constant-cost stub in latency measurements.
class ConstantCostDetector final : public Detector {
 public:
  ConstantCostDetector(DetectorPtr inner, std::chrono::microseconds cost);

  std::string name() const override { return inner_->name(); }
  bool supports_transformed_views() const override {
    return inner_->supports_transformed_views();
  }
  bool supports_view(const std::string& view_id) const override {
    return inner_->supports_view(view_id);
  }
  std::vector<Detection> detect(const ImageContext& image, const ViewKey& view,
                                const AffineTransform& view_transform,
                                Size view_canvas) const override;

 private:
  DetectorPtr inner_;
  std::chrono::microseconds cost_;
};

}  // namespace thermeval
