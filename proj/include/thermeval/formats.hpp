#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "thermeval/geometry.hpp"

namespace thermeval {

inline constexpr std::string_view kIdentityView = "identity";

/// Ordered class names; a class id is its position.
class ClassMap {
 public:
  ClassMap() = default;
  /// Throws ValidationError on empty or duplicate names.
  explicit ClassMap(std::vector<std::string> names);

  /// bicycle, bike, bus, car, dog, person, pole.
  static ClassMap thermal_default();

  std::size_t size() const noexcept { return names_.size(); }
  bool contains(int class_id) const noexcept {
    return class_id >= 0 && static_cast<std::size_t>(class_id) < names_.size();
  }
  const std::string& name(int class_id) const;
  std::optional<int> id_of(std::string_view name) const;
  const std::vector<std::string>& names() const noexcept { return names_; }

  bool operator==(const ClassMap&) const = default;

 private:
  std::vector<std::string> names_;
};

struct ImageEntry {
  std::string id;
  int width = 0;
  int height = 0;
  std::optional<std::filesystem::path> label_path;
  std::optional<std::filesystem::path> image_path;
  std::vector<std::string> tags;

  Size canvas() const noexcept {
    return {static_cast<double>(width), static_cast<double>(height)};
  }
};

struct DatasetManifest {
  ClassMap class_map = ClassMap::thermal_default();
  std::vector<ImageEntry> images;
  /// Directory that relative label/image paths resolve against.
  std::filesystem::path base_dir;

  const ImageEntry* find(std::string_view image_id) const noexcept;
  std::filesystem::path resolve(const std::filesystem::path& p) const;
};

/// Parses the manifest document: {"classes": [...], "images": [{"id",
/// "width", "height", "labels"?, "image"?, "tags"?}]}.
DatasetManifest parse_manifest(std::string_view text,
                               std::filesystem::path base_dir = {});
DatasetManifest load_manifest(const std::filesystem::path& path);
std::string write_manifest(const DatasetManifest& manifest);

/// One "class_id x_center y_center width height" line per box, normalized.
/// Values outside [0,1] by at most 1e-6 are clamped; boxes are clipped to
/// the canvas.
std::vector<GroundTruthBox> parse_label_file(std::string_view text,
                                             int image_width, int image_height,
                                             const ClassMap& class_map);
std::string write_label_file(std::span<const GroundTruthBox> boxes,
                             int image_width, int image_height);

/// Ground truth of one manifest entry (empty when it has no label file).
std::vector<GroundTruthBox> load_labels(const DatasetManifest& manifest,
                                        const ImageEntry& entry);

/// Manifest plus parsed ground truth, index-aligned with manifest.images.
struct Dataset {
  DatasetManifest manifest;
  std::vector<std::vector<GroundTruthBox>> ground_truth;
};

Dataset load_dataset(DatasetManifest manifest);

struct DetectionRecord {
  std::string image_id;
  std::string view_id = std::string(kIdentityView);
  int class_id = 0;
  double score = 0.0;
  BBox bbox;

  Detection detection() const { return {bbox, class_id, score}; }
  bool operator==(const DetectionRecord&) const = default;
};

/// JSON Lines, one record per line:
/// {"image_id": str, "class_id": int, "score": float, "bbox": [x0,y0,x1,y1],
///  "view_id": str (optional, default "identity")}.
/// When `manifest` is given, unknown image ids and class ids are errors.
std::vector<DetectionRecord> read_detections(std::istream& in,
                                             const DatasetManifest* manifest);
std::vector<DetectionRecord> load_detections(const std::filesystem::path& path,
                                             const DatasetManifest* manifest);
void write_detections(std::ostream& out, std::span<const DetectionRecord> records);

struct ClassDistribution {
  std::vector<std::string> class_names;
  std::vector<std::size_t> counts;
  std::size_t total = 0;
};

ClassDistribution class_distribution(const DatasetManifest& manifest);

/// 8-bit grayscale raster, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  bool operator==(const GrayImage&) const = default;
};

/// Binary PGM (P5, maxval <= 255).
GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage& image);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace thermeval
