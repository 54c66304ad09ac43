// Synthetic datasets shared by the unit and acceptance tests.
#pragma once

#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "thermeval/formats.hpp"
#include "thermeval/geometry.hpp"

namespace testutil {

inline std::string image_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "img_%04zu", i);
  return buf;
}

/// `images` canvases of 640x512, each with `boxes` pairwise disjoint ground
/// truth boxes of random class, drawn from std::mt19937_64(seed).
inline thermeval::Dataset synthetic_dataset(std::size_t images, std::size_t boxes,
                                            std::uint64_t seed, int classes = 7) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> side(24.0, 96.0);
  std::uniform_int_distribution<int> cls(0, classes - 1);
  thermeval::Dataset ds;
  if (classes != 7) {
    std::vector<std::string> names;
    for (int c = 0; c < classes; ++c) names.push_back("c" + std::to_string(c));
    ds.manifest.class_map = thermeval::ClassMap(names);
  }
  for (std::size_t i = 0; i < images; ++i) {
    thermeval::ImageEntry e;
    e.id = image_name(i);
    e.width = 640;
    e.height = 512;
    ds.manifest.images.push_back(e);
    std::vector<thermeval::GroundTruthBox> gts;
    std::size_t attempts = 0;
    while (gts.size() < boxes && attempts++ < 10000) {
      const double w = side(gen);
      const double h = side(gen);
      std::uniform_real_distribution<double> px(0.0, 640.0 - w);
      std::uniform_real_distribution<double> py(0.0, 512.0 - h);
      const double x = px(gen);
      const double y = py(gen);
      const thermeval::BBox b{x, y, x + w, y + h};
      bool clear = true;
      for (const auto& g : gts) {
        if (b.x_min < g.bbox.x_max && g.bbox.x_min < b.x_max && b.y_min < g.bbox.y_max &&
            g.bbox.y_min < b.y_max) {
          clear = false;
          break;
        }
      }
      if (clear) gts.push_back({b, cls(gen)});
    }
    ds.ground_truth.push_back(std::move(gts));
  }
  return ds;
}

}  // namespace testutil

#include <filesystem>

#include "thermeval/error.hpp"

namespace testutil {

/// Writes `ds` as manifest.json plus one label file per image under `dir`.
/// Returns the manifest path.
inline std::filesystem::path write_dataset(const thermeval::Dataset& ds,
                                           const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "labels");
  thermeval::DatasetManifest m = ds.manifest;
  for (std::size_t i = 0; i < m.images.size(); ++i) {
    const fs::path rel = fs::path("labels") / (m.images[i].id + ".txt");
    m.images[i].label_path = rel;
    thermeval::write_text_file(
        dir / rel, thermeval::write_label_file(ds.ground_truth[i], m.images[i].width,
                                               m.images[i].height));
  }
  thermeval::write_text_file(dir / "manifest.json", thermeval::write_manifest(m));
  return dir / "manifest.json";
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("thermeval_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil
