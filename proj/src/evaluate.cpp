#include "thermeval/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <numeric>
#include <thread>

#include "thermeval/error.hpp"

namespace thermeval {

std::string protocol_name(const Protocol& protocol) {
  switch (protocol.index()) {
    case 0:
      return "ttna";
    case 1:
      return "tta";
    default:
      return "ttme";
  }
}

std::vector<Detection> run_protocol(const Protocol& protocol, const ImageContext& image) {
  if (const auto* p = std::get_if<Ttna>(&protocol)) {
    if (!p->detector) throw ValidationError("TTNA protocol has no detector");
    const ViewKey key{image.image_id, std::string(kIdentityView)};
    return detect(*p->detector, image, key, AffineTransform::identity(), image.canvas);
  }
  if (const auto* p = std::get_if<Tta>(&protocol)) {
    if (!p->detector) throw ValidationError("TTA protocol has no detector");
    return tta_detect(*p->detector, image, p->config);
  }
  return ensemble_detect(std::get<Ttme>(protocol).config, image);
}

namespace {

void check_detections(const std::vector<Detection>& dets, const ClassMap& classes,
                      const std::string& image_id) {
  for (const auto& d : dets) {
    if (!classes.contains(d.class_id)) {
      throw ValidationError("image '" + image_id + "': detection class id " +
                            std::to_string(d.class_id) + " out of range");
    }
    if (!(d.score >= 0.0 && d.score <= 1.0)) {
      throw ValidationError("image '" + image_id + "': detection score outside [0,1]");
    }
    if (!d.bbox.valid()) {
      throw ValidationError("image '" + image_id + "': detection box is not valid");
    }
  }
}

std::vector<std::size_t> id_order(const DatasetManifest& manifest) {
  std::vector<std::size_t> order(manifest.images.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    return manifest.images[l].id < manifest.images[r].id;
  });
  return order;
}

struct Verdicts {
  std::vector<double> scores;
  std::vector<bool> tp;
};

}  // namespace

MetricsReport score_detections(const Dataset& dataset,
                               std::span<const std::vector<Detection>> detections,
                               const EvalConfig& config, std::string protocol) {
  config.validate();
  const auto& manifest = dataset.manifest;
  if (detections.size() != manifest.images.size() ||
      dataset.ground_truth.size() != manifest.images.size()) {
    throw ValidationError("detections, ground truth and manifest differ in image count");
  }
  const std::size_t num_classes = manifest.class_map.size();
  const auto order = id_order(manifest);

  std::vector<ClassMetrics> classes(num_classes);
  std::vector<std::vector<PRPoint>> curves(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    classes[c].class_id = static_cast<int>(c);
    classes[c].name = manifest.class_map.name(static_cast<int>(c));
  }

  // Per class, (score, verdict) pairs in image-id order.
  std::vector<std::vector<std::pair<double, bool>>> verdicts(num_classes);
  for (std::size_t idx : order) {
    const auto& gts = dataset.ground_truth[idx];
    const auto& dets = detections[idx];
    check_detections(dets, manifest.class_map, manifest.images[idx].id);
    const MatchResult m = match_detections(dets, gts, config.iou_threshold);
    for (std::size_t i = 0; i < dets.size(); ++i) {
      verdicts[static_cast<std::size_t>(dets[i].class_id)].emplace_back(
          dets[i].score, m.verdicts[i].true_positive);
    }
    for (const auto& g : gts) {
      if (!manifest.class_map.contains(g.class_id)) {
        throw ValidationError("image '" + manifest.images[idx].id +
                              "': ground-truth class id out of range");
      }
      ++classes[static_cast<std::size_t>(g.class_id)].gt_count;
    }
  }

  MetricsReport report;
  report.protocol = std::move(protocol);
  report.config = config;
  report.images = manifest.images.size();
  std::vector<ClassAp> aps;
  for (std::size_t c = 0; c < num_classes; ++c) {
    auto& cm = classes[c];
    auto& v = verdicts[c];
    cm.detection_count = v.size();
    for (const auto& [score, tp] : v) {
      if (score < config.confidence_threshold) continue;
      (tp ? cm.counts.tp : cm.counts.fp) += 1;
    }
    cm.counts.fn = cm.gt_count - cm.counts.tp;
    const auto pr = precision_recall(cm.counts);
    cm.precision = pr.precision;
    cm.recall = pr.recall;

    std::stable_sort(v.begin(), v.end(),
                     [](const auto& l, const auto& r) { return l.first > r.first; });
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (std::size_t i = 0; i < v.size();) {
      const double cutoff = v[i].first;
      for (; i < v.size() && v[i].first == cutoff; ++i) (v[i].second ? tp : fp) += 1;
      const double recall = cm.gt_count > 0
                                ? static_cast<double>(tp) / static_cast<double>(cm.gt_count)
                                : 0.0;
      cm.curve.push_back(
          {cutoff, recall, static_cast<double>(tp) / static_cast<double>(tp + fp)});
    }
    cm.ap = cm.gt_count > 0 ? average_precision(cm.curve, config.ap_mode) : 0.0;
    aps.push_back({cm.class_id, cm.gt_count, cm.ap});
    report.totals += cm.counts;
  }
  const auto overall = precision_recall(report.totals);
  report.precision = overall.precision;
  report.recall = overall.recall;
  if (std::any_of(aps.begin(), aps.end(), [](const ClassAp& a) { return a.gt_count > 0; })) {
    report.map = mean_average_precision(aps);
  }
  report.classes = std::move(classes);
  return report;
}

MetricsReport evaluate(const Dataset& dataset, const Protocol& protocol,
                       const EvalConfig& config, std::size_t threads) {
  config.validate();
  const auto& images = dataset.manifest.images;
  const std::size_t n = images.size();
  if (dataset.ground_truth.size() != n) {
    throw ValidationError("dataset ground truth is not aligned with its manifest");
  }
  const auto order = id_order(dataset.manifest);

  std::vector<std::vector<Detection>> detections(n);
  std::vector<double> latency_ms(n, 0.0);
  std::vector<std::exception_ptr> failures(n);

  auto run_one = [&](std::size_t idx) {
    const auto& entry = images[idx];
    const ImageContext ctx{entry.id, entry.canvas(), dataset.ground_truth[idx]};
    try {
      const auto start = std::chrono::steady_clock::now();
      detections[idx] = run_protocol(protocol, ctx);
      const auto stop = std::chrono::steady_clock::now();
      latency_ms[idx] = std::chrono::duration<double, std::milli>(stop - start).count();
    } catch (const Error& e) {
      try {
        rethrow_with_context(e, "image '" + entry.id + "'");
      } catch (...) {
        failures[idx] = std::current_exception();
      }
    } catch (...) {
      failures[idx] = std::current_exception();
    }
  };

  const std::size_t workers = std::min(std::max<std::size_t>(threads, 1), n);
  if (workers <= 1) {
    for (std::size_t idx : order) {
      run_one(idx);
      if (failures[idx]) std::rethrow_exception(failures[idx]);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    {
      std::vector<std::jthread> pool;
      pool.reserve(workers);
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
          for (std::size_t k = next++; k < n && !stop; k = next++) {
            run_one(order[k]);
            if (failures[order[k]]) stop = true;
          }
        });
      }
    }
    for (std::size_t idx : order) {
      if (failures[idx]) std::rethrow_exception(failures[idx]);
    }
  }

  MetricsReport report =
      score_detections(dataset, detections, config, protocol_name(protocol));
  report.latency = summarize_latencies(latency_ms);
  return report;
}

}  // namespace thermeval
