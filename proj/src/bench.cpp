#include "thermeval/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <sstream>

#include "json.hpp"

namespace thermeval {

double steady_clock_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

void BenchOptions::validate() const {
  if (iterations < 1) throw ValidationError("benchmark needs at least one iteration");
  if (!clock) throw ValidationError("benchmark clock is not set");
}

namespace {

template <class Call>
BenchResult run_bench(std::span<const ImageContext> images, const BenchOptions& options,
                      Call&& call) {
  options.validate();
  if (images.empty()) throw ValidationError("benchmark needs at least one image");
  for (std::size_t w = 0; w < options.warmup; ++w) {
    for (const auto& image : images) call(image);
  }

  std::vector<double> samples;
  samples.reserve(options.iterations * images.size());
  const double loop_start = options.clock();
  for (std::size_t it = 0; it < options.iterations; ++it) {
    for (const auto& image : images) {
      const double start = options.clock();
      try {
        call(image);
      } catch (const std::exception& e) {
        const LatencyStats partial = summarize_latencies(samples);
        throw BenchError("benchmark aborted after " + std::to_string(samples.size()) +
                             " timed calls (mean " + std::to_string(partial.mean_ms) +
                             " ms) on image '" + image.image_id + "': " + e.what(),
                         partial);
      }
      samples.push_back(options.clock() - start);
    }
  }
  const double loop_ms = options.clock() - loop_start;

  BenchResult result;
  result.latency = summarize_latencies(samples);
  if (loop_ms > 0.0) {
    result.throughput_ips = static_cast<double>(samples.size()) * 1000.0 / loop_ms;
  }
  return result;
}

}  // namespace

BenchResult bench_detector(const Detector& detector, std::span<const ImageContext> images,
                           const BenchOptions& options) {
  return run_bench(images, options, [&](const ImageContext& image) {
    detect(detector, image, ViewKey{image.image_id, std::string(kIdentityView)},
           AffineTransform::identity(), image.canvas);
  });
}

BenchResult bench_protocol(const Protocol& protocol, std::span<const ImageContext> images,
                           const BenchOptions& options) {
  return run_bench(images, options,
                   [&](const ImageContext& image) { run_protocol(protocol, image); });
}

std::vector<ImageContext> image_contexts(const Dataset& dataset) {
  std::vector<ImageContext> out;
  out.reserve(dataset.manifest.images.size());
  for (std::size_t i = 0; i < dataset.manifest.images.size(); ++i) {
    const auto& e = dataset.manifest.images[i];
    out.push_back({e.id, e.canvas(), dataset.ground_truth[i]});
  }
  return out;
}

ModeComparison compare_modes(const Dataset& dataset, std::span<const ModeRun> runs,
                             const EvalConfig& config, const BenchOptions& options) {
  if (runs.empty()) throw ValidationError("compare_modes needs at least one run");
  const auto contexts = image_contexts(dataset);
  ModeComparison cmp;
  for (const auto& run : runs) {
    const MetricsReport report = evaluate(dataset, run.protocol, config, 1);
    ModeRow row;
    row.mode = protocol_name(run.protocol);
    row.detector = run.detector;
    row.precision = report.precision;
    row.recall = report.recall;
    row.map = report.map;
    row.bench = bench_protocol(run.protocol, contexts, options);
    cmp.rows.push_back(std::move(row));
  }

  double best_p = 0.0;
  double best_r = 0.0;
  double best_m = -1.0;
  double best_lat = cmp.rows.front().bench.latency.mean_ms;
  for (const auto& r : cmp.rows) {
    best_p = std::max(best_p, r.precision);
    best_r = std::max(best_r, r.recall);
    if (r.map) best_m = std::max(best_m, *r.map);
    best_lat = std::min(best_lat, r.bench.latency.mean_ms);
  }
  for (auto& r : cmp.rows) {
    r.best_precision = r.precision == best_p;
    r.best_recall = r.recall == best_r;
    r.best_map = r.map && *r.map == best_m;
    r.best_latency = r.bench.latency.mean_ms == best_lat;
  }
  return cmp;
}

namespace {

nlohmann::ordered_json latency_json(const BenchResult& b) {
  return {{"n", b.latency.n},
          {"mean_ms", b.latency.mean_ms},
          {"median_ms", b.latency.median_ms},
          {"p95_ms", b.latency.p95_ms},
          {"fps", b.latency.fps},
          {"throughput_ips", b.throughput_ips}};
}

std::string fixed(double v, bool best) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%s", v, best ? "*" : "");
  return buf;
}

}  // namespace

std::string format_comparison(const ModeComparison& comparison, bool as_json) {
  if (as_json) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& r : comparison.rows) {
      nlohmann::ordered_json j;
      j["mode"] = r.mode;
      j["detector"] = r.detector;
      j["precision"] = r.precision;
      j["recall"] = r.recall;
      j["map"] = r.map ? nlohmann::ordered_json(*r.map * 100.0) : nlohmann::ordered_json();
      j["latency"] = latency_json(r.bench);
      j["best"] = {{"precision", r.best_precision},
                   {"recall", r.best_recall},
                   {"map", r.best_map},
                   {"latency", r.best_latency}};
      rows.push_back(std::move(j));
    }
    return nlohmann::ordered_json{{"rows", rows}}.dump(2) + "\n";
  }
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-6s %-16s %10s %10s %10s %12s %10s\n", "mode", "detector",
                "P%", "R%", "mAP%", "latency_ms", "fps");
  out << line;
  for (const auto& r : comparison.rows) {
    std::snprintf(line, sizeof(line), "%-6s %-16s %10s %10s %10s %12s %10.2f\n",
                  r.mode.c_str(), r.detector.c_str(), fixed(r.precision, r.best_precision).c_str(),
                  fixed(r.recall, r.best_recall).c_str(),
                  r.map ? fixed(*r.map * 100.0, r.best_map).c_str() : "-",
                  fixed(r.bench.latency.mean_ms, r.best_latency).c_str(), r.bench.latency.fps);
    out << line;
  }
  out << "* best value per column; latency is detect() time only\n";
  return out.str();
}

std::string format_bench(const std::string& name, const BenchResult& result, bool as_json) {
  if (as_json) {
    nlohmann::ordered_json j;
    j["detector"] = name;
    j["latency"] = latency_json(result);
    return j.dump(2) + "\n";
  }
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%s: n=%zu mean=%.3f ms median=%.3f ms p95=%.3f ms fps=%.2f "
                "throughput=%.2f img/s\n",
                name.c_str(), result.latency.n, result.latency.mean_ms, result.latency.median_ms,
                result.latency.p95_ms, result.latency.fps, result.throughput_ips);
  return buf;
}

}  // namespace thermeval
