#include "thermeval/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "thermeval/error.hpp"

namespace thermeval {

void EvalConfig::validate() const {
  if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0)) {
    throw ValidationError("IoU threshold must lie in [0,1]");
  }
  if (!(confidence_threshold >= 0.0 && confidence_threshold <= 1.0)) {
    throw ValidationError("confidence threshold must lie in [0,1]");
  }
}

MatchResult match_detections(std::span<const Detection> detections,
                             std::span<const GroundTruthBox> ground_truth,
                             double iou_threshold) {
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    return detections[l].score > detections[r].score;
  });

  MatchResult result;
  result.verdicts.resize(detections.size());
  std::vector<bool> matched(ground_truth.size(), false);
  for (std::size_t idx : order) {
    const Detection& det = detections[idx];
    std::size_t best = ground_truth.size();
    double best_iou = -1.0;
    for (std::size_t g = 0; g < ground_truth.size(); ++g) {
      if (matched[g] || ground_truth[g].class_id != det.class_id) continue;
      const double overlap = iou(det.bbox, ground_truth[g].bbox);
      if (overlap > best_iou) {
        best_iou = overlap;
        best = g;
      }
    }
    if (best < ground_truth.size() && best_iou >= iou_threshold) {
      matched[best] = true;
      result.verdicts[idx] = {true, best};
    }
  }
  for (std::size_t g = 0; g < ground_truth.size(); ++g) {
    if (!matched[g]) result.unmatched_gt.push_back(g);
  }
  return result;
}

PrecisionRecall precision_recall(const ConfusionCounts& c) {
  PrecisionRecall pr;
  if (c.tp + c.fp > 0) {
    pr.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) * 100.0;
  }
  if (c.tp + c.fn > 0) {
    pr.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) * 100.0;
  }
  return pr;
}

namespace {

struct ScoredVerdict {
  double score;
  bool tp;
};

std::vector<PRPoint> curve_from_verdicts(std::vector<ScoredVerdict> verdicts,
                                         std::size_t gt_count) {
  std::stable_sort(verdicts.begin(), verdicts.end(),
                   [](const ScoredVerdict& l, const ScoredVerdict& r) {
                     return l.score > r.score;
                   });
  std::vector<PRPoint> curve;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t i = 0;
  while (i < verdicts.size()) {
    const double cutoff = verdicts[i].score;
    while (i < verdicts.size() && verdicts[i].score == cutoff) {
      (verdicts[i].tp ? tp : fp) += 1;
      ++i;
    }
    const double recall =
        gt_count > 0 ? static_cast<double>(tp) / static_cast<double>(gt_count) : 0.0;
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    curve.push_back({cutoff, recall, precision});
  }
  return curve;
}

}  // namespace

std::vector<PRPoint> pr_curve(std::span<const ImageDetections> images, int class_id,
                              double iou_threshold) {
  std::vector<ScoredVerdict> verdicts;
  std::size_t gt_count = 0;
  for (const auto& image : images) {
    std::vector<Detection> dets;
    std::vector<GroundTruthBox> gts;
    for (const auto& d : image.detections) {
      if (d.class_id == class_id) dets.push_back(d);
    }
    for (const auto& g : image.ground_truth) {
      if (g.class_id == class_id) gts.push_back(g);
    }
    gt_count += gts.size();
    const MatchResult m = match_detections(dets, gts, iou_threshold);
    for (std::size_t i = 0; i < dets.size(); ++i) {
      verdicts.push_back({dets[i].score, m.verdicts[i].true_positive});
    }
  }
  return curve_from_verdicts(std::move(verdicts), gt_count);
}

double average_precision(std::span<const PRPoint> curve, ApMode mode) {
  if (curve.empty()) return 0.0;
  double area = 0.0;
  if (mode == ApMode::kAllPoint) {
    std::vector<double> envelope(curve.size());
    double running = 0.0;
    for (std::size_t i = curve.size(); i-- > 0;) {
      running = std::max(running, curve[i].precision);
      envelope[i] = running;
    }
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < curve.size(); ++i) {
      area += (curve[i].recall - prev_recall) * envelope[i];
      prev_recall = curve[i].recall;
    }
  } else {
    // A segment whose precision falls while recall rises comes from tied
    // scores; it is anchored at the lower precision.
    double prev_recall = 0.0;
    double prev_precision = curve.front().precision;
    for (const auto& p : curve) {
      const double left = std::min(prev_precision, p.precision);
      area += (p.recall - prev_recall) * 0.5 * (left + p.precision);
      prev_recall = p.recall;
      prev_precision = p.precision;
    }
  }
  return std::clamp(area, 0.0, 1.0);
}

double mean_average_precision(std::span<const ClassAp> per_class) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& c : per_class) {
    if (c.gt_count == 0) continue;
    sum += c.ap;
    ++n;
  }
  if (n == 0) throw ValidationError("mAP is undefined: no class has ground-truth boxes");
  return sum / static_cast<double>(n);
}

namespace {

using ordered_json = nlohmann::ordered_json;

const char* ap_mode_name(ApMode mode) {
  return mode == ApMode::kAllPoint ? "all-point" : "raw-trapezoid";
}

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width, bool left = false) {
  if (s.size() >= width) return s;
  const std::string fill(width - s.size(), ' ');
  return left ? s + fill : fill + s;
}

}  // namespace

std::string format_report(const MetricsReport& report, ReportFormat format,
                          bool include_timing) {
  const bool pct = report.config.report_percent;
  // Precision/recall are stored as percent, AP/mAP as fractions.
  const auto pr_out = [&](double percent) { return pct ? percent : percent / 100.0; };
  const auto ap_out = [&](double fraction) { return pct ? fraction * 100.0 : fraction; };

  if (format == ReportFormat::kJson) {
    ordered_json doc;
    doc["protocol"] = report.protocol;
    doc["images"] = report.images;
    doc["iou_threshold"] = report.config.iou_threshold;
    doc["confidence_threshold"] = report.config.confidence_threshold;
    doc["ap_mode"] = ap_mode_name(report.config.ap_mode);
    doc["units"] = pct ? "percent" : "fraction";
    doc["precision"] = pr_out(report.precision);
    doc["recall"] = pr_out(report.recall);
    doc["map"] = report.map ? ordered_json(ap_out(*report.map)) : ordered_json(nullptr);
    doc["tp"] = report.totals.tp;
    doc["fp"] = report.totals.fp;
    doc["fn"] = report.totals.fn;
    doc["classes"] = ordered_json::array();
    for (const auto& c : report.classes) {
      ordered_json item;
      item["class_id"] = c.class_id;
      item["name"] = c.name;
      item["gt"] = c.gt_count;
      item["detections"] = c.detection_count;
      item["tp"] = c.counts.tp;
      item["fp"] = c.counts.fp;
      item["fn"] = c.counts.fn;
      item["precision"] = pr_out(c.precision);
      item["recall"] = pr_out(c.recall);
      item["ap"] = c.gt_count > 0 ? ordered_json(ap_out(c.ap)) : ordered_json(nullptr);
      doc["classes"].push_back(std::move(item));
    }
    if (include_timing) {
      doc["latency_ms"] = {{"mean", report.latency.mean_ms},
                           {"median", report.latency.median_ms},
                           {"p95", report.latency.p95_ms},
                           {"fps", report.latency.fps}};
    }
    return doc.dump(2) + "\n";
  }

  const std::string unit = pct ? "%" : "";
  if (format == ReportFormat::kCsv) {
    std::ostringstream out;
    out << "class,gt,detections,tp,fp,fn,precision,recall,ap\n";
    for (const auto& c : report.classes) {
      out << c.name << ',' << c.gt_count << ',' << c.detection_count << ',' << c.counts.tp
          << ',' << c.counts.fp << ',' << c.counts.fn << ',' << fixed(pr_out(c.precision), 4)
          << ',' << fixed(pr_out(c.recall), 4) << ','
          << (c.gt_count > 0 ? fixed(ap_out(c.ap), 4) : "") << '\n';
    }
    std::size_t dets = 0;
    std::size_t gts = 0;
    for (const auto& c : report.classes) {
      dets += c.detection_count;
      gts += c.gt_count;
    }
    out << "all," << gts << ',' << dets << ',' << report.totals.tp << ','
        << report.totals.fp << ',' << report.totals.fn << ','
        << fixed(pr_out(report.precision), 4) << ',' << fixed(pr_out(report.recall), 4)
        << ',' << (report.map ? fixed(ap_out(*report.map), 4) : "") << '\n';
    if (include_timing) {
      out << "# latency_ms mean=" << fixed(report.latency.mean_ms, 3)
          << " median=" << fixed(report.latency.median_ms, 3)
          << " p95=" << fixed(report.latency.p95_ms, 3) << '\n';
    }
    return out.str();
  }

  std::ostringstream out;
  out << "protocol " << report.protocol << "  images " << report.images << "  iou "
      << report.config.iou_threshold << "  conf " << report.config.confidence_threshold
      << "  ap " << ap_mode_name(report.config.ap_mode) << '\n';
  out << pad("class", 10, true) << pad("gt", 8) << pad("det", 8) << pad("tp", 8)
      << pad("fp", 8) << pad("fn", 8) << pad("P" + unit, 9) << pad("R" + unit, 9)
      << pad("AP" + unit, 9) << '\n';
  for (const auto& c : report.classes) {
    out << pad(c.name, 10, true) << pad(std::to_string(c.gt_count), 8)
        << pad(std::to_string(c.detection_count), 8) << pad(std::to_string(c.counts.tp), 8)
        << pad(std::to_string(c.counts.fp), 8) << pad(std::to_string(c.counts.fn), 8)
        << pad(fixed(pr_out(c.precision)), 9) << pad(fixed(pr_out(c.recall)), 9)
        << pad(c.gt_count > 0 ? fixed(ap_out(c.ap)) : "-", 9) << '\n';
  }
  out << pad("all/mAP", 10, true) << pad("", 16) << pad(std::to_string(report.totals.tp), 8)
      << pad(std::to_string(report.totals.fp), 8) << pad(std::to_string(report.totals.fn), 8)
      << pad(fixed(pr_out(report.precision)), 9) << pad(fixed(pr_out(report.recall)), 9)
      << pad(report.map ? fixed(ap_out(*report.map)) : "-", 9) << '\n';
  if (include_timing) {
    out << "latency/image (detect only): mean " << fixed(report.latency.mean_ms, 3)
        << " ms  median " << fixed(report.latency.median_ms, 3) << " ms  p95 "
        << fixed(report.latency.p95_ms, 3) << " ms  fps " << fixed(report.latency.fps, 1)
        << '\n';
  }
  return out.str();
}

std::string pr_curves_csv(const MetricsReport& report) {
  std::ostringstream out;
  out << "class,score_cutoff,recall,precision\n";
  for (const auto& c : report.classes) {
    for (const auto& p : c.curve) {
      out << c.name << ',' << fixed(p.score_cutoff, 6) << ',' << fixed(p.recall, 6) << ','
          << fixed(p.precision, 6) << '\n';
    }
  }
  return out.str();
}

std::string pr_curves_svg(const MetricsReport& report, const std::string& title) {
  constexpr double kWidth = 640.0;
  constexpr double kHeight = 480.0;
  constexpr double kLeft = 60.0;
  constexpr double kRight = 160.0;
  constexpr double kTop = 40.0;
  constexpr double kBottom = 50.0;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  static const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  auto px = [&](double recall) { return kLeft + recall * plot_w; };
  auto py = [&](double precision) { return kTop + (1.0 - precision) * plot_h; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kLeft << "\" y=\"24\" font-size=\"14\">" << title << "</text>\n";
  svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w
      << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 10; t += 2) {
    const double v = t / 10.0;
    svg << "<text x=\"" << fixed(px(v), 1) << "\" y=\"" << kHeight - kBottom + 16
        << "\" text-anchor=\"middle\">" << fixed(v, 1) << "</text>\n";
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << fixed(py(v) + 4, 1)
        << "\" text-anchor=\"end\">" << fixed(v, 1) << "</text>\n";
  }
  svg << "<text x=\"" << fixed(kLeft + plot_w / 2, 1) << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\">Recall</text>\n";
  svg << "<text x=\"16\" y=\"" << fixed(kTop + plot_h / 2, 1)
      << "\" transform=\"rotate(-90 16 " << fixed(kTop + plot_h / 2, 1)
      << ")\" text-anchor=\"middle\">Precision</text>\n";

  std::size_t legend_row = 0;
  for (std::size_t k = 0; k < report.classes.size(); ++k) {
    const auto& c = report.classes[k];
    if (c.gt_count == 0) continue;
    const char* color = kColors[k % std::size(kColors)];
    std::ostringstream pts;
    double prev_recall = 0.0;
    bool first = true;
    for (const auto& p : c.curve) {
      if (first) {
        pts << fixed(px(0.0), 2) << ',' << fixed(py(p.precision), 2);
        first = false;
      } else {
        pts << ' ' << fixed(px(prev_recall), 2) << ',' << fixed(py(p.precision), 2);
      }
      pts << ' ' << fixed(px(p.recall), 2) << ',' << fixed(py(p.precision), 2);
      prev_recall = p.recall;
    }
    if (!c.curve.empty()) {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\""
          << pts.str() << "\"/>\n";
    }
    const double ly = kTop + 14.0 + 18.0 * static_cast<double>(legend_row++);
    svg << "<line x1=\"" << kWidth - kRight + 12 << "\" y1=\"" << ly - 4 << "\" x2=\""
        << kWidth - kRight + 32 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << kWidth - kRight + 38 << "\" y=\"" << ly << "\">" << c.name << " "
        << fixed(c.ap, 3) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace thermeval
