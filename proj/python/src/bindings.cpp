#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "thermeval/augment.hpp"
#include "thermeval/bench.hpp"
#include "thermeval/cli.hpp"
#include "thermeval/ensemble.hpp"
#include "thermeval/error.hpp"
#include "thermeval/evaluate.hpp"
#include "thermeval/formats.hpp"

namespace py = pybind11;
using namespace thermeval;

namespace {

// Lets Python classes implement Detector. Calls from worker threads take
// the GIL before looking up the override. The capability queries default to
// "every view" when the subclass does not define them.
class PyDetector : public Detector {
 public:
  std::string name() const override { PYBIND11_OVERRIDE_PURE(std::string, Detector, name); }
  bool supports_transformed_views() const override {
    py::gil_scoped_acquire gil;
    if (auto f = py::get_override(static_cast<const Detector*>(this), "supports_transformed_views")) {
      return f().cast<bool>();
    }
    return true;
  }
  bool supports_view(const std::string& view_id) const override {
    py::gil_scoped_acquire gil;
    if (auto f = py::get_override(static_cast<const Detector*>(this), "supports_view")) {
      return f(view_id).cast<bool>();
    }
    return true;
  }
  std::vector<Detection> detect(const ImageContext& image, const ViewKey& view,
                                const AffineTransform& view_transform,
                                Size view_canvas) const override {
    PYBIND11_OVERRIDE_PURE(std::vector<Detection>, Detector, detect, image, view,
                           view_transform, view_canvas);
  }
};

MergeStrategy make_merge(const std::string& kind, double iou) {
  if (kind == "nms") return NmsMerge{iou};
  if (kind == "wbf") return WeightedFusionMerge{iou};
  throw ValidationError("merge must be 'nms' or 'wbf'");
}

TtaConfig make_tta(const std::optional<std::vector<std::string>>& views,
                   const std::string& merge, double merge_iou, double min_visible) {
  TtaConfig cfg;
  if (views) {
    cfg.views.clear();
    for (const auto& v : *views) cfg.views.push_back(parse_view_id(v));
  }
  cfg.merge = make_merge(merge, merge_iou);
  cfg.min_visible_fraction = min_visible;
  cfg.validate();
  return cfg;
}

Protocol make_protocol(const std::string& protocol, const std::vector<DetectorPtr>& detectors,
                       const std::optional<std::vector<std::string>>& views,
                       const std::string& merge, double merge_iou) {
  if (detectors.empty()) throw ValidationError("at least one detector is required");
  if (protocol == "ttme") {
    EnsembleConfig cfg;
    cfg.members = detectors;
    cfg.merge = make_merge(merge, merge_iou);
    return Ttme{cfg};
  }
  if (detectors.size() != 1) throw ValidationError(protocol + " takes exactly one detector");
  if (protocol == "ttna") return Ttna{detectors.front()};
  if (protocol == "tta") return Tta{detectors.front(), make_tta(views, merge, merge_iou, 0.25)};
  throw ValidationError("protocol must be 'ttna', 'tta' or 'ttme'");
}

EvalConfig make_eval(double iou_thresh, double conf_thresh, const std::string& ap_mode) {
  EvalConfig cfg;
  cfg.iou_threshold = iou_thresh;
  cfg.confidence_threshold = conf_thresh;
  if (ap_mode == "all-point") {
    cfg.ap_mode = ApMode::kAllPoint;
  } else if (ap_mode == "trapezoid") {
    cfg.ap_mode = ApMode::kRawTrapezoid;
  } else {
    throw ValidationError("ap_mode must be 'all-point' or 'trapezoid'");
  }
  cfg.validate();
  return cfg;
}

ReportFormat report_format(const std::string& f) {
  if (f == "json") return ReportFormat::kJson;
  if (f == "table") return ReportFormat::kTable;
  if (f == "csv") return ReportFormat::kCsv;
  throw ValidationError("format must be 'json', 'table' or 'csv'");
}

py::tuple box_tuple(const BBox& b) { return py::make_tuple(b.x_min, b.y_min, b.x_max, b.y_max); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Detection evaluation, test-time augmentation and ensembling toolkit.";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", error.ptr());
  py::register_exception<ParseError>(m, "ParseError", error.ptr());
  py::register_exception<LookupError>(m, "LookupError", error.ptr());
  py::register_exception<CapabilityError>(m, "CapabilityError", error.ptr());
  py::register_exception<IoError>(m, "IoError", error.ptr());

  py::class_<BBox>(m, "BBox")
      .def(py::init([](double x0, double y0, double x1, double y1) {
             return checked_box(x0, y0, x1, y1);
           }),
           py::arg("x_min"), py::arg("y_min"), py::arg("x_max"), py::arg("y_max"))
      .def_readwrite("x_min", &BBox::x_min)
      .def_readwrite("y_min", &BBox::y_min)
      .def_readwrite("x_max", &BBox::x_max)
      .def_readwrite("y_max", &BBox::y_max)
      .def_property_readonly("area", &BBox::area)
      .def("as_tuple", &box_tuple)
      .def(py::self == py::self)
      .def("__repr__", [](const BBox& b) {
        std::ostringstream s;
        s << "BBox(" << b.x_min << ", " << b.y_min << ", " << b.x_max << ", " << b.y_max << ")";
        return s.str();
      });

  py::class_<Detection>(m, "Detection")
      .def(py::init<BBox, int, double>(), py::arg("bbox"), py::arg("class_id"), py::arg("score"))
      .def_readwrite("bbox", &Detection::bbox)
      .def_readwrite("class_id", &Detection::class_id)
      .def_readwrite("score", &Detection::score)
      .def(py::self == py::self)
      .def("__repr__", [](const Detection& d) {
        std::ostringstream s;
        s << "Detection(class_id=" << d.class_id << ", score=" << d.score << ")";
        return s.str();
      });

  py::class_<GroundTruthBox>(m, "GroundTruthBox")
      .def(py::init<BBox, int>(), py::arg("bbox"), py::arg("class_id"))
      .def_readwrite("bbox", &GroundTruthBox::bbox)
      .def_readwrite("class_id", &GroundTruthBox::class_id)
      .def(py::self == py::self);

  m.def("iou", &iou, py::arg("a"), py::arg("b"));
  m.def(
      "nms",
      [](const std::vector<Detection>& d, double thr, bool class_aware) {
        return nms(d, thr, class_aware);
      },
      py::arg("detections"), py::arg("iou_threshold") = 0.5, py::arg("class_aware") = true);

  py::class_<AffineTransform>(m, "AffineTransform")
      .def(py::init<double, double, double, double, double, double>(), py::arg("a"),
           py::arg("b"), py::arg("tx"), py::arg("c"), py::arg("d"), py::arg("ty"))
      .def_static("identity", &AffineTransform::identity)
      .def("apply",
           [](const AffineTransform& t, double x, double y) {
             const Point p = t.apply({x, y});
             return py::make_tuple(p.x, p.y);
           })
      .def("apply_box", [](const AffineTransform& t, const BBox& b) { return transform_box(t, b); })
      .def("inverse", &AffineTransform::inverse)
      .def("coefficients", &AffineTransform::coefficients);

  py::class_<ViewKey>(m, "ViewKey")
      .def_readonly("image_id", &ViewKey::image_id)
      .def_readonly("view_id", &ViewKey::view_id);

  py::class_<ImageContext>(m, "ImageContext")
      .def_readonly("image_id", &ImageContext::image_id)
      .def_property_readonly("width", [](const ImageContext& c) { return c.canvas.width; })
      .def_property_readonly("height", [](const ImageContext& c) { return c.canvas.height; })
      .def_property_readonly("ground_truth", [](const ImageContext& c) {
        return std::vector<GroundTruthBox>(c.ground_truth.begin(), c.ground_truth.end());
      });

  py::class_<Size>(m, "Size")
      .def_readonly("width", &Size::width)
      .def_readonly("height", &Size::height);

  py::class_<Detector, PyDetector, DetectorPtr>(m, "Detector",
                                                      "Subclass and override name() and "
                                                      "detect(image, view, transform, canvas).")
      .def(py::init<>())
      .def("name", &Detector::name)
      .def("supports_transformed_views", &Detector::supports_transformed_views)
      .def("supports_view", &Detector::supports_view, py::arg("view_id"))
      .def("detect", &Detector::detect, py::arg("image"), py::arg("view"), py::arg("transform"),
           py::arg("canvas"));

  py::class_<MockNoise>(m, "MockNoise")
      .def(py::init([](double p_miss, double jitter, double fp_rate, double score_lo,
                       double score_hi, double fp_lo, double fp_hi, int fp_classes,
                       std::uint64_t seed) {
             MockNoise n{p_miss, jitter, fp_rate, score_lo, score_hi, fp_lo, fp_hi, fp_classes,
                         seed};
             n.validate();
             return n;
           }),
           py::arg("p_miss") = 0.0, py::arg("jitter") = 0.0, py::arg("fp_rate") = 0.0,
           py::arg("score_lo") = 1.0, py::arg("score_hi") = 1.0, py::arg("fp_lo") = 0.0,
           py::arg("fp_hi") = 0.5, py::arg("fp_classes") = 7, py::arg("seed") = 0)
      .def_readonly("p_miss", &MockNoise::p_miss)
      .def_readonly("jitter", &MockNoise::jitter_sigma)
      .def_readonly("fp_rate", &MockNoise::fp_rate)
      .def_readonly("seed", &MockNoise::global_seed);

  py::class_<MockDetector, Detector, std::shared_ptr<MockDetector>>(m, "MockDetector")
      .def(py::init<std::string, MockNoise>(), py::arg("name"), py::arg("noise") = MockNoise{});

  py::class_<FileDetector, Detector, std::shared_ptr<FileDetector>>(m, "FileDetector")
      .def(py::init([](std::string name, const std::vector<DetectionRecord>& records,
                       std::set<std::string> known) {
             return std::make_shared<FileDetector>(std::move(name), records, std::move(known));
           }),
           py::arg("name"), py::arg("records"), py::arg("known_images") = std::set<std::string>{})
      .def_property_readonly("views", &FileDetector::views);

  py::class_<ConstantCostDetector, Detector, std::shared_ptr<ConstantCostDetector>>(
      m, "ConstantCostDetector")
      .def(py::init([](DetectorPtr inner, double cost_ms) {
             return std::make_shared<ConstantCostDetector>(
                 std::move(inner),
                 std::chrono::microseconds(static_cast<std::int64_t>(cost_ms * 1000.0)));
           }),
           py::arg("inner"), py::arg("cost_ms"));

  m.def("parse_mock_spec", &parse_mock_spec, py::arg("spec"), py::arg("run_seed") = 0,
        py::arg("default_fp_classes") = 7);

  py::class_<DetectionRecord>(m, "DetectionRecord")
      .def(py::init([](std::string image_id, int class_id, double score, BBox bbox,
                       std::string view_id) {
             return DetectionRecord{std::move(image_id), std::move(view_id), class_id, score,
                                    bbox};
           }),
           py::arg("image_id"), py::arg("class_id"), py::arg("score"), py::arg("bbox"),
           py::arg("view_id") = std::string(kIdentityView))
      .def_readwrite("image_id", &DetectionRecord::image_id)
      .def_readwrite("view_id", &DetectionRecord::view_id)
      .def_readwrite("class_id", &DetectionRecord::class_id)
      .def_readwrite("score", &DetectionRecord::score)
      .def_readwrite("bbox", &DetectionRecord::bbox)
      .def(py::self == py::self);

  py::class_<ImageEntry>(m, "ImageEntry")
      .def_readonly("id", &ImageEntry::id)
      .def_readonly("width", &ImageEntry::width)
      .def_readonly("height", &ImageEntry::height)
      .def_readonly("tags", &ImageEntry::tags);

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("class_names",
                             [](const Dataset& d) { return d.manifest.class_map.names(); })
      .def_property_readonly("images", [](const Dataset& d) { return d.manifest.images; })
      .def_readonly("ground_truth", &Dataset::ground_truth)
      .def("__len__", [](const Dataset& d) { return d.manifest.images.size(); });

  m.def(
      "load_dataset",
      [](const std::filesystem::path& manifest) { return load_dataset(load_manifest(manifest)); },
      py::arg("manifest"));
  m.def(
      "load_detections",
      [](const std::filesystem::path& path, const Dataset* dataset) {
        return load_detections(path, dataset ? &dataset->manifest : nullptr);
      },
      py::arg("path"), py::arg("dataset") = nullptr);
  m.def(
      "write_detections",
      [](const std::filesystem::path& path, const std::vector<DetectionRecord>& records) {
        std::ostringstream out;
        write_detections(out, records);
        write_text_file(path, out.str());
      },
      py::arg("path"), py::arg("records"));
  m.def(
      "class_distribution",
      [](const Dataset& d) {
        const auto dist = class_distribution(d.manifest);
        py::dict out;
        for (std::size_t i = 0; i < dist.counts.size(); ++i) out[py::str(dist.class_names[i])] = dist.counts[i];
        return out;
      },
      py::arg("dataset"));

  m.def("view_id_is_valid", [](const std::string& id) {
    try {
      parse_view_id(id);
      return true;
    } catch (const ParseError&) {
      return false;
    }
  });
  m.def(
      "inverse_map",
      [](const std::vector<Detection>& d, const std::string& view, double width, double height,
         double min_visible) {
        return inverse_map(d, parse_view_id(view), {width, height}, min_visible);
      },
      py::arg("detections"), py::arg("view_id"), py::arg("width"), py::arg("height"),
      py::arg("min_visible_fraction") = 0.25);
  m.def(
      "view_transform",
      [](const std::string& view, double width, double height) {
        return view_transform(parse_view_id(view), {width, height});
      },
      py::arg("view_id"), py::arg("width"), py::arg("height"));
  m.def("default_views", [] {
    std::vector<std::string> out;
    for (const auto& v : TtaConfig::default_views()) out.push_back(view_id(v));
    return out;
  });

  py::class_<LatencyStats>(m, "LatencyStats")
      .def_readonly("n", &LatencyStats::n)
      .def_readonly("mean_ms", &LatencyStats::mean_ms)
      .def_readonly("median_ms", &LatencyStats::median_ms)
      .def_readonly("p95_ms", &LatencyStats::p95_ms)
      .def_readonly("fps", &LatencyStats::fps);

  py::class_<ClassMetrics>(m, "ClassMetrics")
      .def_readonly("class_id", &ClassMetrics::class_id)
      .def_readonly("name", &ClassMetrics::name)
      .def_readonly("gt_count", &ClassMetrics::gt_count)
      .def_readonly("precision", &ClassMetrics::precision)
      .def_readonly("recall", &ClassMetrics::recall)
      .def_readonly("ap", &ClassMetrics::ap);

  py::class_<MetricsReport>(m, "MetricsReport")
      .def_readonly("protocol", &MetricsReport::protocol)
      .def_readonly("images", &MetricsReport::images)
      .def_readonly("precision", &MetricsReport::precision)
      .def_readonly("recall", &MetricsReport::recall)
      .def_readonly("map", &MetricsReport::map)
      .def_readonly("classes", &MetricsReport::classes)
      .def_readonly("latency", &MetricsReport::latency)
      .def(
          "format",
          [](const MetricsReport& r, const std::string& f, bool timing) {
            return format_report(r, report_format(f), timing);
          },
          py::arg("format") = "json", py::arg("include_timing") = false);

  m.def(
      "evaluate",
      [](const Dataset& ds, const std::vector<DetectorPtr>& detectors, const std::string& protocol,
         const std::optional<std::vector<std::string>>& views, const std::string& merge,
         double merge_iou, double iou_thresh, double conf_thresh, const std::string& ap_mode,
         std::size_t threads) {
        const Protocol p = make_protocol(protocol, detectors, views, merge, merge_iou);
        const EvalConfig cfg = make_eval(iou_thresh, conf_thresh, ap_mode);
        py::gil_scoped_release release;
        return evaluate(ds, p, cfg, threads);
      },
      py::arg("dataset"), py::arg("detectors"), py::arg("protocol") = "ttna",
      py::arg("views") = std::nullopt, py::arg("merge") = "nms", py::arg("merge_iou") = 0.5,
      py::arg("iou_thresh") = 0.5, py::arg("conf_thresh") = 0.5, py::arg("ap_mode") = "all-point",
      py::arg("threads") = 1);

  m.def(
      "select_best_subset",
      [](const std::vector<DetectorPtr>& candidates, const Dataset& ds, std::size_t max_size,
         const std::string& merge, double merge_iou, std::size_t threads) {
        const auto strategy = make_merge(merge, merge_iou);
        SubsetSelection sel;
        {
          py::gil_scoped_release release;
          sel = select_best_subset(candidates, ds, EvalConfig{}, max_size, strategy, threads);
        }
        py::list ranked;
        for (const auto& s : sel.ranked) {
          py::list names;
          for (std::size_t i : s.members) names.append(candidates[i]->name());
          ranked.append(py::dict(py::arg("members") = names, py::arg("map") = s.map,
                                 py::arg("precision") = s.precision,
                                 py::arg("recall") = s.recall));
        }
        return ranked;
      },
      py::arg("candidates"), py::arg("dataset"), py::arg("max_size") = 3,
      py::arg("merge") = "nms", py::arg("merge_iou") = 0.5, py::arg("threads") = 1);

  m.def(
      "bench",
      [](const Dataset& ds, const std::vector<DetectorPtr>& detectors, const std::string& protocol,
         std::size_t warmup, std::size_t iterations) {
        const Protocol p = make_protocol(protocol, detectors, std::nullopt, "nms", 0.5);
        BenchOptions opts;
        opts.warmup = warmup;
        opts.iterations = iterations;
        const auto contexts = image_contexts(ds);
        py::gil_scoped_release release;
        return bench_protocol(p, contexts, opts).latency;
      },
      py::arg("dataset"), py::arg("detectors"), py::arg("protocol") = "ttna",
      py::arg("warmup") = 10, py::arg("iterations") = 30);

  m.def(
      "mosaic",
      [](const std::vector<std::vector<GroundTruthBox>>& boxes,
         const std::vector<std::pair<int, int>>& sizes, int size, double pivot_x, double pivot_y,
         double min_visible) {
        if (boxes.size() != 4 || sizes.size() != 4) {
          throw ValidationError("mosaic needs exactly 4 samples");
        }
        std::vector<LabeledSample> samples;
        for (std::size_t i = 0; i < 4; ++i) {
          samples.push_back({"s" + std::to_string(i), sizes[i].first, sizes[i].second, boxes[i], {}});
        }
        MosaicParams params;
        params.size = size;
        params.pivot_x = pivot_x;
        params.pivot_y = pivot_y;
        params.min_visible_fraction = min_visible;
        const auto r = mosaic(samples, params);
        py::list dropped;
        for (const auto& d : r.dropped) {
          dropped.append(py::make_tuple(d.sample, d.box, d.visible_fraction));
        }
        return py::make_tuple(r.sample.boxes, dropped);
      },
      py::arg("boxes"), py::arg("sizes"), py::arg("size") = 640, py::arg("pivot_x") = 320.0,
      py::arg("pivot_y") = 320.0, py::arg("min_visible") = 0.10);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out;
        std::ostringstream err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}
