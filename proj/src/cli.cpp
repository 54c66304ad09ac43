#include "thermeval/cli.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "thermeval/augment.hpp"
#include "thermeval/bench.hpp"
#include "thermeval/ensemble.hpp"
#include "thermeval/error.hpp"
#include "thermeval/evaluate.hpp"
#include "thermeval/formats.hpp"
#include "thermeval/rng.hpp"
#include "thermeval/tta.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace thermeval {

std::uint64_t mix_seed(std::uint64_t run_seed, std::uint64_t spec_seed) noexcept {
  return SplitMix64(run_seed ^ (spec_seed * 0x9E3779B97F4A7C15ULL)).next();
}

namespace {

double parse_number(std::string_view text, std::string_view what) {
  double v = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) {
    throw ValidationError(std::string(what) + ": '" + std::string(text) + "' is not a number");
  }
  return v;
}

std::uint64_t parse_unsigned(std::string_view text, std::string_view what) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ValidationError(std::string(what) + ": '" + std::string(text) +
                          "' is not a non-negative integer");
  }
  return v;
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.emplace_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace

DetectorPtr parse_mock_spec(std::string_view spec, std::uint64_t run_seed,
                            int default_fp_classes) {
  MockNoise noise;
  noise.fp_classes = default_fp_classes;
  std::string name = "mock";
  std::uint64_t spec_seed = 0;
  double cost_ms = 0.0;
  if (!spec.empty()) {
    for (const auto& item : split(spec, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) {
        throw ValidationError("mock spec entry '" + item + "' is not key=value");
      }
      const std::string key = item.substr(0, eq);
      const std::string value = item.substr(eq + 1);
      const std::string what = "mock " + key;
      if (key == "p_miss") {
        noise.p_miss = parse_number(value, what);
      } else if (key == "jitter") {
        noise.jitter_sigma = parse_number(value, what);
      } else if (key == "fp_rate") {
        noise.fp_rate = parse_number(value, what);
      } else if (key == "score_lo") {
        noise.score_lo = parse_number(value, what);
      } else if (key == "score_hi") {
        noise.score_hi = parse_number(value, what);
      } else if (key == "fp_lo") {
        noise.fp_score_lo = parse_number(value, what);
      } else if (key == "fp_hi") {
        noise.fp_score_hi = parse_number(value, what);
      } else if (key == "fp_classes") {
        noise.fp_classes = static_cast<int>(parse_unsigned(value, what));
      } else if (key == "seed") {
        spec_seed = parse_unsigned(value, what);
      } else if (key == "name") {
        if (value.empty()) throw ValidationError("mock name must not be empty");
        name = value;
      } else if (key == "cost_ms") {
        cost_ms = parse_number(value, what);
        if (!(cost_ms >= 0.0)) throw ValidationError("mock cost_ms must be non-negative");
      } else {
        throw ValidationError("unknown mock spec key '" + key + "'");
      }
    }
  }
  noise.global_seed = mix_seed(run_seed, spec_seed);
  noise.validate();
  DetectorPtr mock = std::make_shared<MockDetector>(name, noise);
  if (cost_ms > 0.0) {
    mock = std::make_shared<ConstantCostDetector>(
        mock, std::chrono::microseconds(static_cast<std::int64_t>(cost_ms * 1000.0)));
  }
  return mock;
}

namespace {

struct Settings {
  std::string config;
  std::string manifest;
  std::vector<std::string> detections;
  std::vector<std::string> mocks;
  std::string protocol = "ttna";
  double iou = 0.5;
  double conf = 0.5;
  std::string ap_mode = "all-point";
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "json";
  std::size_t threads = 1;
  bool timing = false;
  std::vector<std::string> views;
  std::string merge = "nms";
  double merge_iou = 0.5;
  // select-ensemble
  std::size_t max_size = 3;
  // bench
  std::size_t warmup = 10;
  std::size_t iters = 30;
  bool compare = false;
  // mosaic
  std::vector<std::string> ids;
  std::string pivot;
  int size = 640;
  double min_visible = 0.10;
  // convert
  std::string to = "jsonl";
  // config-only detector entries (kind mock/plugin)
  std::vector<json> config_detectors;
  fs::path config_dir;
};

bool given(CLI::App* sub, const std::string& flag) {
  const auto* opt = sub->get_option_no_throw(flag);
  return opt != nullptr && opt->count() > 0;
}

// Values from --config fill in every option not given on the command line.
void apply_config(CLI::App* sub, Settings& s) {
  if (s.config.empty()) return;
  const fs::path path(s.config);
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw ParseError("config " + path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw ParseError("config " + path.string() + " must be an object");
  s.config_dir = path.parent_path();
  auto rel = [&](const std::string& p) {
    const fs::path candidate(p);
    return candidate.is_absolute() ? candidate.string() : (s.config_dir / candidate).string();
  };
  try {
    if (doc.contains("manifest") && !given(sub, "--manifest")) {
      s.manifest = rel(doc["manifest"].get<std::string>());
    }
    if (doc.contains("protocol") && !given(sub, "--protocol")) {
      s.protocol = doc["protocol"].get<std::string>();
    }
    if (doc.contains("iou_thresh") && !given(sub, "--iou-thresh")) {
      s.iou = doc["iou_thresh"].get<double>();
    }
    if (doc.contains("conf_thresh") && !given(sub, "--conf-thresh")) {
      s.conf = doc["conf_thresh"].get<double>();
    }
    if (doc.contains("seed") && !given(sub, "--seed")) s.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("threads") && !given(sub, "--threads")) {
      s.threads = doc["threads"].get<std::size_t>();
    }
    if (doc.contains("views") && !given(sub, "--view")) {
      s.views = doc["views"].get<std::vector<std::string>>();
    }
    if (doc.contains("merge") && !given(sub, "--merge")) s.merge = doc["merge"].get<std::string>();
    if (doc.contains("merge_iou") && !given(sub, "--merge-iou")) {
      s.merge_iou = doc["merge_iou"].get<double>();
    }
    if (doc.contains("detectors") && !given(sub, "--detections") && !given(sub, "--mock")) {
      for (const auto& d : doc["detectors"]) {
        const auto kind = d.value("kind", std::string());
        if (kind == "file") {
          s.detections.push_back(rel(d.at("path").get<std::string>()));
        } else if (kind == "mock" || kind == "plugin") {
          s.config_detectors.push_back(d);
        } else {
          throw ValidationError("config detector kind must be file, mock or plugin");
        }
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError("config " + path.string() + ": " + e.what());
  }
}

std::string mock_spec_from_json(const json& d) {
  std::string spec;
  for (const auto& [key, value] : d.items()) {
    if (key == "kind") continue;
    if (!spec.empty()) spec += ',';
    spec += key + "=" + (value.is_string() ? value.get<std::string>() : value.dump());
  }
  return spec;
}

Dataset load(const Settings& s) {
  if (s.manifest.empty()) throw ValidationError("--manifest is required");
  return load_dataset(load_manifest(s.manifest));
}

std::vector<DetectorPtr> build_detectors(const Settings& s, const DatasetManifest& manifest) {
  std::vector<DetectorPtr> out;
  std::set<std::string> ids;
  for (const auto& img : manifest.images) ids.insert(img.id);
  const int classes = static_cast<int>(manifest.class_map.size());
  for (const auto& path : s.detections) {
    const auto records = load_detections(path, &manifest);
    out.push_back(std::make_shared<FileDetector>(fs::path(path).stem().string(), records, ids));
  }
  for (const auto& spec : s.mocks) out.push_back(parse_mock_spec(spec, s.seed, classes));
  for (const auto& d : s.config_detectors) {
    if (d.value("kind", std::string()) == "plugin") {
      throw CapabilityError(
          "plugin detectors are only available through the Python module");
    }
    out.push_back(parse_mock_spec(mock_spec_from_json(d), s.seed, classes));
  }
  if (out.empty()) throw ValidationError("no detector given (use --detections or --mock)");
  return out;
}

EvalConfig eval_config(const Settings& s) {
  EvalConfig cfg;
  cfg.iou_threshold = s.iou;
  cfg.confidence_threshold = s.conf;
  if (s.ap_mode == "all-point") {
    cfg.ap_mode = ApMode::kAllPoint;
  } else if (s.ap_mode == "trapezoid") {
    cfg.ap_mode = ApMode::kRawTrapezoid;
  } else {
    throw ValidationError("--ap-mode must be all-point or trapezoid");
  }
  cfg.validate();
  return cfg;
}

MergeStrategy merge_strategy(const Settings& s) {
  if (s.merge == "nms") return NmsMerge{s.merge_iou};
  if (s.merge == "wbf") return WeightedFusionMerge{s.merge_iou};
  throw ValidationError("--merge must be nms or wbf");
}

TtaConfig tta_config(const Settings& s) {
  TtaConfig cfg;
  if (!s.views.empty()) {
    cfg.views.clear();
    for (const auto& v : s.views) cfg.views.push_back(parse_view_id(v));
  }
  cfg.merge = merge_strategy(s);
  cfg.validate();
  return cfg;
}

Protocol make_protocol(const std::string& name, const Settings& s,
                       const std::vector<DetectorPtr>& detectors) {
  if (name == "ttna" || name == "tta") {
    if (detectors.size() != 1) {
      throw ValidationError(name + " needs exactly one detector, got " +
                            std::to_string(detectors.size()));
    }
    if (name == "ttna") return Ttna{detectors.front()};
    return Tta{detectors.front(), tta_config(s)};
  }
  if (name == "ttme") {
    EnsembleConfig cfg;
    cfg.members = detectors;
    cfg.merge = merge_strategy(s);
    return Ttme{cfg};
  }
  throw ValidationError("--protocol must be ttna, tta or ttme");
}

std::string detector_label(const std::vector<DetectorPtr>& detectors) {
  std::string label;
  for (const auto& d : detectors) label += (label.empty() ? "" : "+") + d->name();
  return label;
}

ReportFormat report_format(const std::string& f) {
  if (f == "table") return ReportFormat::kTable;
  if (f == "csv") return ReportFormat::kCsv;
  return ReportFormat::kJson;
}

void emit(const Settings& s, const std::string& text, std::ostream& out) {
  if (s.out.empty()) {
    out << text;
  } else {
    write_text_file(s.out, text);
  }
}

int cmd_stats(const Settings& s, std::ostream& out) {
  if (s.manifest.empty()) throw ValidationError("--manifest is required");
  const auto dist = class_distribution(load_manifest(s.manifest));
  std::ostringstream text;
  if (s.format == "json") {
    nlohmann::ordered_json doc;
    doc["classes"] = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < dist.counts.size(); ++i) {
      doc["classes"][dist.class_names[i]] = dist.counts[i];
    }
    doc["total"] = dist.total;
    text << doc.dump(2) << '\n';
  } else if (s.format == "csv") {
    text << "class,count\n";
    for (std::size_t i = 0; i < dist.counts.size(); ++i) {
      text << dist.class_names[i] << ',' << dist.counts[i] << '\n';
    }
    text << "total," << dist.total << '\n';
  } else {
    char line[96];
    for (std::size_t i = 0; i < dist.counts.size(); ++i) {
      std::snprintf(line, sizeof(line), "%-12s %8zu\n", dist.class_names[i].c_str(),
                    dist.counts[i]);
      text << line;
    }
    std::snprintf(line, sizeof(line), "%-12s %8zu\n", "total", dist.total);
    text << line;
  }
  emit(s, text.str(), out);
  return 0;
}

int cmd_convert(const Settings& s, std::ostream& out) {
  const Dataset ds = load(s);
  const auto& images = ds.manifest.images;
  if (s.to == "labels") {
    // Detection file -> one label file per image under --out.
    if (s.detections.size() != 1) throw ValidationError("convert --to labels needs one --detections");
    if (s.out.empty()) throw ValidationError("convert --to labels needs --out DIR");
    const auto records = load_detections(s.detections.front(), &ds.manifest);
    std::map<std::string, std::vector<GroundTruthBox>> boxes;
    for (const auto& r : records) {
      if (r.view_id != kIdentityView || r.score < s.conf) continue;
      boxes[r.image_id].push_back({r.bbox, r.class_id});
    }
    fs::create_directories(s.out);
    for (const auto& img : images) {
      const auto it = boxes.find(img.id);
      const std::vector<GroundTruthBox> empty;
      write_text_file(fs::path(s.out) / (img.id + ".txt"),
                      write_label_file(it == boxes.end() ? empty : it->second, img.width,
                                       img.height));
    }
    out << "wrote " << images.size() << " label files to " << s.out << '\n';
    return 0;
  }
  if (s.to != "jsonl") throw ValidationError("--to must be jsonl or labels");
  // Ground truth -> detection file with score 1 (a perfect replay).
  std::vector<DetectionRecord> records;
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (const auto& g : ds.ground_truth[i]) {
      DetectionRecord r;
      r.image_id = images[i].id;
      r.class_id = g.class_id;
      r.score = 1.0;
      r.bbox = g.bbox;
      records.push_back(r);
    }
  }
  std::ostringstream text;
  write_detections(text, records);
  emit(s, text.str(), out);
  return 0;
}

int cmd_evaluate(const Settings& s, std::ostream& out) {
  const Dataset ds = load(s);
  const auto detectors = build_detectors(s, ds.manifest);
  const auto report =
      evaluate(ds, make_protocol(s.protocol, s, detectors), eval_config(s), s.threads);
  emit(s, format_report(report, report_format(s.format), s.timing), out);
  return 0;
}

int cmd_pr_plot(const Settings& s, std::ostream& out) {
  const Dataset ds = load(s);
  const auto detectors = build_detectors(s, ds.manifest);
  const auto report =
      evaluate(ds, make_protocol(s.protocol, s, detectors), eval_config(s), s.threads);
  if (s.out.empty()) {
    out << pr_curves_csv(report);
    return 0;
  }
  const std::string title =
      "Precision-recall, " + s.protocol + " (" + detector_label(detectors) + ")";
  write_text_file(s.out + ".csv", pr_curves_csv(report));
  write_text_file(s.out + ".svg", pr_curves_svg(report, title));
  out << "wrote " << s.out << ".csv and " << s.out << ".svg\n";
  return 0;
}

int cmd_select(const Settings& s, std::ostream& out) {
  const Dataset ds = load(s);
  const auto detectors = build_detectors(s, ds.manifest);
  const std::size_t max_size = std::min(s.max_size, detectors.size());
  const auto selection =
      select_best_subset(detectors, ds, eval_config(s), max_size, merge_strategy(s), s.threads);
  emit(s, format_selection(selection, detectors, s.format == "json"), out);
  return 0;
}

int cmd_bench(const Settings& s, std::ostream& out) {
  const Dataset ds = load(s);
  const auto detectors = build_detectors(s, ds.manifest);
  BenchOptions opts;
  opts.warmup = s.warmup;
  opts.iterations = s.iters;
  const bool as_json = s.format == "json";
  if (s.compare) {
    std::vector<ModeRun> runs;
    runs.push_back({detectors.front()->name(), Ttna{detectors.front()}});
    runs.push_back({detectors.front()->name(), Tta{detectors.front(), tta_config(s)}});
    if (detectors.size() > 1) {
      EnsembleConfig cfg;
      cfg.members = detectors;
      cfg.merge = merge_strategy(s);
      runs.push_back({detector_label(detectors), Ttme{cfg}});
    }
    emit(s, format_comparison(compare_modes(ds, runs, eval_config(s), opts), as_json), out);
    return 0;
  }
  const auto contexts = image_contexts(ds);
  const auto result = bench_protocol(make_protocol(s.protocol, s, detectors), contexts, opts);
  emit(s, format_bench(s.protocol + ":" + detector_label(detectors), result, as_json), out);
  return 0;
}

int cmd_mosaic(const Settings& s, std::ostream& out) {
  const Dataset ds = load(s);
  if (s.ids.size() != 4) throw ValidationError("mosaic needs exactly 4 --ids");
  if (s.out.empty()) throw ValidationError("mosaic needs --out DIR");
  std::vector<LabeledSample> samples;
  bool rasters = true;
  for (const auto& id : s.ids) {
    const ImageEntry* entry = ds.manifest.find(id);
    if (entry == nullptr) throw LookupError("mosaic: unknown image id '" + id + "'");
    const auto idx = static_cast<std::size_t>(entry - ds.manifest.images.data());
    LabeledSample sample{entry->id, entry->width, entry->height, ds.ground_truth[idx], {}};
    if (entry->image_path) {
      sample.pixels = read_pgm(ds.manifest.resolve(*entry->image_path));
    } else {
      rasters = false;
    }
    samples.push_back(std::move(sample));
  }

  MosaicParams params;
  if (s.pivot.empty()) {
    params = random_mosaic_params(s.size, s.seed, s.min_visible);
  } else {
    const auto parts = split(s.pivot, ',');
    if (parts.size() != 2) throw ValidationError("--pivot must be X,Y");
    params.size = s.size;
    params.min_visible_fraction = s.min_visible;
    params.pivot_x = parse_number(parts[0], "--pivot");
    params.pivot_y = parse_number(parts[1], "--pivot");
  }
  const auto result = mosaic(samples, params);

  const fs::path dir(s.out);
  fs::create_directories(dir);
  write_text_file(dir / "mosaic.txt",
                  write_label_file(result.sample.boxes, result.sample.width, result.sample.height));
  DatasetManifest m;
  m.class_map = ds.manifest.class_map;
  ImageEntry e{"mosaic", result.sample.width, result.sample.height, fs::path("mosaic.txt"),
               std::nullopt, {"mosaic"}};
  if (rasters && result.sample.pixels) {
    write_pgm(dir / "mosaic.pgm", *result.sample.pixels);
    e.image_path = fs::path("mosaic.pgm");
  }
  m.images.push_back(e);
  write_text_file(dir / "manifest.json", write_manifest(m));

  const Point pivot = effective_pivot(params);
  nlohmann::ordered_json summary;
  summary["pivot"] = {pivot.x, pivot.y};
  summary["kept"] = result.sample.boxes.size();
  summary["dropped"] = nlohmann::ordered_json::array();
  for (const auto& d : result.dropped) {
    summary["dropped"].push_back({{"image_id", s.ids[d.sample]},
                                  {"box", d.box},
                                  {"class_id", d.class_id},
                                  {"visible_fraction", d.visible_fraction}});
  }
  out << summary.dump(2) << '\n';
  return 0;
}

void add_eval_options(CLI::App* sub, Settings& s) {
  sub->add_option("--detections", s.detections, "Detection file (repeatable)");
  sub->add_option("--mock", s.mocks, "Mock detector spec key=value,... (repeatable)");
  sub->add_option("--iou-thresh", s.iou, "IoU threshold for matching")->capture_default_str();
  sub->add_option("--conf-thresh", s.conf, "Confidence threshold for P/R")
      ->capture_default_str();
  sub->add_option("--ap-mode", s.ap_mode, "all-point or trapezoid")->capture_default_str();
  sub->add_option("--threads", s.threads, "Worker threads")->capture_default_str();
  sub->add_option("--view", s.views, "TTA view id (repeatable, default 4-view set)");
  sub->add_option("--merge", s.merge, "nms or wbf")->capture_default_str();
  sub->add_option("--merge-iou", s.merge_iou, "IoU threshold for fusion")
      ->capture_default_str();
}

}  // namespace

int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  Settings s;
  CLI::App app{"Thermal object-detection evaluation toolkit", "thermeval"};
  app.require_subcommand(1, 1);

  auto common = [&](CLI::App* sub) {
    sub->add_option("--manifest", s.manifest, "Dataset manifest (JSON)");
    sub->add_option("--config", s.config, "Run configuration (JSON)");
    sub->add_option("--seed", s.seed, "Run seed")->capture_default_str();
    sub->add_option("--out", s.out, "Output path");
    sub->add_option("--format", s.format, "json, table or csv")
        ->check(CLI::IsMember({"json", "table", "csv"}))
        ->capture_default_str();
  };

  auto* convert = app.add_subcommand("convert", "Convert ground truth or detections");
  common(convert);
  convert->add_option("--detections", s.detections, "Detection file to convert");
  convert->add_option("--to", s.to, "jsonl (ground truth as detections) or labels")
      ->capture_default_str();
  convert->add_option("--conf-thresh", s.conf, "Minimum score kept when writing labels")
      ->capture_default_str();

  auto* stats = app.add_subcommand("stats", "Per-class annotation counts");
  common(stats);

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Evaluate a protocol");
  common(evaluate_cmd);
  add_eval_options(evaluate_cmd, s);
  evaluate_cmd->add_option("--protocol", s.protocol, "ttna, tta or ttme")->capture_default_str();
  evaluate_cmd->add_flag("--timing", s.timing, "Include latency in the report");

  auto* tta_cmd = app.add_subcommand("tta-eval", "Evaluate with test-time augmentation");
  common(tta_cmd);
  add_eval_options(tta_cmd, s);
  tta_cmd->add_flag("--timing", s.timing, "Include latency in the report");

  auto* ens_cmd = app.add_subcommand("ensemble-eval", "Evaluate an ensemble of detectors");
  common(ens_cmd);
  add_eval_options(ens_cmd, s);
  ens_cmd->add_flag("--timing", s.timing, "Include latency in the report");

  auto* select_cmd = app.add_subcommand("select-ensemble", "Search the best detector subset");
  common(select_cmd);
  add_eval_options(select_cmd, s);
  select_cmd->add_option("--max-size", s.max_size, "Largest subset size")->capture_default_str();

  auto* mosaic_cmd = app.add_subcommand("mosaic", "Compose four labeled images");
  common(mosaic_cmd);
  mosaic_cmd->add_option("--ids", s.ids, "Four image ids (TL TR BL BR)")->delimiter(',');
  mosaic_cmd->add_option("--pivot", s.pivot, "Pivot X,Y (random from --seed if omitted)");
  mosaic_cmd->add_option("--size", s.size, "Output side length")->capture_default_str();
  mosaic_cmd->add_option("--min-visible", s.min_visible, "Drop threshold")
      ->capture_default_str();

  auto* bench_cmd = app.add_subcommand("bench", "Latency benchmark");
  common(bench_cmd);
  add_eval_options(bench_cmd, s);
  bench_cmd->add_option("--protocol", s.protocol, "ttna, tta or ttme")->capture_default_str();
  bench_cmd->add_option("--warmup", s.warmup, "Unmeasured passes")->capture_default_str();
  bench_cmd->add_option("--iters", s.iters, "Measured passes")->capture_default_str();
  bench_cmd->add_flag("--compare", s.compare, "Compare TTNA, TTA and TTME");

  auto* pr_cmd = app.add_subcommand("pr-plot", "Per-class PR curves as CSV and SVG");
  common(pr_cmd);
  add_eval_options(pr_cmd, s);
  pr_cmd->add_option("--protocol", s.protocol, "ttna, tta or ttme")->capture_default_str();

  std::vector<std::string> argv_storage;
  argv_storage.emplace_back("thermeval");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return 0;
    err << app.help();
    return 1;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    apply_config(sub, s);
    if (sub == tta_cmd) s.protocol = "tta";
    if (sub == ens_cmd) s.protocol = "ttme";
    if (sub == convert) return cmd_convert(s, out);
    if (sub == stats) return cmd_stats(s, out);
    if (sub == select_cmd) return cmd_select(s, out);
    if (sub == mosaic_cmd) return cmd_mosaic(s, out);
    if (sub == bench_cmd) return cmd_bench(s, out);
    if (sub == pr_cmd) return cmd_pr_plot(s, out);
    return cmd_evaluate(s, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::kIo ? 2 : 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace thermeval
