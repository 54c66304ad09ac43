#include "thermeval/formats.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "thermeval/error.hpp"

namespace thermeval {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr double kNormalizedSlack = 1e-6;

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    std::size_t end = pos;
    while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) ++end;
    if (end > pos) fields.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  return fields;
}

template <typename T>
std::optional<T> parse_number(std::string_view text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return value;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

ClassMap::ClassMap(std::vector<std::string> names) : names_(std::move(names)) {
  std::unordered_set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw ValidationError("class names must be non-empty");
    if (!seen.insert(n).second) {
      throw ValidationError("duplicate class name '" + n + "'");
    }
  }
}

ClassMap ClassMap::thermal_default() {
  return ClassMap({"bicycle", "bike", "bus", "car", "dog", "person", "pole"});
}

const std::string& ClassMap::name(int class_id) const {
  if (!contains(class_id)) {
    throw ValidationError("class id " + std::to_string(class_id) + " out of range");
  }
  return names_[static_cast<std::size_t>(class_id)];
}

std::optional<int> ClassMap::id_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

const ImageEntry* DatasetManifest::find(std::string_view image_id) const noexcept {
  for (const auto& img : images) {
    if (img.id == image_id) return &img;
  }
  return nullptr;
}

std::filesystem::path DatasetManifest::resolve(const std::filesystem::path& p) const {
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

DatasetManifest parse_manifest(std::string_view text, std::filesystem::path base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("manifest must be a JSON object");

  DatasetManifest manifest;
  manifest.base_dir = std::move(base_dir);
  try {
    if (doc.contains("classes")) {
      manifest.class_map = ClassMap(doc.at("classes").get<std::vector<std::string>>());
    }
    if (!doc.contains("images")) throw ParseError("manifest has no 'images' array");
    std::unordered_set<std::string> ids;
    for (const auto& item : doc.at("images")) {
      ImageEntry entry;
      entry.id = item.at("id").get<std::string>();
      entry.width = item.at("width").get<int>();
      entry.height = item.at("height").get<int>();
      if (entry.width <= 0 || entry.height <= 0) {
        throw ParseError("image '" + entry.id + "' must have positive width and height");
      }
      if (!ids.insert(entry.id).second) {
        throw ParseError("duplicate image id '" + entry.id + "'");
      }
      if (item.contains("labels") && !item.at("labels").is_null()) {
        entry.label_path = item.at("labels").get<std::string>();
      }
      if (item.contains("image") && !item.at("image").is_null()) {
        entry.image_path = item.at("image").get<std::string>();
      }
      if (item.contains("tags")) entry.tags = item.at("tags").get<std::vector<std::string>>();
      manifest.images.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed manifest: ") + e.what());
  } catch (const ValidationError& e) {
    throw ParseError(std::string("malformed manifest: ") + e.what());
  }
  return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return parse_manifest(text, path.parent_path());
  } catch (const Error& e) {
    rethrow_with_context(e, path.string());
  }
}

std::string write_manifest(const DatasetManifest& manifest) {
  ordered_json doc;
  doc["classes"] = manifest.class_map.names();
  doc["images"] = ordered_json::array();
  for (const auto& img : manifest.images) {
    ordered_json item;
    item["id"] = img.id;
    item["width"] = img.width;
    item["height"] = img.height;
    if (img.label_path) item["labels"] = img.label_path->generic_string();
    if (img.image_path) item["image"] = img.image_path->generic_string();
    if (!img.tags.empty()) item["tags"] = img.tags;
    doc["images"].push_back(std::move(item));
  }
  return doc.dump(2) + "\n";
}

std::vector<GroundTruthBox> parse_label_file(std::string_view text, int image_width,
                                             int image_height,
                                             const ClassMap& class_map) {
  if (image_width <= 0 || image_height <= 0) {
    throw ValidationError("label parsing needs a positive canvas");
  }
  const double w = image_width;
  const double h = image_height;
  std::vector<GroundTruthBox> boxes;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    const auto fields = split_fields(line);
    if (fields.empty()) continue;
    auto fail = [&](const std::string& what) -> ParseError {
      return ParseError("line " + std::to_string(line_no) + ": " + what, line_no);
    };
    if (fields.size() != 5) {
      throw fail("expected 5 fields, got " + std::to_string(fields.size()));
    }
    const auto class_id = parse_number<int>(fields[0]);
    if (!class_id) throw fail("class id '" + std::string(fields[0]) + "' is not an integer");
    if (!class_map.contains(*class_id)) {
      throw fail("class id out of range (" + std::to_string(*class_id) + ")");
    }
    double v[4];
    for (int i = 0; i < 4; ++i) {
      const auto parsed = parse_number<double>(fields[i + 1]);
      if (!parsed || !std::isfinite(*parsed)) {
        throw fail("value '" + std::string(fields[i + 1]) + "' is not a number");
      }
      if (*parsed < -kNormalizedSlack || *parsed > 1.0 + kNormalizedSlack) {
        throw fail("value " + std::string(fields[i + 1]) + " outside [0,1]");
      }
      v[i] = std::clamp(*parsed, 0.0, 1.0);
    }
    const double cx = v[0] * w;
    const double cy = v[1] * h;
    const double half_w = v[2] * w / 2.0;
    const double half_h = v[3] * h / 2.0;
    BBox box{std::clamp(cx - half_w, 0.0, w), std::clamp(cy - half_h, 0.0, h),
             std::clamp(cx + half_w, 0.0, w), std::clamp(cy + half_h, 0.0, h)};
    boxes.push_back({box, *class_id});
  }
  return boxes;
}

std::string write_label_file(std::span<const GroundTruthBox> boxes, int image_width,
                             int image_height) {
  const double w = image_width;
  const double h = image_height;
  std::string out;
  for (const auto& gt : boxes) {
    const auto& b = gt.bbox;
    out += std::to_string(gt.class_id);
    for (double v : {(b.x_min + b.x_max) / 2.0 / w, (b.y_min + b.y_max) / 2.0 / h,
                     b.width() / w, b.height() / h}) {
      out += ' ';
      out += format_number(v);
    }
    out += '\n';
  }
  return out;
}

std::vector<GroundTruthBox> load_labels(const DatasetManifest& manifest,
                                        const ImageEntry& entry) {
  if (!entry.label_path) return {};
  const auto path = manifest.resolve(*entry.label_path);
  const std::string text = read_text_file(path);
  try {
    return parse_label_file(text, entry.width, entry.height, manifest.class_map);
  } catch (const Error& e) {
    rethrow_with_context(e, path.string());
  }
}

Dataset load_dataset(DatasetManifest manifest) {
  Dataset ds;
  ds.ground_truth.reserve(manifest.images.size());
  for (const auto& entry : manifest.images) {
    ds.ground_truth.push_back(load_labels(manifest, entry));
  }
  ds.manifest = std::move(manifest);
  return ds;
}

std::vector<DetectionRecord> read_detections(std::istream& in,
                                             const DatasetManifest* manifest) {
  std::vector<DetectionRecord> records;
  std::set<std::string> unknown_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (split_fields(line).empty()) continue;
    auto fail = [&](const std::string& what) -> ParseError {
      return ParseError("line " + std::to_string(line_no) + ": " + what, line_no);
    };
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error&) {
      throw fail("record is not valid JSON");
    }
    DetectionRecord rec;
    try {
      rec.image_id = doc.at("image_id").get<std::string>();
      rec.class_id = doc.at("class_id").get<int>();
      rec.score = doc.at("score").get<double>();
      const auto& bbox = doc.at("bbox");
      if (!bbox.is_array() || bbox.size() != 4) throw fail("bbox must hold 4 numbers");
      rec.bbox = {bbox[0].get<double>(), bbox[1].get<double>(), bbox[2].get<double>(),
                  bbox[3].get<double>()};
      if (doc.contains("view_id")) rec.view_id = doc.at("view_id").get<std::string>();
    } catch (const json::exception& e) {
      throw fail(std::string("malformed record: ") + e.what());
    }
    if (!rec.bbox.valid()) throw fail("bbox is not a valid corner box");
    if (!(rec.score >= 0.0 && rec.score <= 1.0)) throw fail("score outside [0,1]");
    if (rec.view_id.empty()) throw fail("empty view_id");
    if (manifest != nullptr) {
      if (!manifest->class_map.contains(rec.class_id)) {
        throw fail("class id out of range (" + std::to_string(rec.class_id) + ")");
      }
      if (manifest->find(rec.image_id) == nullptr) unknown_ids.insert(rec.image_id);
    } else if (rec.class_id < 0) {
      throw fail("negative class id");
    }
    records.push_back(std::move(rec));
  }
  if (!unknown_ids.empty()) {
    std::string ids;
    for (const auto& id : unknown_ids) {
      if (!ids.empty()) ids += ", ";
      ids += id;
    }
    throw LookupError("detections reference unknown image ids: " + ids);
  }
  return records;
}

std::vector<DetectionRecord> load_detections(const std::filesystem::path& path,
                                             const DatasetManifest* manifest) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open detection file " + path.string());
  try {
    return read_detections(in, manifest);
  } catch (const Error& e) {
    rethrow_with_context(e, path.string());
  }
}

void write_detections(std::ostream& out, std::span<const DetectionRecord> records) {
  for (const auto& rec : records) {
    ordered_json doc;
    doc["image_id"] = rec.image_id;
    doc["class_id"] = rec.class_id;
    doc["score"] = rec.score;
    doc["bbox"] = {rec.bbox.x_min, rec.bbox.y_min, rec.bbox.x_max, rec.bbox.y_max};
    if (rec.view_id != kIdentityView) doc["view_id"] = rec.view_id;
    out << doc.dump() << '\n';
  }
}

ClassDistribution class_distribution(const DatasetManifest& manifest) {
  ClassDistribution dist;
  dist.class_names = manifest.class_map.names();
  dist.counts.assign(manifest.class_map.size(), 0);
  for (const auto& entry : manifest.images) {
    for (const auto& gt : load_labels(manifest, entry)) {
      ++dist.counts[static_cast<std::size_t>(gt.class_id)];
      ++dist.total;
    }
  }
  return dist;
}

namespace {

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(std::istream& in) {
  std::string token;
  char c = 0;
  while (in.get(c)) {
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!token.empty()) break;
      continue;
    }
    token += c;
  }
  return token;
}

}  // namespace

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image " + path.string());
  if (pgm_token(in) != "P5") throw ParseError(path.string() + ": not a binary PGM (P5)");
  const auto width = parse_number<int>(pgm_token(in));
  const auto height = parse_number<int>(pgm_token(in));
  const auto maxval = parse_number<int>(pgm_token(in));
  if (!width || !height || !maxval || *width <= 0 || *height <= 0 || *maxval <= 0 ||
      *maxval > 255) {
    throw ParseError(path.string() + ": unsupported PGM header");
  }
  GrayImage img{*width, *height, {}};
  img.pixels.resize(static_cast<std::size_t>(*width) * static_cast<std::size_t>(*height));
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
    throw ParseError(path.string() + ": truncated PGM raster");
  }
  return img;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write image " + path.string());
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw IoError("failed writing image " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace thermeval
