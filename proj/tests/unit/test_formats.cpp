#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "thermeval/error.hpp"
#include "thermeval/formats.hpp"

using namespace thermeval;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("thermeval_formats_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

DatasetManifest two_image_manifest() {
  DatasetManifest m;
  m.images.push_back({"a", 640, 480, {}, {}, {}});
  m.images.push_back({"b", 320, 240, {}, {}, {"night"}});
  return m;
}

}  // namespace

TEST(ClassMap, DefaultThermalClasses) {
  const auto m = ClassMap::thermal_default();
  ASSERT_EQ(m.size(), 7u);
  const std::vector<std::string> expected{"bicycle", "bike", "bus", "car",
                                          "dog", "person", "pole"};
  EXPECT_EQ(m.names(), expected);
  EXPECT_EQ(m.id_of("car"), 3);
  EXPECT_EQ(m.id_of("person"), 5);
  EXPECT_EQ(m.id_of("pole"), 6);
  EXPECT_FALSE(m.id_of("truck"));
}

TEST(ClassMap, RejectsDuplicatesAndEmptyNames) {
  EXPECT_THROW(ClassMap({"car", "car"}), ValidationError);
  EXPECT_THROW(ClassMap({"car", ""}), ValidationError);
}

TEST(LabelFile, CenterToCorners) {
  const auto boxes = parse_label_file("3 0.5 0.5 0.2 0.2\n", 640, 480, ClassMap::thermal_default());
  ASSERT_EQ(boxes.size(), 1u);
  EXPECT_EQ(boxes[0].class_id, 3);
  EXPECT_EQ(boxes[0].bbox, (BBox{256, 192, 384, 288}));
}

TEST(LabelFile, FullCanvasBox) {
  const auto boxes = parse_label_file("5 0.5 0.5 1.0 1.0", 333, 217, ClassMap::thermal_default());
  ASSERT_EQ(boxes.size(), 1u);
  EXPECT_EQ(boxes[0].class_id, 5);
  EXPECT_EQ(boxes[0].bbox, (BBox{0, 0, 333, 217}));
}

TEST(LabelFile, ClassOutOfRangeNamesLine) {
  try {
    parse_label_file("3 0.5 0.5 0.1 0.1\n\n7 0.5 0.5 0.2 0.2\n", 640, 480,
                     ClassMap::thermal_default());
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("class id out of range"), std::string::npos);
  }
}

TEST(LabelFile, MalformedLinesRejected) {
  const auto cm = ClassMap::thermal_default();
  EXPECT_THROW(parse_label_file("3 0.5 0.5 0.2", 10, 10, cm), ParseError);
  EXPECT_THROW(parse_label_file("3 0.5 0.5 0.2 0.2 0.1", 10, 10, cm), ParseError);
  EXPECT_THROW(parse_label_file("3 0.5 x 0.2 0.2", 10, 10, cm), ParseError);
  EXPECT_THROW(parse_label_file("3 0.5 0.5 1.1 0.2", 10, 10, cm), ParseError);
  EXPECT_THROW(parse_label_file("-1 0.5 0.5 0.2 0.2", 10, 10, cm), ParseError);
  EXPECT_THROW(parse_label_file("3 0.5 0.5 0.2 0.2", 0, 10, cm), ValidationError);
}

TEST(LabelFile, SlackIsClampedAndBoxesStayInCanvas) {
  const auto cm = ClassMap::thermal_default();
  const auto boxes = parse_label_file("1 1.0000005 0.5 0.2 0.2\n2 0.05 0.95 0.3 0.3\n", 100, 100, cm);
  ASSERT_EQ(boxes.size(), 2u);
  for (const auto& b : boxes) {
    EXPECT_GE(b.bbox.x_min, 0.0);
    EXPECT_GE(b.bbox.y_min, 0.0);
    EXPECT_LE(b.bbox.x_max, 100.0);
    EXPECT_LE(b.bbox.y_max, 100.0);
  }
}

TEST(LabelFile, WriteThenParseRoundTrips) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<GroundTruthBox> boxes;
  for (int i = 0; i < 500; ++i) {
    const double a = u(gen) * 640, b = u(gen) * 640, c = u(gen) * 512, d = u(gen) * 512;
    boxes.push_back({{std::min(a, b), std::min(c, d), std::max(a, b), std::max(c, d)}, i % 7});
  }
  const auto back = parse_label_file(write_label_file(boxes, 640, 512), 640, 512,
                                     ClassMap::thermal_default());
  ASSERT_EQ(back.size(), boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    EXPECT_EQ(back[i].class_id, boxes[i].class_id);
    EXPECT_NEAR(back[i].bbox.x_min / 640, boxes[i].bbox.x_min / 640, 1e-6);
    EXPECT_NEAR(back[i].bbox.y_min / 512, boxes[i].bbox.y_min / 512, 1e-6);
    EXPECT_NEAR(back[i].bbox.x_max / 640, boxes[i].bbox.x_max / 640, 1e-6);
    EXPECT_NEAR(back[i].bbox.y_max / 512, boxes[i].bbox.y_max / 512, 1e-6);
  }
}

TEST(Manifest, ParseWriteParse) {
  const std::string text = R"({"classes": ["car", "person"],
    "images": [{"id": "x", "width": 64, "height": 32, "labels": "x.txt", "tags": ["day", "rain"]},
               {"id": "y", "width": 10, "height": 10, "image": "y.pgm"}]})";
  const auto m = parse_manifest(text, "/data");
  EXPECT_EQ(m.class_map.names(), (std::vector<std::string>{"car", "person"}));
  ASSERT_EQ(m.images.size(), 2u);
  EXPECT_EQ(m.images[0].tags, (std::vector<std::string>{"day", "rain"}));
  EXPECT_EQ(m.resolve(*m.images[0].label_path), fs::path("/data/x.txt"));
  EXPECT_EQ(m.find("y")->image_path, fs::path("y.pgm"));
  EXPECT_EQ(m.find("z"), nullptr);
  const auto again = parse_manifest(write_manifest(m), "/data");
  EXPECT_EQ(again.images.size(), 2u);
  EXPECT_EQ(again.images[1].width, 10);
  EXPECT_EQ(again.images[0].label_path, m.images[0].label_path);
}

TEST(Manifest, RejectsDuplicatesAndBadSizes) {
  EXPECT_THROW(parse_manifest(R"({"images": [{"id": "a", "width": 1, "height": 1},
                                            {"id": "a", "width": 1, "height": 1}]})"),
               ParseError);
  EXPECT_THROW(parse_manifest(R"({"images": [{"id": "a", "width": 0, "height": 1}]})"),
               ParseError);
  EXPECT_THROW(parse_manifest("not json"), ParseError);
}

TEST(Detections, EmptyStream) {
  std::istringstream in("");
  EXPECT_TRUE(read_detections(in, nullptr).empty());
}

TEST(Detections, SingleRecordRoundTrip) {
  const DetectionRecord rec{"a", "hflip", 3, 0.875, {1.5, 2.25, 100.125, 200.0}};
  std::stringstream s;
  write_detections(s, std::vector<DetectionRecord>{rec});
  const auto m = two_image_manifest();
  const auto back = read_detections(s, &m);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0], rec);
}

TEST(Detections, ThousandRandomRecordsRoundTrip) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<DetectionRecord> recs;
  for (int i = 0; i < 1000; ++i) {
    const double a = u(gen) * 640, b = u(gen) * 640, c = u(gen) * 480, d = u(gen) * 480;
    recs.push_back({i % 2 ? "a" : "b", i % 5 ? "identity" : "shift:32,0", i % 7, u(gen),
                    {std::min(a, b), std::min(c, d), std::max(a, b), std::max(c, d)}});
  }
  std::stringstream s;
  write_detections(s, recs);
  const auto m = two_image_manifest();
  const auto back = read_detections(s, &m);
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(back[i].image_id, recs[i].image_id);
    EXPECT_EQ(back[i].view_id, recs[i].view_id);
    EXPECT_EQ(back[i].class_id, recs[i].class_id);
    EXPECT_NEAR(back[i].score, recs[i].score, 1e-9);
    EXPECT_NEAR(back[i].bbox.x_min, recs[i].bbox.x_min, 1e-9);
    EXPECT_NEAR(back[i].bbox.y_max, recs[i].bbox.y_max, 1e-9);
  }
}

TEST(Detections, UnknownImagesListedTogether) {
  std::istringstream in(
      R"({"image_id": "zz", "class_id": 0, "score": 0.5, "bbox": [0, 0, 1, 1]}
{"image_id": "a", "class_id": 0, "score": 0.5, "bbox": [0, 0, 1, 1]}
{"image_id": "qq", "class_id": 0, "score": 0.5, "bbox": [0, 0, 1, 1]}
)");
  const auto m = two_image_manifest();
  try {
    read_detections(in, &m);
    FAIL() << "expected a lookup error";
  } catch (const LookupError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("zz"), std::string::npos);
    EXPECT_NE(msg.find("qq"), std::string::npos);
  }
}

TEST(Detections, MalformedRecordNamesLine) {
  std::istringstream in(
      "{\"image_id\": \"a\", \"class_id\": 0, \"score\": 0.5, \"bbox\": [0, 0, 1, 1]}\n"
      "{\"image_id\": \"a\", \"class_id\": 0, \"score\": 1.5, \"bbox\": [0, 0, 1, 1]}\n");
  try {
    read_detections(in, nullptr);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::istringstream bad_box("{\"image_id\": \"a\", \"class_id\": 0, \"score\": 0.5, \"bbox\": [5, 0, 1, 1]}\n");
  EXPECT_THROW(read_detections(bad_box, nullptr), ParseError);
  std::istringstream not_json("{oops\n");
  EXPECT_THROW(read_detections(not_json, nullptr), ParseError);
}

TEST(Detections, MissingFileIsIoError) {
  EXPECT_THROW(load_detections("/nonexistent/dets.jsonl", nullptr), IoError);
}

TEST(ClassDistribution, EmptyManifestIsAllZero) {
  DatasetManifest m;
  const auto d = class_distribution(m);
  EXPECT_EQ(d.counts, std::vector<std::size_t>(7, 0));
  EXPECT_EQ(d.total, 0u);
}

TEST(ClassDistribution, CountsTwoCars) {
  const auto dir = scratch_dir("two_cars");
  write_text_file(dir / "one.txt", "3 0.5 0.5 0.1 0.1\n3 0.2 0.2 0.1 0.1\n");
  DatasetManifest m;
  m.base_dir = dir;
  m.images.push_back({"one", 100, 100, fs::path("one.txt"), {}, {}});
  const auto d = class_distribution(m);
  EXPECT_EQ(d.counts[3], 2u);
  EXPECT_EQ(d.total, 2u);
}

TEST(ClassDistribution, ParseErrorsCarryPath) {
  const auto dir = scratch_dir("bad_label");
  write_text_file(dir / "bad.txt", "9 0.5 0.5 0.1 0.1\n");
  DatasetManifest m;
  m.base_dir = dir;
  m.images.push_back({"bad", 100, 100, fs::path("bad.txt"), {}, {}});
  try {
    class_distribution(m);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.txt"), std::string::npos);
    EXPECT_EQ(e.line(), 1u);
  }
}

TEST(ClassDistribution, TotalIsSumOfCounts) {
  const auto dir = scratch_dir("sum");
  std::mt19937_64 gen(2);
  DatasetManifest m;
  m.base_dir = dir;
  for (int i = 0; i < 20; ++i) {
    std::string text;
    for (int k = 0; k < i; ++k) text += std::to_string(gen() % 7) + " 0.5 0.5 0.1 0.1\n";
    const std::string name = "f" + std::to_string(i) + ".txt";
    write_text_file(dir / name, text);
    m.images.push_back({"f" + std::to_string(i), 50, 50, fs::path(name), {}, {}});
  }
  const auto d = class_distribution(m);
  std::size_t sum = 0;
  for (auto c : d.counts) sum += c;
  EXPECT_EQ(sum, d.total);
  EXPECT_EQ(d.total, 190u);
}

TEST(Pgm, WriteReadRoundTrip) {
  const auto dir = scratch_dir("pgm");
  GrayImage img{5, 3, {}};
  for (int i = 0; i < 15; ++i) img.pixels.push_back(static_cast<std::uint8_t>(i * 17));
  write_pgm(dir / "x.pgm", img);
  EXPECT_EQ(read_pgm(dir / "x.pgm"), img);
  EXPECT_THROW(read_pgm(dir / "missing.pgm"), IoError);
  write_text_file(dir / "bad.pgm", "P2\n1 1\n255\n0\n");
  EXPECT_THROW(read_pgm(dir / "bad.pgm"), ParseError);
}
