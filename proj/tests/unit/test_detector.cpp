#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "oracle.hpp"
#include "thermeval/detector.hpp"
#include "thermeval/error.hpp"
#include "thermeval/rng.hpp"
#include "thermeval/tta.hpp"

using namespace thermeval;

namespace {

const std::vector<GroundTruthBox> kThree{
    {{10, 10, 50, 60}, 3}, {{100, 40, 180, 90}, 5}, {{300, 200, 340, 300}, 6}};

std::vector<Detection> noiseless(const std::vector<GroundTruthBox>& gts) {
  std::vector<Detection> out;
  for (const auto& g : gts) out.push_back({g.bbox, g.class_id, 1.0});
  return out;
}

std::vector<Detection> run_mock(const MockNoise& noise, const std::vector<GroundTruthBox>& gts,
                                const std::string& image = "img",
                                const std::string& view = "identity") {
  return mock_detect(gts, AffineTransform::identity(), {640, 512}, noise, {image, view});
}

}  // namespace

TEST(Rng, SplitMixKnownAnswer) {
  SplitMix64 sm(0);
  EXPECT_EQ(sm.next(), 0xE220A8397B1DCDAFULL);
}

TEST(Rng, StreamsMatchReference) {
  for (std::uint64_t seed : {0ULL, 1ULL, 42ULL, 0xDEADBEEFULL}) {
    Xoshiro256 a(seed);
    oracle::RefXoshiro b(seed);
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next(), b.next());
  }
  oracle::RefXoshiro ref(1, 2, 3, 4);
  EXPECT_EQ(ref.next(), 11520u);
}

TEST(Rng, ViewSeedMatchesReference) {
  for (std::uint64_t g : {0ULL, 7ULL, 123456789ULL}) {
    for (const char* view : {"identity", "hflip", "crop:0.05,0.05,0.95,0.95:rel:rescale"}) {
      EXPECT_EQ(view_seed(g, "frame_001", view), oracle::ref_view_seed(g, "frame_001", view));
    }
  }
  EXPECT_NE(view_seed(1, "a", "identity"), view_seed(1, "a", "hflip"));
  EXPECT_NE(view_seed(1, "ab", "c"), view_seed(1, "a", "bc"));
}

TEST(Rng, UniformAndPoissonMoments) {
  Xoshiro256 rng(99);
  double sum = 0.0;
  double pois = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    pois += static_cast<double>(rng.poisson(3.0));
  }
  EXPECT_NEAR(sum / 100000, 0.5, 0.01);
  EXPECT_NEAR(pois / 100000, 3.0, 0.03);
  EXPECT_EQ(rng.poisson(0.0), 0u);
}

TEST(FileDetector, ReplaysStoredRecords) {
  const std::vector<DetectionRecord> recs{
      {"img1", "identity", 3, 0.9, {0, 0, 10, 10}},
      {"img1", "identity", 5, 0.4, {5, 5, 20, 20}},
      {"img1", "hflip", 3, 0.8, {630, 0, 640, 10}},
      {"img2", "identity", 1, 0.7, {1, 1, 2, 2}}};
  FileDetector fd("replay", recs, {"img1", "img2", "img3"});
  const std::vector<GroundTruthBox> none;
  const ImageContext img1{"img1", {640, 512}, none};
  const auto out = detect(fd, img1, {"img1", "identity"}, AffineTransform::identity(), {640, 512});
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0], recs[0].detection());
  EXPECT_EQ(out[1], recs[1].detection());

  EXPECT_TRUE(fd.supports_transformed_views());
  EXPECT_TRUE(fd.supports_view("hflip"));
  EXPECT_EQ(detect(fd, img1, {"img1", "hflip"}, AffineTransform::horizontal_flip(640), {640, 512})
                .size(),
            1u);
  EXPECT_THROW(detect(fd, img1, {"img1", "vflip"}, AffineTransform::vertical_flip(512), {640, 512}),
               CapabilityError);

  const ImageContext img3{"img3", {640, 512}, none};
  EXPECT_TRUE(detect(fd, img3, {"img3", "identity"}, AffineTransform::identity(), {640, 512}).empty());
  const ImageContext img9{"img9", {640, 512}, none};
  EXPECT_THROW(detect(fd, img9, {"img9", "identity"}, AffineTransform::identity(), {640, 512}),
               LookupError);
}

TEST(FileDetector, IdentityOnlyStoreRefusesTta) {
  const std::vector<DetectionRecord> recs{{"a", "identity", 0, 0.5, {0, 0, 1, 1}}};
  FileDetector fd("plain", recs);
  EXPECT_FALSE(fd.supports_transformed_views());
  const std::vector<GroundTruthBox> none;
  EXPECT_THROW(tta_detect(fd, {"a", {640, 512}, none}, TtaConfig{}), CapabilityError);
}

TEST(MockDetector, NoiselessIdentityReturnsGroundTruth) {
  EXPECT_EQ(run_mock(MockNoise{}, kThree), noiseless(kThree));
}

TEST(MockDetector, NoiselessFollowsViewTransform) {
  const auto t = AffineTransform::horizontal_flip(640);
  const auto out = mock_detect(kThree, t, {640, 512}, MockNoise{}, {"img", "hflip"});
  ASSERT_EQ(out.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(out[i].bbox, transform_box(t, kThree[i].bbox));
    EXPECT_EQ(out[i].score, 1.0);
  }
}

TEST(MockDetector, NoiselessInverseMappingRecoversGroundTruth) {
  const std::vector<TransformSpec> specs{HFlip{}, VFlip{}, Shift{24, -8, false},
                                         Scale{2, 0.5}, Crop{{5, 5, 400, 320}, true, false}};
  for (const auto& spec : specs) {
    const Size canvas{640, 512};
    const auto view = mock_detect(kThree, view_transform(spec, canvas), view_canvas(spec, canvas),
                                  MockNoise{}, {"img", view_id(spec)});
    const auto back = inverse_map(view, spec, canvas, 0.0);
    ASSERT_EQ(back.size(), kThree.size()) << view_id(spec);
    for (std::size_t i = 0; i < back.size(); ++i) {
      EXPECT_NEAR(back[i].bbox.x_min, kThree[i].bbox.x_min, 1e-9);
      EXPECT_NEAR(back[i].bbox.y_min, kThree[i].bbox.y_min, 1e-9);
      EXPECT_NEAR(back[i].bbox.x_max, kThree[i].bbox.x_max, 1e-9);
      EXPECT_NEAR(back[i].bbox.y_max, kThree[i].bbox.y_max, 1e-9);
    }
  }
}

TEST(MockDetector, AlwaysMissIsEmpty) {
  MockNoise n;
  n.p_miss = 1.0;
  EXPECT_TRUE(run_mock(n, kThree).empty());
}

TEST(MockDetector, HalfMissMatchesReferenceDrawOrder) {
  const std::vector<GroundTruthBox> four{
      {{0, 0, 10, 10}, 0}, {{20, 0, 30, 10}, 1}, {{40, 0, 50, 10}, 2}, {{60, 0, 70, 10}, 3}};
  MockNoise n;
  n.p_miss = 0.5;
  for (std::uint64_t seed = 0; seed < 64; ++seed) {
    n.global_seed = seed;
    const auto out = run_mock(n, four, "frame", "identity");
    const auto expected = oracle::ref_mock_survivors(4, 0.5, seed, "frame", "identity");
    ASSERT_EQ(out.size(), expected.size()) << "seed " << seed;
    for (std::size_t k = 0; k < expected.size(); ++k) {
      EXPECT_EQ(out[k].class_id, four[expected[k]].class_id);
    }
  }
}

TEST(MockDetector, FalsePositiveRateMatchesPoissonMean) {
  MockNoise n;
  n.fp_rate = 2.0;
  n.global_seed = 17;
  const std::vector<GroundTruthBox> none;
  std::size_t total = 0;
  for (int i = 0; i < 10000; ++i) total += run_mock(n, none, "v" + std::to_string(i)).size();
  EXPECT_NEAR(static_cast<double>(total) / 10000.0, 2.0, 0.05);
}

TEST(MockDetector, FalsePositivesRespectRanges) {
  MockNoise n;
  n.fp_rate = 5.0;
  n.fp_score_lo = 0.1;
  n.fp_score_hi = 0.3;
  n.fp_classes = 2;
  const std::vector<GroundTruthBox> none;
  for (int i = 0; i < 200; ++i) {
    for (const auto& d : run_mock(n, none, "x" + std::to_string(i))) {
      EXPECT_GE(d.score, 0.1);
      EXPECT_LE(d.score, 0.3);
      EXPECT_TRUE(d.class_id == 0 || d.class_id == 1);
      EXPECT_GE(d.bbox.x_min, 0.0);
      EXPECT_LE(d.bbox.x_max, 640.0);
    }
  }
}

TEST(MockDetector, DeterministicPerView) {
  MockNoise n;
  n.p_miss = 0.3;
  n.jitter_sigma = 2.0;
  n.fp_rate = 1.0;
  n.score_lo = 0.5;
  n.global_seed = 5;
  EXPECT_EQ(run_mock(n, kThree, "a", "hflip"), run_mock(n, kThree, "a", "hflip"));
}

TEST(MockDetector, JitteredBoxesStayInCanvas) {
  MockNoise n;
  n.jitter_sigma = 30.0;
  const std::vector<GroundTruthBox> edge{{{0, 0, 20, 20}, 0}, {{620, 490, 640, 512}, 1}};
  for (std::uint64_t s = 0; s < 200; ++s) {
    n.global_seed = s;
    for (const auto& d : run_mock(n, edge)) {
      EXPECT_TRUE(d.bbox.valid());
      EXPECT_GE(d.bbox.x_min, 0.0);
      EXPECT_GE(d.bbox.y_min, 0.0);
      EXPECT_LE(d.bbox.x_max, 640.0);
      EXPECT_LE(d.bbox.y_max, 512.0);
    }
  }
}

TEST(MockDetector, MissPatternsIndependentAcrossViews) {
  MockNoise n;
  n.p_miss = 0.5;
  n.global_seed = 2024;
  const std::vector<GroundTruthBox> one{{{10, 10, 20, 20}, 0}};
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  const int trials = 10000;
  for (int i = 0; i < trials; ++i) {
    const std::string id = "t" + std::to_string(i);
    const double x = run_mock(n, one, id, "identity").empty() ? 1.0 : 0.0;
    const double y = run_mock(n, one, id, "hflip").empty() ? 1.0 : 0.0;
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
    sxy += x * y;
  }
  const double cov = sxy / trials - (sx / trials) * (sy / trials);
  const double vx = sxx / trials - (sx / trials) * (sx / trials);
  const double vy = syy / trials - (sy / trials) * (sy / trials);
  EXPECT_LT(std::abs(cov / std::sqrt(vx * vy)), 0.05);
}

TEST(MockNoise, ValidationRejectsBadValues) {
  MockNoise n;
  n.p_miss = 1.5;
  EXPECT_THROW(n.validate(), ValidationError);
  n = {};
  n.jitter_sigma = -1;
  EXPECT_THROW(n.validate(), ValidationError);
  n = {};
  n.fp_rate = std::numeric_limits<double>::infinity();
  EXPECT_THROW(n.validate(), ValidationError);
  n = {};
  n.score_lo = 0.8;
  n.score_hi = 0.2;
  EXPECT_THROW(n.validate(), ValidationError);
  n = {};
  n.fp_classes = 0;
  EXPECT_THROW(n.validate(), ValidationError);
}

TEST(ConstantCostDetector, SleepsThenDelegates) {
  auto inner = std::make_shared<MockDetector>("m", MockNoise{});
  ConstantCostDetector stub(inner, std::chrono::milliseconds(5));
  const ImageContext ctx{"a", {640, 512}, kThree};
  const auto start = std::chrono::steady_clock::now();
  const auto out = stub.detect(ctx, {"a", "identity"}, AffineTransform::identity(), {640, 512});
  const auto elapsed = std::chrono::steady_clock::now() - start;
  EXPECT_GE(elapsed, std::chrono::milliseconds(5));
  EXPECT_EQ(out, noiseless(kThree));
  EXPECT_EQ(stub.name(), "m");
}
