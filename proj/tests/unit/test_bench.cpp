#include <gtest/gtest.h>

#include <chrono>

#include "helpers.hpp"
#include "thermeval/bench.hpp"
#include "thermeval/latency.hpp"

using namespace thermeval;

namespace {

class Flaky final : public Detector {
 public:
  explicit Flaky(int fail_on) : fail_on_(fail_on) {}
  std::string name() const override { return "flaky"; }
  bool supports_transformed_views() const override { return true; }
  bool supports_view(const std::string&) const override { return true; }
  std::vector<Detection> detect(const ImageContext&, const ViewKey&, const AffineTransform&,
                                Size) const override {
    if (++calls_ == fail_on_) throw ValidationError("device lost");
    return {};
  }

 private:
  int fail_on_;
  mutable int calls_ = 0;
};

DetectorPtr stub(double cost_ms) {
  return std::make_shared<ConstantCostDetector>(
      std::make_shared<MockDetector>("stub", MockNoise{}),
      std::chrono::microseconds(static_cast<long>(cost_ms * 1000)));
}

}  // namespace

TEST(Latency, SummaryStatistics) {
  const std::vector<double> s{4, 1, 100, 3, 2};
  const auto st = summarize_latencies(s);
  EXPECT_EQ(st.n, 5u);
  EXPECT_EQ(st.mean_ms, 22.0);
  EXPECT_EQ(st.median_ms, 3.0);
  EXPECT_EQ(st.p95_ms, 100.0);
  EXPECT_DOUBLE_EQ(st.fps * st.mean_ms, 1000.0);
  EXPECT_EQ(summarize_latencies({}).n, 0u);
}

TEST(Bench, InjectedClockGivesExactStats) {
  const auto ds = testutil::synthetic_dataset(3, 2, 1);
  const auto ctx = image_contexts(ds);
  std::vector<double> ticks{0, 0, 2, 2, 5, 5, 6, 6};
  std::size_t k = 0;
  BenchOptions opt;
  opt.warmup = 0;
  opt.iterations = 1;
  opt.clock = [&] { return ticks.at(k++); };
  const MockDetector m("m", MockNoise{});
  const auto r = bench_detector(m, ctx, opt);
  EXPECT_EQ(r.latency.n, 3u);
  EXPECT_EQ(r.latency.mean_ms, 2.0);
  EXPECT_EQ(r.latency.median_ms, 2.0);
  EXPECT_EQ(r.latency.p95_ms, 3.0);
  EXPECT_EQ(r.latency.fps, 500.0);
  EXPECT_EQ(r.throughput_ips, 500.0);
}

TEST(Bench, ZeroWorkStubOrdering) {
  const auto ds = testutil::synthetic_dataset(2, 1, 1);
  const auto ctx = image_contexts(ds);
  BenchOptions opt;
  opt.warmup = 2;
  opt.iterations = 50;
  const auto r = bench_detector(MockDetector("m", MockNoise{}), ctx, opt);
  EXPECT_GT(r.latency.mean_ms, 0.0);
  EXPECT_LE(r.latency.median_ms, r.latency.p95_ms);
  EXPECT_NEAR(r.latency.fps * r.latency.mean_ms, 1000.0, 1e-9);
}

TEST(Bench, FailureCarriesPartialStats) {
  const auto ds = testutil::synthetic_dataset(1, 1, 1);
  const auto ctx = image_contexts(ds);
  BenchOptions opt;
  opt.warmup = 2;
  opt.iterations = 10;
  Flaky f(6);
  try {
    bench_detector(f, ctx, opt);
    FAIL() << "expected failure";
  } catch (const BenchError& e) {
    EXPECT_EQ(e.partial().n, 3u);
    EXPECT_NE(std::string(e.what()).find("device lost"), std::string::npos);
  }
}

TEST(Bench, RejectsZeroIterations) {
  const auto ds = testutil::synthetic_dataset(1, 1, 1);
  BenchOptions opt;
  opt.iterations = 0;
  EXPECT_THROW(bench_detector(MockDetector("m", MockNoise{}), image_contexts(ds), opt),
               ValidationError);
}

TEST(Bench, ProtocolLatencyScalesWithWork) {
  const auto ds = testutil::synthetic_dataset(2, 2, 1);
  const auto ctx = image_contexts(ds);
  BenchOptions opt;
  opt.warmup = 1;
  opt.iterations = 5;
  const auto s = stub(4.0);
  const double ttna = bench_protocol(Ttna{s}, ctx, opt).latency.mean_ms;

  TtaConfig two;
  two.views = {Identity{}, HFlip{}};
  const double tta2 = bench_protocol(Tta{s, two}, ctx, opt).latency.mean_ms;
  EXPECT_GE(tta2 / ttna, 2.0 * 0.7);
  EXPECT_LE(tta2 / ttna, 2.0 * 1.3);

  const double tta4 = bench_protocol(Tta{s, TtaConfig{}}, ctx, opt).latency.mean_ms;
  EXPECT_GE(tta4 / ttna, 0.8 * 4);
  EXPECT_LE(tta4 / ttna, 1.3 * 4);

  EnsembleConfig ens;
  ens.members = {s, stub(4.0)};
  const double ttme = bench_protocol(Ttme{ens}, ctx, opt).latency.mean_ms;
  EXPECT_GE(ttme / ttna, 1.0);
  EXPECT_LE(ttme / ttna, 2.6);
}

TEST(CompareModes, NoiselessModesTieOnAccuracy) {
  const auto ds = testutil::synthetic_dataset(4, 3, 2);
  const DetectorPtr a = std::make_shared<MockDetector>("a", MockNoise{});
  const DetectorPtr b = std::make_shared<MockDetector>("b", MockNoise{});
  EnsembleConfig ens;
  ens.members = {a, b};
  const std::vector<ModeRun> runs{{"a", Ttna{a}}, {"a", Tta{a, TtaConfig{}}}, {"a+b", Ttme{ens}}};
  BenchOptions opt;
  opt.warmup = 0;
  opt.iterations = 2;
  const auto cmp = compare_modes(ds, runs, {}, opt);
  ASSERT_EQ(cmp.rows.size(), 3u);
  int fastest = 0;
  for (const auto& r : cmp.rows) {
    EXPECT_EQ(*r.map, 1.0);
    EXPECT_TRUE(r.best_map);
    EXPECT_TRUE(r.best_precision);
    EXPECT_TRUE(r.best_recall);
    fastest += r.best_latency;
  }
  EXPECT_GE(fastest, 1);
  EXPECT_EQ(cmp.rows[1].mode, "tta");
  const auto text = format_comparison(cmp, false);
  EXPECT_NE(text.find("100.00*"), std::string::npos);
  EXPECT_NE(format_comparison(cmp, true).find("\"best\""), std::string::npos);
}
