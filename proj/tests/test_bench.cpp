#include <gtest/gtest.h>

#include <sstream>

#include <json.hpp>

#include "bevstream/bench.hpp"
#include "bevstream/error.hpp"

using namespace bevstream;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kUsage;
}

BenchConfig small(FusionMode mode, std::size_t k) {
  BenchConfig c;
  c.mode = mode;
  c.window = k;
  c.frames = k + 3;
  c.channels = 4;
  c.geometry = GridGeometry{16, 16, 0.8};
  return c;
}

}  // namespace

TEST(Bench, StateBytesFollowWindow) {
  const GridGeometry g{128, 128, 0.8};
  EXPECT_EQ(expected_state_bytes(FusionMode::kRecurrent, 2, 80, g),
            expected_state_bytes(FusionMode::kRecurrent, 16, 80, g));
  EXPECT_EQ(expected_state_bytes(FusionMode::kParallel, 16, 80, g),
            8 * expected_state_bytes(FusionMode::kParallel, 2, 80, g));
  EXPECT_EQ(expected_state_bytes(FusionMode::kRecurrent, 1, 80, g), 80u * 128 * 128 * 8);
}

TEST(Bench, ParameterCounts) {
  EXPECT_EQ(fusion_parameter_count(FusionMode::kRecurrent, 2, 80, 3), 2u * 80 * 80 * 9);
  EXPECT_EQ(fusion_parameter_count(FusionMode::kRecurrent, 16, 80, 3),
            fusion_parameter_count(FusionMode::kRecurrent, 2, 80, 3));
  EXPECT_EQ(fusion_parameter_count(FusionMode::kParallel, 4, 80, 3), 4u * 80 * 80 * 9);
}

TEST(Bench, MeasuredStateMatchesExpectation) {
  for (auto mode : {FusionMode::kRecurrent, FusionMode::kParallel}) {
    for (std::size_t k : {1u, 2u, 4u}) {
      const auto cfg = small(mode, k);
      const auto r = bench_fusion(cfg);
      EXPECT_EQ(r.state_bytes, expected_state_bytes(mode, k, cfg.channels, cfg.geometry));
      EXPECT_EQ(r.params, fusion_parameter_count(mode, k, cfg.channels, cfg.kernel_size));
      EXPECT_GT(r.frames, 0u);
      EXPECT_GT(r.lat_mean_s, 0.0);
      EXPECT_LE(r.lat_p50_s, r.lat_p95_s);
    }
  }
}

TEST(Bench, TooFewFramesIsRejected) {
  auto cfg = small(FusionMode::kParallel, 4);
  cfg.frames = 3;
  EXPECT_EQ(code_of([&] { bench_fusion(cfg); }), ErrorCode::kInsufficientFrames);
  cfg = small(FusionMode::kRecurrent, 1);
  cfg.frames = 1;
  EXPECT_EQ(code_of([&] { bench_fusion(cfg); }), ErrorCode::kInsufficientFrames);
}

TEST(Bench, CsvEmptyAndRoundTrip) {
  std::stringstream empty;
  emit_report_csv(empty, {});
  EXPECT_EQ(empty.str(), std::string(kBenchCsvHeader) + "\n");
  EXPECT_TRUE(parse_report_csv(empty).empty());

  BenchReport r{FusionMode::kParallel, 8, 12, 0.25, 0.2, 0.5, 1024, 99};
  std::vector<BenchReport> one{r};
  std::stringstream ss;
  emit_report_csv(ss, one);
  const auto back = parse_report_csv(ss);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].mode, FusionMode::kParallel);
  EXPECT_EQ(back[0].window, 8u);
  EXPECT_EQ(back[0].frames, 12u);
  EXPECT_DOUBLE_EQ(back[0].lat_mean_s, 0.25);
  EXPECT_DOUBLE_EQ(back[0].lat_p95_s, 0.5);
  EXPECT_EQ(back[0].state_bytes, 1024u);
  EXPECT_EQ(back[0].params, 99u);
}

TEST(Bench, MalformedCsvIsFormatError) {
  std::stringstream bad("mode,k\nrecurrent,2\n");
  EXPECT_EQ(code_of([&] { parse_report_csv(bad); }), ErrorCode::kFormat);
}

TEST(Bench, JsonHasOneObjectPerReport) {
  std::vector<BenchReport> rs{BenchReport{FusionMode::kRecurrent, 2, 5, 0.1, 0.1, 0.1, 8, 4},
                              BenchReport{FusionMode::kParallel, 2, 5, 0.2, 0.2, 0.2, 16, 8}};
  std::stringstream ss;
  emit_report_json(ss, rs);
  const auto j = nlohmann::json::parse(ss.str());
  ASSERT_TRUE(j.is_array());
  ASSERT_EQ(j.size(), 2u);
  EXPECT_EQ(j[1]["mode"], "parallel");
  EXPECT_EQ(j[0]["state_bytes"], 8);
}

TEST(Bench, ModeParsing) {
  EXPECT_EQ(parse_fusion_mode("recurrent"), FusionMode::kRecurrent);
  EXPECT_EQ(parse_fusion_mode("parallel"), FusionMode::kParallel);
  EXPECT_EQ(code_of([] { parse_fusion_mode("serial"); }), ErrorCode::kConfig);
}

TEST(Bench, NearestRankPercentile) {
  EXPECT_EQ(percentile({5.0, 1.0, 3.0, 2.0, 4.0}, 0.5), 3.0);
  EXPECT_EQ(percentile({5.0, 1.0, 3.0, 2.0, 4.0}, 0.95), 5.0);
  EXPECT_EQ(percentile({7.0}, 0.0), 7.0);
}

TEST(Bench, SummaryMentionsEveryRow) {
  std::vector<BenchReport> rs{BenchReport{FusionMode::kRecurrent, 2, 5, 0.1, 0.1, 0.1, 8, 4},
                              BenchReport{FusionMode::kParallel, 16, 5, 0.2, 0.2, 0.2, 16, 8}};
  const auto s = summarize_reports(rs);
  EXPECT_NE(s.find("recurrent"), std::string::npos);
  EXPECT_NE(s.find("parallel"), std::string::npos);
}
