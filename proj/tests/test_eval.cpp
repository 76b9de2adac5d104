#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "rppg/eval.hpp"

using namespace rppg;

namespace {

HrSeries series(std::initializer_list<HrSample> s) { return {std::vector<HrSample>(s)}; }

std::vector<HrPair> random_pairs(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> count(2, 80);
  std::uniform_real_distribution<double> truth(45.0, 180.0);
  std::normal_distribution<double> err(0.0, 1.0 + seed % 11);
  std::vector<HrPair> pairs(count(rng));
  for (auto& p : pairs) {
    p.truth = truth(rng);
    p.est = p.truth + err(rng);
  }
  return pairs;
}

}  // namespace

TEST(Align, Examples) {
  const auto mid = align(series({{15, 71}}), series({{10, 70}, {20, 74}}));
  ASSERT_EQ(mid.size(), 1u);
  EXPECT_DOUBLE_EQ(mid[0].truth, 72.0);
  EXPECT_EQ(mid[0].est, 71.0);

  try {
    align(series({{1, 70}, {2, 70}}), series({{10, 70}, {20, 74}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NoOverlap);
  }

  const auto gt = series({{0, 60}, {10, 65}, {20, 90}});
  const auto same = align(gt, gt);
  ASSERT_EQ(same.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(same[i].truth, gt.samples[i].bpm);
}

TEST(Align, DropsEstimatesOutsideRange) {
  const auto pairs = align(series({{5, 1}, {10, 2}, {15, 3}, {25, 4}}), series({{10, 70}, {20, 80}}));
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[0].est, 2.0);
  EXPECT_EQ(pairs[1].truth, 75.0);
}

TEST(Metrics, HandExample) {
  const auto r = compute_metrics({{70, 72}, {80, 86}, {90, 91}});
  EXPECT_DOUBLE_EQ(r.mae, 3.0);
  EXPECT_DOUBLE_EQ(r.mean_error, -3.0);
  EXPECT_NEAR(r.rmse, std::sqrt(41.0 / 3.0), 1e-12);
  EXPECT_NEAR(r.pct_within_5, 200.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.rmse_pct, 100.0 * std::sqrt(41.0 / 3.0) / (249.0 / 3.0), 1e-12);
  EXPECT_EQ(r.n_samples, 3u);
}

TEST(Metrics, IdentityAndAntiCorrelation) {
  const std::vector<HrPair> same{{60, 60}, {70, 70}, {85, 85}};
  const auto r = compute_metrics(same);
  EXPECT_EQ(r.mean_error, 0.0);
  EXPECT_EQ(r.rmse, 0.0);
  EXPECT_EQ(r.pct_within_5, 100.0);
  ASSERT_TRUE(r.pearson_r.has_value());
  EXPECT_NEAR(*r.pearson_r, 1.0, 1e-12);

  const auto flat = compute_metrics({{72, 72}, {72, 72}});
  EXPECT_FALSE(flat.pearson_r.has_value());
  EXPECT_EQ(flat.rmse, 0.0);

  const auto anti = compute_metrics({{-60, 60}, {-70, 70}, {-85, 85}});
  ASSERT_TRUE(anti.pearson_r.has_value());
  EXPECT_NEAR(*anti.pearson_r, -1.0, 1e-12);
}

TEST(Metrics, ContractErrors) {
  try {
    compute_metrics({{70, 72}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::TooFewPairs);
  }
  EXPECT_THROW(compute_metrics({{70, 72}, {NAN, 72}}), Error);
}

TEST(Metrics, InvariantsOnRandomPairs) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    auto pairs = random_pairs(seed);
    const auto r = compute_metrics(pairs);
    ASSERT_GE(r.rmse + 1e-12, r.mae);
    ASSERT_GE(r.mae + 1e-12, std::abs(r.mean_error));
    ASSERT_GE(r.pct_within_5, 0.0);
    ASSERT_LE(r.pct_within_5, 100.0);
    ASSERT_TRUE(r.pearson_r.has_value());
    ASSERT_GE(*r.pearson_r, -1.0);
    ASSERT_LE(*r.pearson_r, 1.0);

    auto affine = pairs;
    for (auto& p : affine) p.est = 2.5 * p.est + 11.0, p.truth = 0.3 * p.truth - 4.0;
    ASSERT_NEAR(*compute_metrics(affine).pearson_r, *r.pearson_r, 1e-9);

    auto shuffled = pairs;
    std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937_64(seed));
    const auto s = compute_metrics(shuffled);
    ASSERT_NEAR(s.mae, r.mae, 1e-9);
    ASSERT_NEAR(s.rmse, r.rmse, 1e-9);
    ASSERT_EQ(s.pct_within_5, r.pct_within_5);

    pairs.push_back({100.0, 100.0});
    ASSERT_GE(compute_metrics(pairs).pct_within_5, r.pct_within_5);
  }
}

TEST(ReportJson, FieldsOrderAndNull) {
  auto r = compute_metrics({{70, 72}, {80, 86}, {90, 91}});
  const std::string a = report_to_json(r);
  EXPECT_EQ(a, report_to_json(r));
  const auto j = nlohmann::ordered_json::parse(a);
  ASSERT_EQ(j.size(), 7u);
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  EXPECT_EQ(keys, (std::vector<std::string>{"mean_error", "mae", "rmse", "rmse_pct", "pct_within_5", "pearson_r",
                                            "n_samples"}));
  EXPECT_EQ(j["rmse"].get<double>(), 3.69685);
  EXPECT_EQ(j["pct_within_5"].get<double>(), 66.6667);

  r.pearson_r.reset();
  EXPECT_TRUE(nlohmann::json::parse(report_to_json(r))["pearson_r"].is_null());
}

TEST(ReportJson, RoundTripsAtSixDigits) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto r = compute_metrics(random_pairs(seed));
    const auto j = nlohmann::json::parse(report_to_json(r));
    const auto again = nlohmann::json::parse(nlohmann::json(j).dump());
    EXPECT_EQ(j, again);
    EXPECT_NEAR(j["rmse"].get<double>(), r.rmse, 5e-6 * std::abs(r.rmse) + 1e-300);
  }
}
