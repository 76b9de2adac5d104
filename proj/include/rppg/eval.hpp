#pragma once

// Accuracy metrics of an estimated HR series against ground truth.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rppg/types.hpp"

namespace rppg {

struct HrPair {
  double est;
  double truth;
};

struct EvalReport {
  double mean_error = 0.0;  // signed mean of est - truth
  double mae = 0.0;
  double rmse = 0.0;
  double rmse_pct = 0.0;      // rmse as percent of mean true HR
  double pct_within_5 = 0.0;  // percent with |error| < 5 bpm
  std::optional<double> pearson_r;
  std::size_t n_samples = 0;
};

/// Ground truth linearly interpolated at every estimate time inside its range.
inline std::vector<HrPair> align(const HrSeries& est, const HrSeries& gt) {
  std::vector<HrPair> pairs;
  if (gt.samples.empty()) throw Error(Errc::NoOverlap, "ground truth is empty");
  const auto& g = gt.samples;
  std::size_t j = 0;
  for (const auto& e : est.samples) {
    if (e.t < g.front().t || e.t > g.back().t) continue;
    while (j + 1 < g.size() && g[j + 1].t < e.t) ++j;
    double truth = g[j].bpm;
    if (j + 1 < g.size() && e.t > g[j].t) {
      const double u = (e.t - g[j].t) / (g[j + 1].t - g[j].t);
      truth = g[j].bpm + u * (g[j + 1].bpm - g[j].bpm);
    }
    pairs.push_back({e.bpm, truth});
  }
  if (pairs.empty()) throw Error(Errc::NoOverlap, "no estimate falls inside the ground-truth time range");
  return pairs;
}

inline EvalReport compute_metrics(const std::vector<HrPair>& pairs) {
  if (pairs.size() < 2) throw Error(Errc::TooFewPairs, "need at least 2 pairs, got " + std::to_string(pairs.size()));
  for (const auto& p : pairs) {
    if (!std::isfinite(p.est) || !std::isfinite(p.truth)) throw Error(Errc::NonFinite, "non-finite HR pair");
  }
  const double n = static_cast<double>(pairs.size());
  double sum_err = 0, sum_abs = 0, sum_sq = 0, sum_truth = 0, sum_est = 0;
  std::size_t within = 0;
  for (const auto& p : pairs) {
    const double e = p.est - p.truth;
    sum_err += e;
    sum_abs += std::abs(e);
    sum_sq += e * e;
    sum_truth += p.truth;
    sum_est += p.est;
    if (std::abs(e) < 5.0) ++within;
  }
  EvalReport r;
  r.n_samples = pairs.size();
  r.mean_error = sum_err / n;
  r.mae = sum_abs / n;
  r.rmse = std::sqrt(sum_sq / n);
  r.rmse_pct = 100.0 * r.rmse / (sum_truth / n);
  r.pct_within_5 = 100.0 * static_cast<double>(within) / n;

  const double mean_e = sum_est / n, mean_t = sum_truth / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (const auto& p : pairs) {
    sxy += (p.est - mean_e) * (p.truth - mean_t);
    sxx += (p.est - mean_e) * (p.est - mean_e);
    syy += (p.truth - mean_t) * (p.truth - mean_t);
  }
  if (sxx > 0.0 && syy > 0.0) r.pearson_r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  return r;
}

namespace detail {

inline double round_significant(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return std::strtod(buf, nullptr);
}

}  // namespace detail

/// JSON with a fixed key order and reals rounded to 6 significant digits;
/// an undefined correlation is written as null.
inline std::string report_to_json(const EvalReport& r) {
  auto real = [](double v) { return detail::round_significant(v, 6); };
  nlohmann::ordered_json j;
  j["mean_error"] = real(r.mean_error);
  j["mae"] = real(r.mae);
  j["rmse"] = real(r.rmse);
  j["rmse_pct"] = real(r.rmse_pct);
  j["pct_within_5"] = real(r.pct_within_5);
  j["pearson_r"] = r.pearson_r ? nlohmann::ordered_json(real(*r.pearson_r)) : nlohmann::ordered_json(nullptr);
  j["n_samples"] = r.n_samples;
  return j.dump(2) + "\n";
}

}  // namespace rppg
