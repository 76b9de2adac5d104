// Acceptance suite: one PASS/FAIL line per criterion.
//
// Exit status is 0 when every criterion ran to completion, whatever its
// verdict, so the verdicts stay visible in CI logs without masking harness
// crashes. Pass --strict to exit 1 when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rppg/rppg.hpp"

namespace fs = std::filesystem;
using namespace rppg;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("rppg_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

double mae_vs(const HrSeries& est, const HrSeries& gt) { return compute_metrics(align(est, gt)).mae; }

// 1. Clean pipeline on a 600 s trace at 72 bpm.
Verdict clean_pipeline() {
  SynthSpec spec;
  spec.duration = 600.0;
  const auto st = synth_traces(spec, 42);
  const double signal_power = 0.5 * spec.pulse_amplitude[1] * spec.pulse_amplitude[1];
  const double snr_db = 10.0 * std::log10(signal_power / (spec.noise_std * spec.noise_std));

  const auto dir = scratch("clean");
  write_trace_csv(dir / "traces.csv", st.traces);
  write_hr_csv(dir / "gt.csv", st.truth);

  const auto t0 = std::chrono::steady_clock::now();
  const auto result = run_estimate(PipelineConfig{}, load_trace_csv(dir / "traces.csv"));
  write_hr_csv(dir / "hr.csv", result.hr);
  const double elapsed = seconds_since(t0);

  const auto report = run_evaluate(dir / "hr.csv", dir / "gt.csv");
  fs::remove_all(dir);
  const bool pass = snr_db >= 10.0 && result.hr.size() == 58 && report.mae <= 1.5 && report.pct_within_5 == 100.0 &&
                    elapsed < 5.0;
  return {pass, fmt("SNR %.2f dB, %zu estimates, MAE %.4f bpm, %.1f%% within 5 bpm, %.2f s", snr_db,
                    result.hr.size(), report.mae, report.pct_within_5, elapsed)};
}

SynthSpec flash_spec() {
  SynthSpec spec;
  spec.duration = 600.0;
  for (double t = 30.0; t + 1.0 <= spec.duration; t += 60.0) {
    spec.artifacts.push_back({ArtifactKind::Flash, t, t + 1.0, 5.0 * spec.pulse_amplitude[1]});
  }
  return spec;
}

// 2. Rectification efficacy on the flash corpus.
Verdict rectification_efficacy() {
  const auto spec = flash_spec();
  double rect = 0.0, plain = 0.0;
  const int runs = 10;
  for (int seed = 1; seed <= runs; ++seed) {
    const auto st = synth_traces(spec, static_cast<std::uint64_t>(seed));
    PipelineConfig on, off;
    off.rectify_enabled = false;
    rect += mae_vs(run_estimate(on, st.traces).hr, st.truth);
    plain += mae_vs(run_estimate(off, st.traces).hr, st.truth);
  }
  rect /= runs;
  plain /= runs;
  const bool abs_ok = rect <= 3.0;
  const bool ratio_ok = rect <= 0.5 * plain;
  return {abs_ok && ratio_ok, fmt("MAE rectified %.4f bpm (<= 3: %s), unrectified %.4f bpm, ratio %.3f (<= 0.5: %s)",
                                  rect, abs_ok ? "yes" : "no", plain, rect / plain, ratio_ok ? "yes" : "no")};
}

// 3. NLMS against the brute-force recursion.
Verdict nlms_oracle() {
  double worst = 0.0;
  for (int order : {1, 4, 8}) {
    const auto d = oracle::gaussian(1000, 1000 + order, 2.0);
    auto ref = oracle::gaussian(1000, 2000 + order);
    std::vector<double> primary(d);
    for (std::size_t i = 0; i < d.size(); ++i) primary[i] += 0.7 * ref[i] + (i > 0 ? 0.2 * ref[i - 1] : 0.0);
    const NlmsParams p{order, 0.5, 1e-6};
    const auto got = nlms_rectify(make_trace(primary, 60.0), make_trace(ref, 60.0), p);
    const auto want = oracle::nlms(primary, ref, order, p.mu, p.eps);
    for (std::size_t t = 0; t < primary.size(); ++t) {
      worst = std::max(worst, std::abs(got.pure.samples[t] - want.pure[t]));
      worst = std::max(worst, std::abs(got.noise_estimate.samples[t] - want.noise[t]));
    }
  }
  return {worst <= 1e-9, fmt("max elementwise deviation %.3g over L in {1,4,8}", worst)};
}

// 4. Exact decomposition. pure is defined as primary - noise_estimate, so
// that identity is checked bit for bit; the re-summed residual is reported.
Verdict exact_decomposition() {
  std::size_t checked = 0, mismatches = 0;
  double resum = 0.0;
  auto check = [&](const ChannelTrace& primary, const ChannelTrace& ref, const NlmsParams& p) {
    const auto r = nlms_rectify(primary, ref, p);
    for (std::size_t t = 0; t < primary.size(); ++t) {
      ++checked;
      if (r.pure.samples[t] != primary.samples[t] - r.noise_estimate.samples[t]) ++mismatches;
      resum = std::max(resum, std::abs(r.pure.samples[t] + r.noise_estimate.samples[t] - primary.samples[t]));
    }
  };
  for (int order : {1, 4, 8}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      check(make_trace(oracle::gaussian(1000, seed, 10.0), 60.0), make_trace(oracle::gaussian(1000, seed + 50), 60.0),
            {order, 0.5, 1e-6});
    }
  }
  const auto st = synth_traces(flash_spec(), 1);
  for (int c = 0; c < 3; ++c) check(st.traces.foreground[c], (*st.traces.background)[c], {});
  return {mismatches == 0, fmt("%zu samples, %zu violations of pure == primary - noise_estimate; max |pure + noise - "
                               "primary| = %.3g",
                               checked, mismatches, resum)};
}

// 5. ICA recovery under a fixed mixing.
Verdict ica_recovery() {
  const std::size_t n = 60 * 60;
  std::vector<double> saw(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ph = 0.5 * static_cast<double>(i) / 60.0;
    saw[i] = 2.0 * (ph - std::floor(ph)) - 1.0;
  }
  const std::array<std::vector<double>, 3> s{oracle::sine(1.2, 60.0, n), saw, oracle::gaussian(n, 42)};
  const double a[3][3] = {{1.0, 0.5, 0.3}, {0.4, 1.2, 0.6}, {0.2, 0.7, 1.1}};
  std::array<ChannelTrace, 3> x;
  for (int r = 0; r < 3; ++r) {
    std::vector<double> v(n, 0.0);
    for (int c = 0; c < 3; ++c) {
      for (std::size_t i = 0; i < n; ++i) v[i] += a[r][c] * s[c][i];
    }
    x[r] = make_trace(v, 60.0, static_cast<Channel>(r));
  }
  const auto first = fastica3(x);
  const auto second = fastica3(x);
  double worst = 1.0;
  for (int src = 0; src < 3; ++src) {
    double best = 0.0;
    for (int c = 0; c < 3; ++c) best = std::max(best, std::abs(oracle::corr(s[src], first.components[c])));
    worst = std::min(worst, best);
  }
  const bool same = first.components == second.components;
  return {worst >= 0.95 && same, fmt("min |corr| %.5f, %d iterations, repeat run %s", worst, first.iterations,
                                     same ? "bit-identical" : "differs")};
}

// 6. Sub-bin spectral peak.
Verdict spectral_accuracy() {
  const auto x = oracle::sine(1.25, 60.0, 30 * 60);
  const double hr = spectrum_peak_hr(power_spectrum(make_trace(x, 60.0)));
  return {std::abs(hr - 75.0) <= 0.3, fmt("%.4f bpm", hr)};
}

// 7. Tracker accuracy and ROI stabilization.
Verdict tracker_accuracy() {
  auto texture = [](double x, double y) {
    return 128.0 + 40.0 * std::sin(0.31 * x + 0.17 * y) + 30.0 * std::cos(0.23 * y - 0.11 * x) +
           20.0 * std::sin(0.063 * x + 0.41 * y);
  };
  auto image = [&](int dx, int dy) {
    GrayImage g(96, 96);
    for (int y = 0; y < 96; ++y) {
      for (int x = 0; x < 96; ++x) g.at(x, y) = texture(x - dx, y - dy);
    }
    return g;
  };
  const GrayImage base = image(0, 0);
  const auto pts = select_features(base, {32, 32, 32, 32}, 25);
  double worst_shift = 0.0;
  int lost = 0;
  for (int dy = -3; dy <= 3; ++dy) {
    for (int dx = -3; dx <= 3; ++dx) {
      const auto out = track_features(base, image(dx, dy), pts);
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!out[i].alive) {
          ++lost;
          continue;
        }
        worst_shift = std::max(worst_shift, std::hypot(out[i].x - pts[i].x - dx, out[i].y - pts[i].y - dy));
      }
    }
  }

  SynthSpec spec;
  spec.duration = 10.0;
  spec.motion_px_per_s = 2.0;
  const auto sf = synth_frames(spec, 96, 96, 7);
  const auto track = stabilize_roi(std::vector<RoiBox>(sf.frames.size(), sf.roi.boxes[0]), sf.frames);
  double worst_box = 0.0;
  for (std::size_t i = 0; i < track.boxes.size(); ++i) {
    worst_box = std::max(worst_box, std::hypot(track.boxes[i].x - sf.roi.boxes[i].x, track.boxes[i].y - sf.roi.boxes[i].y));
  }
  const bool pass = !pts.empty() && lost == 0 && worst_shift <= 0.2 && track.stabilized && worst_box <= 0.5;
  return {pass, fmt("%zu features x 49 shifts, %d lost, max error %.4f px; 2 px/s face over %zu frames, max box error "
                    "%.2f px",
                    pts.size(), lost, worst_shift, track.boxes.size(), worst_box)};
}

// 8. End-to-end on frames with a moving face. 64x64 with a 21 px face leaves
// 22 px of travel, so 60 s of motion is capped at 0.25 px/s.
Verdict end_to_end_frames() {
  SynthSpec spec;
  spec.duration = 60.0;
  spec.motion_px_per_s = 0.25;
  const auto sf = synth_frames(spec, 64, 64, 42);
  const auto dir = scratch("frames");
  const auto manifest = write_frame_sequence(dir, sf.frames);
  write_hr_csv(dir / "gt.csv", sf.truth);

  const auto t0 = std::chrono::steady_clock::now();
  const auto result = run_estimate(PipelineConfig{}, load_frame_sequence(manifest));
  write_hr_csv(dir / "hr.csv", result.hr);
  const double elapsed = seconds_since(t0);

  const auto report = run_evaluate(dir / "hr.csv", dir / "gt.csv");
  fs::remove_all(dir);
  return {report.mae <= 2.0 && elapsed < 30.0,
          fmt("skin-detected ROI, %zu estimates, MAE %.4f bpm, %.2f s", result.hr.size(), report.mae, elapsed)};
}

// 9. Metrics hand example and invariant suite.
Verdict metrics_correctness() {
  const auto r = compute_metrics({{70, 72}, {80, 86}, {90, 91}});
  bool ok = std::abs(r.mae - 3.0) <= 1e-12 && std::abs(r.rmse - std::sqrt(41.0 / 3.0)) <= 1e-9 &&
            std::abs(r.rmse - 3.697) < 5e-4 && std::abs(r.pct_within_5 - 66.667) < 5e-4;
  int violations = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> truth(45.0, 180.0);
    std::normal_distribution<double> err(0.0, 4.0);
    std::vector<HrPair> pairs(2 + seed % 60);
    for (auto& p : pairs) p.truth = truth(rng), p.est = p.truth + err(rng);
    const auto m = compute_metrics(pairs);
    auto shifted = pairs;
    for (auto& p : shifted) p.est = 3.0 * p.est + 7.0, p.truth = 0.5 * p.truth - 2.0;
    const auto a = compute_metrics(shifted);
    const bool good = m.rmse + 1e-12 >= m.mae && m.mae + 1e-12 >= std::abs(m.mean_error) && m.pearson_r &&
                      *m.pearson_r >= -1.0 && *m.pearson_r <= 1.0 && a.pearson_r &&
                      std::abs(*a.pearson_r - *m.pearson_r) <= 1e-9;
    if (!good) ++violations;
  }
  ok = ok && violations == 0;
  return {ok, fmt("mae %.6f, rmse %.9f, pct_within_5 %.4f; %d invariant violations over 1000 sets", r.mae, r.rmse,
                  r.pct_within_5, violations)};
}

// 10. Reporting cadence.
Verdict cadence() {
  const auto hr = sliding_hr(make_trace(oracle::sine(1.2, 60.0, 120 * 60), 60.0));
  bool spaced = hr.size() >= 2;
  for (std::size_t i = 1; i < hr.size(); ++i) spaced = spaced && hr.samples[i].t - hr.samples[i - 1].t == 10.0;
  const bool pass = SlidingParams{}.step_s == 10.0 && PipelineConfig{}.step_s == 10.0 && spaced;
  return {pass, fmt("default step %.1f s, observed spacing %.1f s", PipelineConfig{}.step_s,
                    hr.size() >= 2 ? hr.samples[1].t - hr.samples[0].t : 0.0)};
}

}  // namespace

int main(int argc, char** argv) {
  const bool strict = argc > 1 && std::strcmp(argv[1], "--strict") == 0;
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"clean-pipeline accuracy", clean_pipeline},
      {"rectification efficacy", rectification_efficacy},
      {"NLMS oracle equivalence", nlms_oracle},
      {"exact decomposition", exact_decomposition},
      {"ICA recovery", ica_recovery},
      {"spectral accuracy", spectral_accuracy},
      {"tracker accuracy", tracker_accuracy},
      {"end-to-end on frames", end_to_end_frames},
      {"metrics correctness", metrics_correctness},
      {"cadence conformance", cadence},
  };
  int failed = 0, crashed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
      ++crashed;
    }
    if (!v.pass) ++failed;
    std::printf("%s criterion %zu (%s): %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  if (crashed > 0) return 2;
  return strict && failed > 0 ? 1 : 0;
}
