// rppg: heart rate from facial video frames or RGB traces.
//
//   rppg estimate       --manifest frames/manifest.json [--roi roi.csv] --out hr.csv
//   rppg estimate-trace --trace traces.csv --out hr.csv
//   rppg evaluate       --est hr.csv --gt gt.csv --out report.json
//   rppg synth trace|frames --hr 72 --duration 600 --seed 42 --out DIR
//   rppg spectrum       --trace traces.csv --out spectrum.csv
//
// Exit codes: 0 success, 1 pipeline error, 2 no estimate/ground-truth
// overlap, 64 usage error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rppg/rppg.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitPipeline = 1;
constexpr int kExitNoOverlap = 2;
constexpr int kExitUsage = 64;

void add_pipeline_flags(CLI::App* cmd, rppg::PipelineConfig& cfg, bool& no_rectify, bool& no_ica,
                        double& fs_override) {
  cmd->add_flag("--no-rectify", no_rectify, "Skip illumination rectification");
  cmd->add_option("--nlms-order", cfg.nlms.order, "NLMS filter taps")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--nlms-mu", cfg.nlms.mu, "NLMS step size in (0, 2]")->capture_default_str();
  cmd->add_option("--nlms-eps", cfg.nlms.eps, "NLMS regularizer")->capture_default_str();
  cmd->add_option("--band-low", cfg.band.low, "Pulse band lower edge (Hz)")->capture_default_str();
  cmd->add_option("--band-high", cfg.band.high, "Pulse band upper edge (Hz)")->capture_default_str();
  cmd->add_option("--window-s", cfg.window_s, "HR window length (s)")->capture_default_str();
  cmd->add_option("--step-s", cfg.step_s, "HR reporting cadence (s)")->capture_default_str();
  cmd->add_option("--detrend-window-s", cfg.detrend_window_s, "Moving-average detrend window (s)")
      ->capture_default_str();
  cmd->add_flag("--no-ica", no_ica, "Use the green channel instead of ICA");
  cmd->add_option("--fs-override", fs_override, "Force the sample rate (Hz)");
  cmd->add_option("--seed", cfg.seed, "ICA initialization seed")->capture_default_str();
}

void finish_config(rppg::PipelineConfig& cfg, bool no_rectify, bool no_ica, double fs_override) {
  cfg.rectify_enabled = !no_rectify;
  cfg.ica_enabled = !no_ica;
  if (fs_override > 0.0) cfg.fs_override = fs_override;
}

void write_log(const std::string& path, const nlohmann::ordered_json& log) {
  if (path.empty()) return;
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  std::ofstream(path) << log.dump(2) << '\n';
}

/// Parses "start:end:magnitude".
rppg::ArtifactEvent parse_artifact(const std::string& text, rppg::ArtifactKind kind) {
  std::stringstream ss(text);
  std::string a, b, c;
  if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, c)) {
    throw CLI::ValidationError("artifact", "expected start:end:magnitude, got '" + text + "'");
  }
  return {kind, std::stod(a), std::stod(b), std::stod(c)};
}

/// Parses "t:bpm,t:bpm,...".
std::vector<rppg::HrBreakpoint> parse_profile(const std::string& text) {
  std::vector<rppg::HrBreakpoint> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw CLI::ValidationError("--hr-profile", "expected t:bpm pairs");
    out.push_back({std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Remote photoplethysmography heart-rate estimation"};
  app.require_subcommand(1);

  // estimate
  rppg::PipelineConfig est_cfg;
  bool est_no_rect = false, est_no_ica = false;
  double est_fs = 0.0;
  std::string manifest, roi_path, est_out, est_log, traces_out, rectified_out;
  auto* estimate = app.add_subcommand("estimate", "Estimate HR from a PPM frame sequence");
  estimate->add_option("--manifest", manifest, "Frame manifest JSON")->required();
  estimate->add_option("--roi", roi_path, "ROI CSV (frame,x,y,w,h); default: skin-chroma detection");
  estimate->add_option("--out", est_out, "HR CSV output")->required();
  estimate->add_option("--log", est_log, "Run log JSON output");
  estimate->add_option("--traces-out", traces_out, "Extracted trace CSV output");
  estimate->add_option("--rectified-out", rectified_out, "Conditioned/rectified trace CSV output");
  estimate->add_option("--max-features", est_cfg.max_features, "KLT features per ROI")->capture_default_str();
  add_pipeline_flags(estimate, est_cfg, est_no_rect, est_no_ica, est_fs);

  // estimate-trace
  rppg::PipelineConfig tr_cfg;
  bool tr_no_rect = false, tr_no_ica = false;
  double tr_fs = 0.0;
  std::string trace_in, tr_out, tr_log, tr_rectified_out;
  auto* estimate_trace = app.add_subcommand("estimate-trace", "Estimate HR from a trace CSV");
  estimate_trace->add_option("--trace", trace_in, "Trace CSV (t,R,G,B[,R_bg,G_bg,B_bg])")->required();
  estimate_trace->add_option("--out", tr_out, "HR CSV output")->required();
  estimate_trace->add_option("--log", tr_log, "Run log JSON output");
  estimate_trace->add_option("--rectified-out", tr_rectified_out, "Conditioned/rectified trace CSV output");
  add_pipeline_flags(estimate_trace, tr_cfg, tr_no_rect, tr_no_ica, tr_fs);

  // evaluate
  std::string eval_est, eval_gt, eval_out;
  auto* evaluate = app.add_subcommand("evaluate", "Score an HR CSV against ground truth");
  evaluate->add_option("--est", eval_est, "Estimated HR CSV")->required();
  evaluate->add_option("--gt", eval_gt, "Ground-truth HR CSV")->required();
  evaluate->add_option("--out", eval_out, "Report JSON output (default: stdout)");

  // synth
  rppg::SynthSpec spec;
  double hr = 72.0;
  std::string profile, synth_out;
  std::vector<std::string> flashes, drifts, splits;
  std::uint64_t synth_seed = 42;
  int width = 64, height = 64;
  std::vector<double> amplitude;
  auto* synth = app.add_subcommand("synth", "Generate synthetic data with known HR");
  synth->require_subcommand(1);
  auto* synth_trace = synth->add_subcommand("trace", "Write traces.csv and gt.csv");
  auto* synth_frames = synth->add_subcommand("frames", "Write manifest.json, frames/, roi.csv, gt.csv");
  for (auto* cmd : {synth_trace, synth_frames}) {
    cmd->add_option("--hr", hr, "Constant heart rate (bpm)")->capture_default_str();
    cmd->add_option("--hr-profile", profile, "Piecewise-linear profile t:bpm,t:bpm,...");
    cmd->add_option("--duration", spec.duration, "Seconds")->capture_default_str();
    cmd->add_option("--fs", spec.fs, "Sample / frame rate (Hz)")->capture_default_str();
    cmd->add_option("--noise-std", spec.noise_std, "Per-sample trace noise")->capture_default_str();
    cmd->add_option("--amplitude", amplitude, "Pulse amplitude R G B")->expected(3);
    cmd->add_option("--flash", flashes, "start:end:magnitude (repeatable)");
    cmd->add_option("--drift", drifts, "start:end:peak foreground drift (repeatable)");
    cmd->add_option("--split", splits, "start:end:offset foreground-only lighting (repeatable)");
    cmd->add_option("--seed", synth_seed, "Generator seed")->capture_default_str();
    cmd->add_option("--out", synth_out, "Output directory")->required();
  }
  synth_frames->add_option("--width", width, "Frame width")->capture_default_str();
  synth_frames->add_option("--height", height, "Frame height")->capture_default_str();
  synth_frames->add_option("--motion", spec.motion_px_per_s, "Face translation (px/s)")->capture_default_str();

  // spectrum
  std::string spec_trace, spec_out;
  double resolution = rppg::kDefaultResolution;
  bool spec_raw = false;
  auto* spectrum = app.add_subcommand("spectrum", "Per-channel Welch power spectra as CSV");
  spectrum->add_option("--trace", spec_trace, "Trace CSV")->required();
  spectrum->add_option("--out", spec_out, "Spectrum CSV output (default: stdout)");
  spectrum->add_option("--resolution", resolution, "Maximum bin spacing (Hz)")->capture_default_str();
  spectrum->add_flag("--raw", spec_raw, "Skip normalization and detrending");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*estimate) {
      finish_config(est_cfg, est_no_rect, est_no_ica, est_fs);
      if (!roi_path.empty()) est_cfg.roi_file = roi_path;
      const auto frames = rppg::detail::run_stage("ingest", [&] { return rppg::load_frame_sequence(manifest); });
      auto result = rppg::run_estimate(est_cfg, frames);
      rppg::write_hr_csv(est_out, result.hr);
      if (!traces_out.empty()) rppg::write_trace_csv(traces_out, result.raw_traces);
      if (!rectified_out.empty()) rppg::write_trace_csv(rectified_out, result.processed_traces);
      write_log(est_log, result.log);
    } else if (*estimate_trace) {
      finish_config(tr_cfg, tr_no_rect, tr_no_ica, tr_fs);
      const auto traces = rppg::detail::run_stage("ingest", [&] { return rppg::load_trace_csv(trace_in); });
      auto result = rppg::run_estimate(tr_cfg, traces);
      rppg::write_hr_csv(tr_out, result.hr);
      if (!tr_rectified_out.empty()) rppg::write_trace_csv(tr_rectified_out, result.processed_traces);
      write_log(tr_log, result.log);
    } else if (*evaluate) {
      const auto report = rppg::run_evaluate(eval_est, eval_gt);
      const std::string json = rppg::report_to_json(report);
      if (eval_out.empty()) {
        std::cout << json;
      } else {
        std::ofstream(eval_out) << json;
      }
    } else if (*synth) {
      spec.hr_profile = profile.empty() ? std::vector<rppg::HrBreakpoint>{{0.0, hr}} : parse_profile(profile);
      if (!amplitude.empty()) spec.pulse_amplitude = {amplitude[0], amplitude[1], amplitude[2]};
      for (const auto& f : flashes) spec.artifacts.push_back(parse_artifact(f, rppg::ArtifactKind::Flash));
      for (const auto& f : drifts) spec.artifacts.push_back(parse_artifact(f, rppg::ArtifactKind::ForegroundDrift));
      for (const auto& f : splits) spec.artifacts.push_back(parse_artifact(f, rppg::ArtifactKind::SplitLighting));
      const fs::path dir = synth_out;
      fs::create_directories(dir);
      if (*synth_trace) {
        const auto st = rppg::synth_traces(spec, synth_seed);
        rppg::write_trace_csv(dir / "traces.csv", st.traces);
        rppg::write_hr_csv(dir / "gt.csv", st.truth);
      } else {
        const auto sf = rppg::synth_frames(spec, width, height, synth_seed);
        rppg::write_frame_sequence(dir, sf.frames);
        rppg::write_roi_csv(dir / "roi.csv", sf.roi.boxes);
        rppg::write_hr_csv(dir / "gt.csv", sf.truth);
        rppg::write_trace_csv(dir / "traces.csv", sf.traces);
      }
    } else if (*spectrum) {
      auto traces = rppg::load_trace_csv(spec_trace);
      if (rppg::has_jitter(traces)) traces = rppg::resample_set(traces, traces.fs);
      std::array<rppg::Spectrum, 3> spectra;
      for (int c = 0; c < 3; ++c) {
        const auto& t = traces.foreground[c];
        spectra[c] = rppg::power_spectrum(spec_raw ? t : rppg::detrend(rppg::normalize(t)), resolution);
      }
      std::ostringstream csv;
      csv << "freq_hz,power_r,power_g,power_b\n";
      for (std::size_t k = 0; k < spectra[0].freqs.size(); ++k) {
        csv << rppg::format_real(spectra[0].freqs[k]);
        for (const auto& s : spectra) csv << ',' << rppg::format_real(s.power[k]);
        csv << '\n';
      }
      if (spec_out.empty()) {
        std::cout << csv.str();
      } else {
        std::ofstream(spec_out) << csv.str();
      }
    }
  } catch (const rppg::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == rppg::Errc::NoOverlap ? kExitNoOverlap : kExitPipeline;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: malformed numeric argument\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitPipeline;
  }
  return 0;
}
