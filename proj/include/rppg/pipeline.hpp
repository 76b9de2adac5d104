#pragma once

// End-to-end heart-rate estimation:
//   ROI -> stabilize -> extract traces -> normalize -> detrend
//       -> rectify -> ICA + component selection -> sliding HR
// Every run produces a JSON log disclosing all parameters and warnings.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rppg/eval.hpp"
#include "rppg/filter.hpp"
#include "rppg/ica.hpp"
#include "rppg/ingest.hpp"
#include "rppg/pulse.hpp"
#include "rppg/rectify.hpp"
#include "rppg/trace.hpp"
#include "rppg/track.hpp"

namespace rppg {

struct PipelineConfig {
  std::optional<std::filesystem::path> roi_file;  // empty: skin-chroma fallback
  bool rectify_enabled = true;
  NlmsParams nlms;
  BandLimits band;
  double window_s = kDefaultWindowSeconds;
  double step_s = kDefaultStepSeconds;
  bool ica_enabled = true;
  std::optional<double> fs_override;
  double detrend_window_s = kDefaultDetrendWindow;
  std::uint32_t seed = 42;
  std::size_t max_features = 100;
};

inline nlohmann::ordered_json to_json(const PipelineConfig& c) {
  nlohmann::ordered_json j;
  j["roi_source"] = c.roi_file ? "external:" + c.roi_file->string() : std::string("skin-fallback");
  j["rectify"] = c.rectify_enabled;
  j["nlms_order"] = c.nlms.order;
  j["nlms_mu"] = c.nlms.mu;
  j["nlms_eps"] = c.nlms.eps;
  j["band_low"] = c.band.low;
  j["band_high"] = c.band.high;
  j["window_s"] = c.window_s;
  j["step_s"] = c.step_s;
  j["ica"] = c.ica_enabled;
  j["fs_override"] = c.fs_override ? nlohmann::ordered_json(*c.fs_override) : nlohmann::ordered_json(nullptr);
  j["detrend_window_s"] = c.detrend_window_s;
  j["seed"] = c.seed;
  j["max_features"] = c.max_features;
  return j;
}

struct EstimateResult {
  HrSeries hr;
  ChannelTraceSet raw_traces;        // as extracted / loaded
  ChannelTraceSet processed_traces;  // after conditioning and rectification
  std::vector<double> pulse_signal;
  nlohmann::ordered_json log;
};

namespace detail {

template <typename F>
auto run_stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e);
  }
}

inline void add_stage(nlohmann::ordered_json& log, const std::string& name, nlohmann::ordered_json params,
                      const std::vector<std::string>& warnings = {}) {
  nlohmann::ordered_json s;
  s["stage"] = name;
  s["params"] = std::move(params);
  s["warnings"] = warnings;
  log["stages"].push_back(std::move(s));
  for (const auto& w : warnings) log["warnings"].push_back(w);
}

inline ChannelTraceSet condition(const ChannelTraceSet& in, double window_s) {
  ChannelTraceSet out = in;
  for (auto& t : out.foreground) t = detrend(normalize(t), window_s);
  if (out.background) {
    for (auto& t : *out.background) t = detrend(normalize(t), window_s);
  }
  return out;
}

}  // namespace detail

/// Runs the trace-level part of the pipeline.
inline EstimateResult run_estimate(const PipelineConfig& config, const ChannelTraceSet& input) {
  EstimateResult result;
  auto& log = result.log;
  log["config"] = to_json(config);
  log["stages"] = nlohmann::ordered_json::array();
  log["warnings"] = nlohmann::ordered_json::array();
  for (const auto& w : input.warnings) log["warnings"].push_back(w);

  ChannelTraceSet set = input;
  if (config.fs_override) {
    if (!(*config.fs_override > 0.0)) throw Error(Errc::InvalidParameter, "fs override must be positive");
    set.fs = *config.fs_override;
    for (auto& t : set.foreground) t.fs = set.fs;
    if (set.background) {
      for (auto& t : *set.background) t.fs = set.fs;
    }
  }
  if (has_jitter(set)) {
    set = detail::run_stage("resample", [&] { return resample_set(set, set.fs); });
    detail::add_stage(log, "resample", {{"fs_out", set.fs}}, {"non-uniform timestamps resampled"});
  }
  result.raw_traces = set;

  set = detail::run_stage("condition", [&] { return detail::condition(set, config.detrend_window_s); });
  detail::add_stage(log, "condition",
                    {{"normalize", "zscore-population"}, {"detrend_window_s", config.detrend_window_s}});

  if (config.rectify_enabled) {
    std::vector<std::string> warnings;
    set = detail::run_stage("rectify", [&] {
      auto r = rectify_set(set, config.nlms);
      if (!set.background) warnings.push_back(r.warnings.back());
      return r;
    });
    detail::add_stage(log, "rectify",
                      {{"order", config.nlms.order}, {"mu", config.nlms.mu}, {"eps", config.nlms.eps},
                       {"applied", static_cast<bool>(set.background)}},
                      warnings);
  } else {
    detail::add_stage(log, "rectify", {{"applied", false}}, {});
  }
  result.processed_traces = set;

  std::vector<double> pulse;
  if (config.ica_enabled) {
    std::vector<std::string> warnings;
    nlohmann::ordered_json params{{"seed", config.seed}, {"contrast", "tanh"}, {"tolerance", 1e-6},
                                  {"max_iterations", 200}};
    try {
      IcaParams ip;
      ip.seed = config.seed;
      const IcaResult ica = fastica3(set.foreground, ip);
      const std::size_t idx = detail::run_stage("select", [&] { return select_pulse_component(ica, set.fs, config.band); });
      pulse = ica.components[idx];
      params["iterations"] = ica.iterations;
      params["converged"] = ica.converged;
      params["selected_component"] = idx;
      if (!ica.converged) warnings.push_back("ICA did not converge; using last iterate");
    } catch (const StageError&) {
      throw;
    } catch (const Error& e) {
      if (e.code() != Errc::SingularCovariance) throw StageError("ica", e);
      warnings.push_back(std::string("ICA skipped (") + e.what() + "); using green channel");
      pulse = set.foreground[static_cast<int>(Channel::G)].samples;
      params["fallback"] = "green";
    }
    detail::add_stage(log, "ica", std::move(params), warnings);
  } else {
    pulse = set.foreground[static_cast<int>(Channel::G)].samples;
    detail::add_stage(log, "ica", {{"applied", false}, {"channel", "G"}});
  }
  result.pulse_signal = pulse;

  SlidingParams sp;
  sp.window_s = config.window_s;
  sp.step_s = config.step_s;
  sp.band = config.band;
  result.hr = detail::run_stage("sliding_hr", [&] { return sliding_hr(make_trace(pulse, set.fs), sp); });
  detail::add_stage(log, "sliding_hr",
                    {{"window_s", sp.window_s},
                     {"step_s", sp.step_s},
                     {"band_low", sp.band.low},
                     {"band_high", sp.band.high},
                     {"bandpass_order", kBandpassOrder},
                     {"welch_segment_s", kWelchSegmentSeconds},
                     {"resolution_hz", sp.resolution},
                     {"estimates", result.hr.size()}});
  return result;
}

/// Resolves the per-frame ROI (external boxes or skin fallback) and
/// stabilizes it with KLT tracking.
inline RoiTrack resolve_roi(const PipelineConfig& config, const FrameSequence& frames,
                            nlohmann::ordered_json& log) {
  return detail::run_stage("roi", [&] {
    std::vector<RoiBox> boxes;
    RoiSource source;
    if (config.roi_file) {
      boxes = load_roi_boxes(*config.roi_file, frames.size());
      check_boxes_inside(boxes, frames.width, frames.height);
      source = RoiSource::External;
    } else {
      boxes.reserve(frames.size());
      for (const auto& f : frames.frames) boxes.push_back(detect_skin_roi(f));
      source = RoiSource::SkinFallback;
    }
    RoiTrack track = stabilize_roi(boxes, frames, source, config.max_features);
    std::vector<std::string> warnings;
    if (!track.stabilized) warnings.push_back("KLT stabilization lost all features; using detector boxes");
    detail::add_stage(log, "roi",
                      {{"source", source == RoiSource::External ? "external" : "skin-fallback"},
                       {"stabilized", track.stabilized},
                       {"pyramid_levels", KltParams{}.levels},
                       {"window", KltParams{}.window},
                       {"max_features", config.max_features}},
                      warnings);
    return track;
  });
}

/// Full pipeline on decoded frames.
inline EstimateResult run_estimate(const PipelineConfig& config, const FrameSequence& frames) {
  nlohmann::ordered_json pre;
  pre["stages"] = nlohmann::ordered_json::array();
  pre["warnings"] = nlohmann::ordered_json::array();
  const RoiTrack roi = resolve_roi(config, frames, pre);
  ChannelTraceSet traces = detail::run_stage("extract", [&] { return extract_channel_traces(frames, roi); });
  detail::add_stage(pre, "extract", {{"background_dilation", kBackgroundDilation}, {"fs", traces.fs}},
                    traces.warnings);
  traces.warnings.clear();

  EstimateResult result = run_estimate(config, traces);
  nlohmann::ordered_json stages = pre["stages"];
  for (auto& s : result.log["stages"]) stages.push_back(s);
  nlohmann::ordered_json warnings = pre["warnings"];
  for (auto& w : result.log["warnings"]) warnings.push_back(w);
  result.log["stages"] = std::move(stages);
  result.log["warnings"] = std::move(warnings);
  return result;
}

/// Loads an estimate and a ground-truth CSV and scores them.
inline EvalReport run_evaluate(const std::filesystem::path& est_path, const std::filesystem::path& gt_path) {
  const HrSeries est = load_ground_truth(est_path);
  const HrSeries gt = load_ground_truth(gt_path);
  return compute_metrics(align(est, gt));
}

}  // namespace rppg
