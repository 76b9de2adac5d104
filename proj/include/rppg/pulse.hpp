#pragma once

// Pulse extraction: choose the ICA component with the most periodic in-band
// spectrum and read heart rate off its spectral peak over sliding windows.

#include <cmath>
#include <vector>

#include "rppg/filter.hpp"
#include "rppg/ica.hpp"
#include "rppg/spectrum.hpp"
#include "rppg/types.hpp"

namespace rppg {

inline constexpr double kDefaultWindowSeconds = 30.0;
inline constexpr double kDefaultStepSeconds = 10.0;

/// Index of the component whose strongest in-band bin holds the largest
/// share of in-band power. Ties go to the lowest index.
inline std::size_t select_pulse_component(const IcaResult& result, double fs, const BandLimits& band = {}) {
  std::size_t best = 0;
  double best_score = -1.0;
  for (std::size_t c = 0; c < result.components.size(); ++c) {
    const double score =
        spectral_periodicity(power_spectrum(make_trace(result.components[c], fs)), band);
    if (score > best_score) {
      best_score = score;
      best = c;
    }
  }
  return best;
}

struct SlidingParams {
  double window_s = kDefaultWindowSeconds;
  double step_s = kDefaultStepSeconds;
  BandLimits band;
  double resolution = kDefaultResolution;
};

/// One estimate per window [k * step, k * step + window] that fits in the
/// trace, stamped at the window center.
inline HrSeries sliding_hr(const ChannelTrace& trace, const SlidingParams& params = {}) {
  validate(params.band, trace.fs);
  if (!(params.window_s > 0.0 && params.step_s > 0.0)) {
    throw Error(Errc::InvalidParameter, "window and step must be positive");
  }
  const auto win = static_cast<std::size_t>(std::llround(params.window_s * trace.fs));
  if (trace.size() < win || win < 64) {
    throw Error(Errc::TraceTooShort, "trace of " + std::to_string(trace.size()) + " samples is shorter than a " +
                                         std::to_string(params.window_s) + " s window");
  }
  HrSeries out;
  for (std::size_t k = 0;; ++k) {
    const double t_start = static_cast<double>(k) * params.step_s;
    const auto start = static_cast<std::size_t>(std::llround(t_start * trace.fs));
    if (start + win > trace.size()) break;
    ChannelTrace segment = trace;
    segment.samples.assign(trace.samples.begin() + static_cast<std::ptrdiff_t>(start),
                           trace.samples.begin() + static_cast<std::ptrdiff_t>(start + win));
    const Spectrum sp = power_spectrum(bandpass(segment, params.band), params.resolution);
    out.samples.push_back({t_start + 0.5 * params.window_s, spectrum_peak_hr(sp, params.band)});
  }
  return out;
}

}  // namespace rppg
