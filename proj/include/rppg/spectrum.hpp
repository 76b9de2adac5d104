#pragma once

// Welch power spectral density and heart-rate peak picking.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "rppg/filter.hpp"
#include "rppg/types.hpp"

namespace rppg {

struct Spectrum {
  std::vector<double> freqs;  // 0, df, 2 df, ...
  std::vector<double> power;  // one-sided density

  double resolution() const { return freqs.size() > 1 ? freqs[1] - freqs[0] : 0.0; }
};

inline constexpr double kDefaultResolution = 0.01;  // Hz
inline constexpr double kWelchSegmentSeconds = 20.0;

/// Smallest power of two >= max(min_len, fs / resolution).
inline std::size_t fft_length(std::size_t min_len, double fs, double resolution) {
  std::size_t n = 1;
  while (n < min_len || fs / static_cast<double>(n) > resolution) n <<= 1;
  return n;
}

/// Welch estimate: Hann segments of min(N, 20 s), 50% overlap, each with its
/// mean removed and zero-padded to a power of two with bin spacing at most
/// `resolution`; periodograms are averaged.
inline Spectrum power_spectrum(const ChannelTrace& trace, double resolution = kDefaultResolution) {
  const auto& x = trace.samples;
  if (x.size() < 64) throw Error(Errc::TooShort, "power_spectrum needs at least 64 samples");
  if (!(resolution > 0.0)) throw Error(Errc::InvalidParameter, "resolution must be positive");
  const double fs = trace.fs;
  const std::size_t seg = std::min<std::size_t>(x.size(), static_cast<std::size_t>(std::llround(kWelchSegmentSeconds * fs)));
  const std::size_t hop = std::max<std::size_t>(1, seg / 2);
  const std::size_t nfft = fft_length(seg, fs, resolution);
  const std::size_t nbins = nfft / 2 + 1;

  std::vector<double> window(seg);
  double wss = 0.0;
  for (std::size_t i = 0; i < seg; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(seg));
    wss += window[i] * window[i];
  }

  Spectrum sp;
  sp.freqs.resize(nbins);
  sp.power.assign(nbins, 0.0);
  for (std::size_t k = 0; k < nbins; ++k) sp.freqs[k] = static_cast<double>(k) * fs / static_cast<double>(nfft);

  Eigen::FFT<double> fft;
  std::vector<double> buf(nfft);
  std::vector<std::complex<double>> spec;
  std::size_t segments = 0;
  for (std::size_t start = 0; start + seg <= x.size(); start += hop) {
    const double mean =
        std::accumulate(x.begin() + static_cast<std::ptrdiff_t>(start),
                        x.begin() + static_cast<std::ptrdiff_t>(start + seg), 0.0) /
        static_cast<double>(seg);
    std::fill(buf.begin(), buf.end(), 0.0);
    for (std::size_t i = 0; i < seg; ++i) buf[i] = (x[start + i] - mean) * window[i];
    fft.fwd(spec, buf);
    for (std::size_t k = 0; k < nbins; ++k) {
      const double scale = (k == 0 || (nfft % 2 == 0 && k == nfft / 2)) ? 1.0 : 2.0;
      sp.power[k] += scale * std::norm(spec[k]) / (fs * wss);
    }
    ++segments;
  }
  for (auto& p : sp.power) p /= static_cast<double>(segments);
  return sp;
}

/// 60 * (in-band argmax refined by a parabola through the log power of the
/// peak and its neighbours), clamped to the band.
inline double spectrum_peak_hr(const Spectrum& sp, const BandLimits& band = {}) {
  std::size_t best = sp.freqs.size();
  bool any = false;
  for (std::size_t k = 0; k < sp.freqs.size(); ++k) {
    if (sp.freqs[k] < band.low || sp.freqs[k] > band.high) continue;
    any = true;
    if (best == sp.freqs.size() || sp.power[k] > sp.power[best]) best = k;
  }
  if (!any) throw Error(Errc::EmptyBand, "no spectrum bins inside the band");
  if (!(sp.power[best] > 0.0)) throw Error(Errc::ZeroPower, "all in-band power is zero");

  double f = sp.freqs[best];
  if (best > 0 && best + 1 < sp.freqs.size() && sp.power[best - 1] > 0.0 && sp.power[best + 1] > 0.0) {
    const double a = std::log(sp.power[best - 1]);
    const double b = std::log(sp.power[best]);
    const double c = std::log(sp.power[best + 1]);
    const double denom = a - 2.0 * b + c;
    if (denom < 0.0) {
      const double delta = std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
      f += delta * sp.resolution();
    }
  }
  return 60.0 * std::clamp(f, band.low, band.high);
}

/// Fraction of in-band power held by the strongest in-band bin.
inline double spectral_periodicity(const Spectrum& sp, const BandLimits& band) {
  double total = 0.0, peak = 0.0;
  for (std::size_t k = 0; k < sp.freqs.size(); ++k) {
    if (sp.freqs[k] < band.low || sp.freqs[k] > band.high) continue;
    total += sp.power[k];
    peak = std::max(peak, sp.power[k]);
  }
  return total > 0.0 ? peak / total : 0.0;
}

}  // namespace rppg
