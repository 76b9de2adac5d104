#pragma once

// Butterworth bandpass design (bilinear transform of the analog prototype,
// frequencies pre-warped) and zero-phase forward-backward filtering over
// second-order sections.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "rppg/types.hpp"

namespace rppg {

struct BandLimits {
  double low = 0.7;
  double high = 4.0;
};

inline void validate(const BandLimits& band, double fs) {
  if (!(band.low > 0.0 && band.low < band.high && band.high < 0.5 * fs)) {
    throw Error(Errc::BandInvalid, "band [" + std::to_string(band.low) + ", " + std::to_string(band.high) +
                                       "] Hz invalid for fs " + std::to_string(fs) + " Hz");
  }
}

/// One biquad: b0 + b1 z^-1 + b2 z^-2 over 1 + a1 z^-1 + a2 z^-2.
struct Biquad {
  double b0, b1, b2, a1, a2;
};

using Sos = std::vector<Biquad>;

/// Bandpass from an `order`-pole lowpass prototype (2 * order poles total),
/// unity gain at the geometric center frequency.
inline Sos butter_bandpass(int order, BandLimits band, double fs) {
  validate(band, fs);
  if (order < 1 || order % 2 != 0) throw Error(Errc::InvalidParameter, "prototype order must be even and >= 2");
  using cplx = std::complex<double>;
  constexpr double pi = std::numbers::pi;
  const double k2 = 2.0 * fs;
  const double w1 = k2 * std::tan(pi * band.low / fs);
  const double w2 = k2 * std::tan(pi * band.high / fs);
  const double w0 = std::sqrt(w1 * w2);
  const double bw = w2 - w1;

  Sos sos;
  for (int k = 0; k < order / 2; ++k) {
    const cplx p = std::polar(1.0, pi * (2.0 * k + order + 1) / (2.0 * order));
    const cplx pb = p * bw;
    const cplx root = std::sqrt(pb * pb - 4.0 * w0 * w0);
    for (const cplx s : {(pb + root) / 2.0, (pb - root) / 2.0}) {
      const cplx z = (k2 + s) / (k2 - s);
      // Zeros at z = +1 (from s = 0) and z = -1 (from s = inf).
      sos.push_back({1.0, 0.0, -1.0, -2.0 * z.real(), std::norm(z)});
    }
  }
  // Normalize the passband gain at the mapped center frequency.
  const double wc = 2.0 * std::atan(w0 / k2);
  const cplx zc = std::polar(1.0, -wc);  // z^-1
  cplx h = 1.0;
  for (const auto& q : sos) h *= (q.b0 + q.b1 * zc + q.b2 * zc * zc) / (1.0 + q.a1 * zc + q.a2 * zc * zc);
  const double g = 1.0 / std::abs(h);
  sos.front().b0 *= g;
  sos.front().b1 *= g;
  sos.front().b2 *= g;
  return sos;
}

/// |H(f)| of a cascade at frequency f.
inline double magnitude_response(const Sos& sos, double f, double fs) {
  const std::complex<double> zi = std::polar(1.0, -2.0 * std::numbers::pi * f / fs);
  std::complex<double> h = 1.0;
  for (const auto& q : sos) h *= (q.b0 + q.b1 * zi + q.b2 * zi * zi) / (1.0 + q.a1 * zi + q.a2 * zi * zi);
  return std::abs(h);
}

namespace detail {

/// Direct form II transposed over all sections; `state` holds two values
/// per section and is updated in place.
inline void sosfilt_inplace(const Sos& sos, std::vector<double>& x, std::vector<double>& state) {
  for (std::size_t s = 0; s < sos.size(); ++s) {
    const auto& q = sos[s];
    double z1 = state[2 * s], z2 = state[2 * s + 1];
    for (double& v : x) {
      const double y = q.b0 * v + z1;
      z1 = q.b1 * v - q.a1 * y + z2;
      z2 = q.b2 * v - q.a2 * y;
      v = y;
    }
    state[2 * s] = z1;
    state[2 * s + 1] = z2;
  }
}

/// Steady-state section states for a unit step input.
inline std::vector<double> sosfilt_zi(const Sos& sos) {
  std::vector<double> zi(2 * sos.size());
  double u = 1.0;  // steady input level of the current section
  for (std::size_t s = 0; s < sos.size(); ++s) {
    const auto& q = sos[s];
    const double y = u * (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
    zi[2 * s + 1] = q.b2 * u - q.a2 * y;
    zi[2 * s] = q.b1 * u - q.a1 * y + zi[2 * s + 1];
    u = y;
  }
  return zi;
}

}  // namespace detail

/// Forward-backward filtering with odd-reflection padding and steady-state
/// initial conditions, giving zero phase and |H|^2 magnitude.
inline std::vector<double> sosfiltfilt(const Sos& sos, const std::vector<double>& x) {
  if (x.empty()) return {};
  const std::size_t pad = std::min<std::size_t>(3 * (2 * sos.size() + 1), x.size() - 1);
  const std::size_t n = x.size();
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x.front() - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x.back() - x[n - 1 - i]);

  const auto zi = detail::sosfilt_zi(sos);
  auto state = zi;
  for (auto& v : state) v *= ext.front();
  detail::sosfilt_inplace(sos, ext, state);

  std::reverse(ext.begin(), ext.end());
  state = zi;
  for (auto& v : state) v *= ext.front();
  detail::sosfilt_inplace(sos, ext, state);
  std::reverse(ext.begin(), ext.end());

  return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

inline constexpr int kBandpassOrder = 4;

/// Zero-phase 4th-order Butterworth bandpass.
inline ChannelTrace bandpass(const ChannelTrace& trace, const BandLimits& band = {}) {
  const Sos sos = butter_bandpass(kBandpassOrder, band, trace.fs);
  ChannelTrace out = trace;
  out.samples = sosfiltfilt(sos, trace.samples);
  return out;
}

}  // namespace rppg
