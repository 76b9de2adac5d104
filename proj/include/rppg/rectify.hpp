#pragma once

// Illumination variation rectification.
//
// The observed foreground intensity is split into an illumination-driven
// part and the blood-volume part:
//
//   I(t) = I_impure(t) + I_pure(t),   I_impure(t) = N * I_bg(t)
//
// where N is realized as an adaptive FIR filter on the background trace
// (the noise reference), learned with normalized least mean squares:
//
//   x_t = [bg[t], bg[t-1], ..., bg[t-L+1]]      (zeros before t = 0)
//   y_t = w^T x_t                               (noise estimate)
//   e_t = d_t - y_t                             (pure signal, a priori error)
//   w  <- w + mu * e_t * x_t / (eps + |x_t|^2)

#include <cmath>
#include <string>
#include <vector>

#include "rppg/types.hpp"

namespace rppg {

struct NlmsParams {
  int order = 8;
  double mu = 0.5;
  double eps = 1e-6;
};

struct RectificationModel {
  NlmsParams params;
  std::vector<double> weights;
};

struct RectifiedTrace {
  ChannelTrace pure;
  ChannelTrace noise_estimate;
  RectificationModel model;
};

inline void validate(const NlmsParams& p) {
  if (p.order < 1) throw Error(Errc::InvalidParameter, "NLMS order must be >= 1");
  if (!(p.mu > 0.0 && p.mu <= 2.0)) throw Error(Errc::InvalidParameter, "NLMS mu must lie in (0, 2]");
  if (!(p.eps > 0.0)) throw Error(Errc::InvalidParameter, "NLMS eps must be > 0");
}

inline RectifiedTrace nlms_rectify(const ChannelTrace& primary, const ChannelTrace& reference,
                                   const NlmsParams& params = {}) {
  validate(params);
  if (primary.size() != reference.size()) {
    throw Error(Errc::LengthMismatch, "primary has " + std::to_string(primary.size()) + " samples, reference " +
                                          std::to_string(reference.size()));
  }
  if (primary.fs != reference.fs) throw Error(Errc::FsMismatch, "primary and reference sample rates differ");
  if (primary.size() < static_cast<std::size_t>(params.order)) {
    throw Error(Errc::TooShort, "trace shorter than the filter order");
  }
  require_finite(primary.samples, "primary");
  require_finite(reference.samples, "reference");

  const std::size_t order = static_cast<std::size_t>(params.order);
  const auto& d = primary.samples;
  const auto& ref = reference.samples;
  std::vector<double> w(order, 0.0);
  std::vector<double> tap(order, 0.0);  // tap[k] = ref[t - k]
  double energy = 0.0;                  // running |x_t|^2

  RectifiedTrace out;
  out.pure = primary;
  out.noise_estimate = primary;
  for (std::size_t t = 0; t < d.size(); ++t) {
    // Shift the delay line; recompute the energy exactly every so often to
    // stop round-off drift of the running sum.
    energy -= tap[order - 1] * tap[order - 1];
    for (std::size_t k = order - 1; k > 0; --k) tap[k] = tap[k - 1];
    tap[0] = ref[t];
    energy += tap[0] * tap[0];
    if (t % 1024 == 0 || energy < 0.0) {
      energy = 0.0;
      for (double v : tap) energy += v * v;
    }

    double y = 0.0;
    for (std::size_t k = 0; k < order; ++k) y += w[k] * tap[k];
    const double e = d[t] - y;
    out.noise_estimate.samples[t] = y;
    out.pure.samples[t] = e;

    const double g = params.mu * e / (params.eps + energy);
    for (std::size_t k = 0; k < order; ++k) w[k] += g * tap[k];
  }
  out.model = {params, std::move(w)};
  return out;
}

/// Rectifies each foreground channel against the same-channel background.
/// Without background traces the input is returned with a warning.
inline ChannelTraceSet rectify_set(const ChannelTraceSet& traces, const NlmsParams& params = {}) {
  ChannelTraceSet out = traces;
  if (!traces.background) {
    out.warnings.push_back("rectify: no background traces; foreground passed through unrectified");
    return out;
  }
  for (int c = 0; c < 3; ++c) {
    out.foreground[c] = nlms_rectify(traces.foreground[c], (*traces.background)[c], params).pure;
  }
  return out;
}

}  // namespace rppg
