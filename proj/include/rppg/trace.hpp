#pragma once

// Spatial averaging of frames into per-channel traces, plus the temporal
// conditioning steps (z-normalization, moving-average detrend, uniform
// resampling).

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "rppg/ingest.hpp"
#include "rppg/track.hpp"
#include "rppg/types.hpp"

namespace rppg {

/// The background region is everything outside the ROI scaled by this
/// factor about its center.
inline constexpr double kBackgroundDilation = 1.5;

inline RoiBox dilate_box(const RoiBox& b, double factor, int width, int height) {
  const double cx = b.x + 0.5 * b.w;
  const double cy = b.y + 0.5 * b.h;
  const double hw = 0.5 * factor * b.w;
  const double hh = 0.5 * factor * b.h;
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - hw)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - hh)));
  const int x1 = std::min(width, static_cast<int>(std::ceil(cx + hw)));
  const int y1 = std::min(height, static_cast<int>(std::ceil(cy + hh)));
  return {x0, y0, x1 - x0, y1 - y0};
}

/// Per-frame channel means inside the ROI (foreground) and outside the
/// 1.5x-dilated ROI (background). Background traces are omitted, with a
/// warning, when the dilated box covers the whole frame in any frame.
inline ChannelTraceSet extract_channel_traces(const FrameSequence& frames, const RoiTrack& roi) {
  if (roi.boxes.size() != frames.size()) {
    throw Error(Errc::LengthMismatch, std::to_string(roi.boxes.size()) + " boxes for " +
                                          std::to_string(frames.size()) + " frames");
  }
  check_boxes_inside(roi.boxes, frames.width, frames.height);

  ChannelTraceSet set;
  set.fs = frames.fps;
  std::array<std::vector<double>, 3> fg, bg;
  bool have_background = true;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const RgbImage& img = frames.frames[f];
    const RoiBox& box = roi.boxes[f];
    const RoiBox outer = dilate_box(box, kBackgroundDilation, frames.width, frames.height);

    std::array<double, 3> total{}, inner{}, dilated{};
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        const auto* p = img.px(x, y);
        for (int c = 0; c < 3; ++c) total[c] += p[c];
      }
    }
    for (int y = box.y; y < box.y + box.h; ++y) {
      for (int x = box.x; x < box.x + box.w; ++x) {
        const auto* p = img.px(x, y);
        for (int c = 0; c < 3; ++c) inner[c] += p[c];
      }
    }
    for (int y = outer.y; y < outer.y + outer.h; ++y) {
      for (int x = outer.x; x < outer.x + outer.w; ++x) {
        const auto* p = img.px(x, y);
        for (int c = 0; c < 3; ++c) dilated[c] += p[c];
      }
    }
    const double n_in = static_cast<double>(box.w) * box.h;
    const double n_out = static_cast<double>(img.width) * img.height - static_cast<double>(outer.w) * outer.h;
    for (int c = 0; c < 3; ++c) fg[c].push_back(inner[c] / n_in);
    if (n_out <= 0.0) {
      have_background = false;
    } else if (have_background) {
      for (int c = 0; c < 3; ++c) bg[c].push_back((total[c] - dilated[c]) / n_out);
    }
  }
  for (int c = 0; c < 3; ++c) {
    set.foreground[c] = make_trace(std::move(fg[c]), set.fs, static_cast<Channel>(c), Region::Foreground);
  }
  if (have_background) {
    std::array<ChannelTrace, 3> b;
    for (int c = 0; c < 3; ++c) {
      b[c] = make_trace(std::move(bg[c]), set.fs, static_cast<Channel>(c), Region::Background);
    }
    set.background = std::move(b);
  } else {
    set.warnings.push_back("EmptyBackground: dilated ROI covers the whole frame; background traces omitted");
  }
  return set;
}

/// Zero mean, unit population standard deviation. Constant input maps to zeros.
inline ChannelTrace normalize(const ChannelTrace& trace) {
  const auto& x = trace.samples;
  if (x.size() < 2) throw Error(Errc::TooShort, "normalize needs at least 2 samples");
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);

  ChannelTrace out = trace;
  for (auto& v : out.samples) v = sd > 0.0 ? (v - mean) / sd : 0.0;
  return out;
}

inline constexpr double kDefaultDetrendWindow = 1.5;

/// Subtracts a centered moving average. The window spans round(window_s * fs)
/// samples, rounded up to odd so it is symmetric, and is truncated at the ends.
/// The result is re-centered so edge truncation leaves no residual mean.
inline ChannelTrace detrend(const ChannelTrace& trace, double window_s = kDefaultDetrendWindow) {
  const long long n = std::llround(window_s * trace.fs);
  if (n < 3) {
    throw Error(Errc::WindowTooSmall, "detrend window of " + std::to_string(n) + " samples (need >= 3)");
  }
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(n / 2);
  const auto& x = trace.samples;
  const std::ptrdiff_t len = static_cast<std::ptrdiff_t>(x.size());
  std::vector<double> prefix(x.size() + 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) prefix[i + 1] = prefix[i] + x[i];

  ChannelTrace out = trace;
  for (std::ptrdiff_t t = 0; t < len; ++t) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, t - half);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(len - 1, t + half);
    const double avg = (prefix[hi + 1] - prefix[lo]) / static_cast<double>(hi - lo + 1);
    out.samples[t] = x[t] - avg;
  }
  const double bias = std::accumulate(out.samples.begin(), out.samples.end(), 0.0) / static_cast<double>(len);
  for (auto& v : out.samples) v -= bias;
  return out;
}

struct TimedSample {
  double t;
  double v;
};

/// Linear interpolation onto t0 + k / fs_out for every grid point not past
/// the last input time.
inline ChannelTrace resample_uniform(std::span<const TimedSample> samples, double fs_out) {
  if (samples.size() < 2) throw Error(Errc::TooShort, "resampling needs at least 2 points");
  if (!(fs_out > 0.0)) throw Error(Errc::InvalidParameter, "fs_out must be positive");
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (!(samples[i].t > samples[i - 1].t)) {
      throw Error(Errc::NonMonotoneTime, "time at index " + std::to_string(i) + " does not increase");
    }
  }
  const double t0 = samples.front().t;
  const double t_end = samples.back().t;
  const double span = t_end - t0;
  // Tolerate round-off so a grid point that lands on t_end is kept.
  const auto count = static_cast<std::size_t>(std::floor(span * fs_out * (1.0 + 1e-12) + 1e-9)) + 1;

  ChannelTrace out;
  out.fs = fs_out;
  out.samples.reserve(count);
  std::size_t seg = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const double t = std::min(t0 + static_cast<double>(k) / fs_out, t_end);
    while (seg + 2 < samples.size() && samples[seg + 1].t < t) ++seg;
    const auto& a = samples[seg];
    const auto& b = samples[seg + 1];
    const double u = std::clamp((t - a.t) / (b.t - a.t), 0.0, 1.0);
    out.samples.push_back(a.v + u * (b.v - a.v));
  }
  return out;
}

/// Resamples every trace of a set loaded with explicit timestamps onto a
/// uniform grid at `fs_out`. Sets without timestamps are returned unchanged.
inline ChannelTraceSet resample_set(const ChannelTraceSet& set, double fs_out) {
  if (set.times.empty()) return set;
  auto resample_one = [&](const ChannelTrace& tr) {
    std::vector<TimedSample> pts(tr.size());
    for (std::size_t i = 0; i < tr.size(); ++i) pts[i] = {set.times[i], tr.samples[i]};
    ChannelTrace r = resample_uniform(pts, fs_out);
    r.channel = tr.channel;
    r.region = tr.region;
    return r;
  };
  ChannelTraceSet out;
  out.fs = fs_out;
  out.warnings = set.warnings;
  for (int c = 0; c < 3; ++c) out.foreground[c] = resample_one(set.foreground[c]);
  if (set.background) {
    std::array<ChannelTrace, 3> bg;
    for (int c = 0; c < 3; ++c) bg[c] = resample_one((*set.background)[c]);
    out.background = std::move(bg);
  }
  for (std::size_t i = 0; i < out.size(); ++i) out.times.push_back(set.times.front() + i / fs_out);
  return out;
}

/// True when the timestamps deviate from a uniform grid by more than 1% of a period.
inline bool has_jitter(const ChannelTraceSet& set) {
  if (set.times.size() < 2) return false;
  const double period = 1.0 / set.fs;
  for (std::size_t i = 1; i < set.times.size(); ++i) {
    if (std::abs(set.times[i] - set.times[i - 1] - period) > 0.01 * period) return true;
  }
  return false;
}

}  // namespace rppg
