#pragma once

// Synthetic traces and frame sequences with known heart rate and scripted
// illumination artifacts.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "rppg/track.hpp"
#include "rppg/types.hpp"

namespace rppg {

enum class ArtifactKind { Flash, ForegroundDrift, SplitLighting };

/// Flash: additive step on foreground and background. ForegroundDrift: a
/// half-sine bump peaking at `magnitude`, foreground only. SplitLighting:
/// constant offset, foreground only.
struct ArtifactEvent {
  ArtifactKind kind = ArtifactKind::Flash;
  double start = 0.0;
  double end = 1.0;
  double magnitude = 0.0;
};

struct HrBreakpoint {
  double t;
  double bpm;
};

struct SynthSpec {
  double duration = 60.0;
  double fs = 60.0;
  std::vector<HrBreakpoint> hr_profile{{0.0, 72.0}};
  std::array<double, 3> pulse_amplitude{0.5, 1.0, 0.5};
  double noise_std = 0.2;
  std::vector<ArtifactEvent> artifacts;
  std::array<double, 3> foreground_base{180.0, 120.0, 100.0};
  std::array<double, 3> background_base{70.0, 80.0, 100.0};
  double motion_px_per_s = 0.0;  // horizontal face translation (frames only)
};

inline void validate(const SynthSpec& s) {
  auto fail = [](const std::string& m) { throw Error(Errc::InvalidSpec, m); };
  if (!(s.duration > 0.0)) fail("duration must be > 0");
  if (!(s.fs > 0.0)) fail("fs must be > 0");
  if (s.hr_profile.empty()) fail("hr_profile is empty");
  for (std::size_t i = 0; i < s.hr_profile.size(); ++i) {
    const auto& b = s.hr_profile[i];
    if (!(b.bpm >= 42.0 && b.bpm <= 240.0)) fail("hr_profile bpm outside [42, 240]");
    if (i > 0 && !(b.t > s.hr_profile[i - 1].t)) fail("hr_profile times must increase");
  }
  if (!(s.noise_std >= 0.0)) fail("noise_std must be >= 0");
  for (const auto& a : s.artifacts) {
    if (!(a.start >= 0.0 && a.start < a.end && a.end <= s.duration)) fail("artifact interval outside [0, duration]");
  }
  if (!(s.motion_px_per_s >= 0.0)) fail("motion rate must be >= 0");
}

/// Piecewise-linear profile, held constant outside its breakpoints.
inline double hr_at(const std::vector<HrBreakpoint>& profile, double t) {
  if (t <= profile.front().t) return profile.front().bpm;
  if (t >= profile.back().t) return profile.back().bpm;
  std::size_t j = 0;
  while (profile[j + 1].t < t) ++j;
  const auto& a = profile[j];
  const auto& b = profile[j + 1];
  return a.bpm + (t - a.t) / (b.t - a.t) * (b.bpm - a.bpm);
}

struct SynthTraces {
  ChannelTraceSet traces;
  HrSeries truth;
};

inline SynthTraces synth_traces(const SynthSpec& spec, std::uint64_t seed) {
  validate(spec);
  const auto n = static_cast<std::size_t>(std::llround(spec.duration * spec.fs));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  std::array<std::vector<double>, 3> fg, bg;
  for (auto& v : fg) v.resize(n);
  for (auto& v : bg) v.resize(n);
  double phase = 0.0;
  double prev_hr = hr_at(spec.hr_profile, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / spec.fs;
    if (i > 0) {
      const double hr = hr_at(spec.hr_profile, t);
      phase += 2.0 * std::numbers::pi * 0.5 * (prev_hr + hr) / 60.0 / spec.fs;
      prev_hr = hr;
    }
    double fg_art = 0.0, bg_art = 0.0;
    for (const auto& a : spec.artifacts) {
      if (t < a.start || t >= a.end) continue;
      switch (a.kind) {
        case ArtifactKind::Flash:
          fg_art += a.magnitude;
          bg_art += a.magnitude;
          break;
        case ArtifactKind::ForegroundDrift:
          fg_art += a.magnitude * std::sin(std::numbers::pi * (t - a.start) / (a.end - a.start));
          break;
        case ArtifactKind::SplitLighting:
          fg_art += a.magnitude;
          break;
      }
    }
    const double pulse = std::sin(phase);
    for (int c = 0; c < 3; ++c) {
      fg[c][i] = spec.foreground_base[c] + spec.pulse_amplitude[c] * pulse + fg_art + spec.noise_std * noise(rng);
      bg[c][i] = spec.background_base[c] + bg_art + spec.noise_std * noise(rng);
    }
  }

  SynthTraces out;
  out.traces.fs = spec.fs;
  std::array<ChannelTrace, 3> background;
  for (int c = 0; c < 3; ++c) {
    out.traces.foreground[c] = make_trace(std::move(fg[c]), spec.fs, static_cast<Channel>(c), Region::Foreground);
    background[c] = make_trace(std::move(bg[c]), spec.fs, static_cast<Channel>(c), Region::Background);
  }
  out.traces.background = std::move(background);
  for (long long s = 0; static_cast<double>(s) <= spec.duration; ++s) {
    const double t = static_cast<double>(s);
    out.truth.samples.push_back({t, hr_at(spec.hr_profile, t)});
  }
  return out;
}

struct SynthFrames {
  FrameSequence frames;
  HrSeries truth;
  RoiTrack roi;
  ChannelTraceSet traces;  // the traces the frames were rendered from
};

/// Renders a textured skin-colored face over the central third of the frame.
/// Face pixels carry the foreground trace plus a static zero-mean texture of
/// at most +-10; all other pixels carry the background trace. Every pixel is
/// dithered before 8-bit rounding.
inline SynthFrames synth_frames(const SynthSpec& spec, int width, int height, std::uint64_t seed) {
  validate(spec);
  if (width < 32 || height < 32) throw Error(Errc::InvalidSpec, "frames must be at least 32x32");
  const RoiBox face0{width / 3, height / 3, width / 3, height / 3};
  const auto n = static_cast<std::size_t>(std::llround(spec.duration * spec.fs));
  auto shift_at = [&](std::size_t i) {
    return static_cast<int>(std::floor(spec.motion_px_per_s * static_cast<double>(i) / spec.fs + 1e-9));
  };
  if (n > 0 && face0.x + face0.w + shift_at(n - 1) > width) {
    throw Error(Errc::InvalidSpec, "face would leave the frame at the requested motion rate");
  }

  SynthFrames out;
  auto st = synth_traces(spec, seed);
  out.truth = std::move(st.truth);
  out.traces = std::move(st.traces);

  // Static texture: smoothed uniform noise, zero mean, peak magnitude 10.
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  GrayImage raw(face0.w, face0.h);
  for (auto& v : raw.data) v = uni(rng);
  GrayImage tex(face0.w, face0.h);
  for (int y = 0; y < face0.h; ++y) {
    for (int x = 0; x < face0.w; ++x) {
      double s = 0.0, wsum = 0.0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int xx = x + dx, yy = y + dy;
          if (xx < 0 || yy < 0 || xx >= face0.w || yy >= face0.h) continue;
          const double k = (dx == 0 ? 2.0 : 1.0) * (dy == 0 ? 2.0 : 1.0);
          s += k * raw.at(xx, yy);
          wsum += k;
        }
      }
      tex.at(x, y) = s / wsum;
    }
  }
  double mean = 0.0;
  for (double v : tex.data) mean += v;
  mean /= static_cast<double>(tex.data.size());
  double peak = 0.0;
  for (auto& v : tex.data) {
    v -= mean;
    peak = std::max(peak, std::abs(v));
  }
  for (auto& v : tex.data) v *= 10.0 / peak;

  std::uniform_real_distribution<double> dither(-0.5, 0.5);
  auto quantize = [](double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); };

  out.frames.width = width;
  out.frames.height = height;
  out.frames.fps = spec.fs;
  out.frames.frames.reserve(n);
  out.roi.source = RoiSource::External;
  for (std::size_t i = 0; i < n; ++i) {
    RoiBox face = face0;
    face.x += shift_at(i);
    RgbImage img(width, height);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const bool in_face = x >= face.x && x < face.x + face.w && y >= face.y && y < face.y + face.h;
        auto* p = img.px(x, y);
        for (int c = 0; c < 3; ++c) {
          const double base = in_face ? out.traces.foreground[c].samples[i] + tex.at(x - face.x, y - face.y)
                                      : (*out.traces.background)[c].samples[i];
          p[c] = quantize(base + dither(rng));
        }
      }
    }
    out.frames.frames.push_back(std::move(img));
    out.frames.timestamps.push_back(static_cast<double>(i) / spec.fs);
    out.roi.boxes.push_back(face);
  }
  return out;
}

}  // namespace rppg
