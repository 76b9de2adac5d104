#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rppg/error.hpp"

namespace rppg {

/// Interleaved 8-bit RGB raster.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // width * height * 3

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t* px(int x, int y) { return data.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const std::uint8_t* px(int x, int y) const {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
};

/// Single-channel real raster, row major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  GrayImage() = default;
  GrayImage(int w, int h, double fill = 0.0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

struct FrameSequence {
  int width = 0;
  int height = 0;
  double fps = 60.0;
  std::vector<RgbImage> frames;
  std::vector<double> timestamps;

  std::size_t size() const { return frames.size(); }
};

struct HrSample {
  double t;
  double bpm;
};

struct HrSeries {
  std::vector<HrSample> samples;

  std::size_t size() const { return samples.size(); }
};

struct RoiBox {
  int x = 0;
  int y = 0;
  int w = 1;
  int h = 1;

  bool inside(int width, int height) const {
    return x >= 0 && y >= 0 && w > 0 && h > 0 && x + w <= width && y + h <= height;
  }
  friend bool operator==(const RoiBox&, const RoiBox&) = default;
};

enum class Channel { R = 0, G = 1, B = 2 };
enum class Region { Foreground, Background };

struct ChannelTrace {
  std::vector<double> samples;
  double fs = 60.0;
  Channel channel = Channel::G;
  Region region = Region::Foreground;

  std::size_t size() const { return samples.size(); }
};

struct ChannelTraceSet {
  std::array<ChannelTrace, 3> foreground;
  std::optional<std::array<ChannelTrace, 3>> background;
  double fs = 60.0;
  std::vector<double> times;  // sample times when loaded from file; empty means i / fs
  std::vector<std::string> warnings;

  std::size_t size() const { return foreground[0].size(); }
};

/// Builds a trace with the given labels.
inline ChannelTrace make_trace(std::vector<double> samples, double fs, Channel c = Channel::G,
                               Region r = Region::Foreground) {
  ChannelTrace t;
  t.samples = std::move(samples);
  t.fs = fs;
  t.channel = c;
  t.region = r;
  return t;
}

inline void require_finite(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(Errc::NonFinite, std::string(what) + " contains a non-finite value");
  }
}

}  // namespace rppg
