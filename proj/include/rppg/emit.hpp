#pragma once

// Writers for every format the loaders in ingest.hpp accept. Reals are
// printed with 17 significant digits so a write/load cycle is lossless.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rppg/types.hpp"

namespace rppg {

inline std::string format_real(double v, int digits = 17) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw Error(Errc::MissingFile, "cannot write '" + path.string() + "'");
  return out;
}

}  // namespace detail

inline void write_ppm(const std::filesystem::path& path, const RgbImage& img) {
  auto out = detail::open_out(path, true);
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
}

/// Writes `manifest.json` plus one PPM per frame under `dir/frames/`.
inline std::filesystem::path write_frame_sequence(const std::filesystem::path& dir, const FrameSequence& seq) {
  nlohmann::json j;
  j["width"] = seq.width;
  j["height"] = seq.height;
  j["fps"] = seq.fps;
  auto names = nlohmann::json::array();
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "frames/%06zu.ppm", i);
    write_ppm(dir / name, seq.frames[i]);
    names.push_back(name);
  }
  j["frames"] = std::move(names);
  const auto manifest = dir / "manifest.json";
  detail::open_out(manifest) << j.dump(2) << '\n';
  return manifest;
}

inline void write_trace_csv(std::ostream& out, const ChannelTraceSet& set) {
  out << (set.background ? "t,R,G,B,R_bg,G_bg,B_bg\n" : "t,R,G,B\n");
  for (std::size_t i = 0; i < set.size(); ++i) {
    const double t = set.times.empty() ? static_cast<double>(i) / set.fs : set.times[i];
    out << format_real(t);
    for (const auto& tr : set.foreground) out << ',' << format_real(tr.samples[i]);
    if (set.background) {
      for (const auto& tr : *set.background) out << ',' << format_real(tr.samples[i]);
    }
    out << '\n';
  }
}

inline void write_trace_csv(const std::filesystem::path& path, const ChannelTraceSet& set) {
  auto out = detail::open_out(path);
  write_trace_csv(out, set);
}

inline void write_hr_csv(std::ostream& out, const HrSeries& hr) {
  out << "t_s,hr_bpm\n";
  for (const auto& s : hr.samples) out << format_real(s.t) << ',' << format_real(s.bpm) << '\n';
}

inline void write_hr_csv(const std::filesystem::path& path, const HrSeries& hr) {
  auto out = detail::open_out(path);
  write_hr_csv(out, hr);
}

inline void write_roi_csv(const std::filesystem::path& path, const std::vector<RoiBox>& boxes) {
  auto out = detail::open_out(path);
  out << "frame,x,y,w,h\n";
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto& b = boxes[i];
    out << i << ',' << b.x << ',' << b.y << ',' << b.w << ',' << b.h << '\n';
  }
}

}  // namespace rppg
