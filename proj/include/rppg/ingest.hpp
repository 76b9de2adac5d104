#pragma once

// Loaders for the on-disk formats: JSON frame manifest + binary PPM (P6)
// frames, and the trace / ground-truth / ROI CSV files.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rppg/types.hpp"

namespace rppg {

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::MissingFile, "cannot open '" + path.string() + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline double parse_real(std::string_view cell, const std::string& where) {
  cell = trim(cell);
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw Error(Errc::NonNumeric, where + ": '" + std::string(cell) + "' is not a finite number");
  }
  return v;
}

inline long long parse_int(std::string_view cell, const std::string& where) {
  cell = trim(cell);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw Error(Errc::NonNumeric, where + ": '" + std::string(cell) + "' is not an integer");
  }
  return v;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string_view>> rows;
  std::string text;  // owns the row views
};

/// Reads a comma-separated file with a header line. LF or CRLF; blank lines skipped.
inline CsvTable read_csv(const std::filesystem::path& path) {
  CsvTable t;
  t.text = read_file(path);
  std::string_view all(t.text);
  bool first = true;
  for (auto line : split(all, '\n')) {
    line = trim(line);
    if (line.empty()) continue;
    auto cells = split(line, ',');
    if (first) {
      for (auto c : cells) t.header.emplace_back(trim(c));
      first = false;
    } else {
      t.rows.push_back(std::move(cells));
    }
  }
  return t;
}

inline std::string where(const std::filesystem::path& path, std::size_t row) {
  return path.string() + " row " + std::to_string(row + 1);
}

inline std::vector<double> column_reals(const CsvTable& t, std::size_t col, const std::filesystem::path& path) {
  std::vector<double> out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.rows[r].size() != t.header.size()) {
      throw Error(Errc::ParseError, where(path, r) + ": expected " + std::to_string(t.header.size()) + " cells");
    }
    out.push_back(parse_real(t.rows[r][col], where(path, r)));
  }
  return out;
}

inline void require_increasing(const std::vector<double>& t, const std::filesystem::path& path) {
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!(t[i] > t[i - 1])) {
      throw Error(Errc::NonMonotoneTime, where(path, i) + ": time " + std::to_string(t[i]) +
                                             " does not exceed previous " + std::to_string(t[i - 1]));
    }
  }
}

inline double median(std::vector<double> v) {
  const std::size_t n = v.size();
  std::sort(v.begin(), v.end());
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline RgbImage read_ppm(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  std::size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  };
  auto token = [&]() -> std::string {
    skip_ws();
    if (pos < bytes.size() && bytes[pos] == '#') {
      throw Error(Errc::ParseError, path.string() + ": PPM header comments are not supported");
    }
    std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(start, pos - start);
  };
  if (token() != "P6") throw Error(Errc::BadMagic, path.string() + ": not a binary PPM (P6)");
  const std::string where = path.string() + " header";
  const long long w = parse_int(token(), where);
  const long long h = parse_int(token(), where);
  const long long maxval = parse_int(token(), where);
  if (w <= 0 || h <= 0) throw Error(Errc::GeometryMismatch, path.string() + ": non-positive dimensions");
  if (maxval != 255) {
    throw Error(Errc::BadMaxval, path.string() + ": maxval " + std::to_string(maxval) + " (expected 255)");
  }
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw Error(Errc::GeometryMismatch, path.string() + ": truncated header");
  }
  ++pos;  // single whitespace byte before the raster
  RgbImage img(static_cast<int>(w), static_cast<int>(h));
  if (bytes.size() - pos != img.data.size()) {
    throw Error(Errc::GeometryMismatch, path.string() + ": raster has " + std::to_string(bytes.size() - pos) +
                                            " bytes, expected " + std::to_string(img.data.size()));
  }
  std::copy(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end(), img.data.begin());
  return img;
}

}  // namespace detail

/// Loads a JSON manifest {width, height, fps, frames:[paths]} whose frame
/// paths are relative to the manifest's directory.
inline FrameSequence load_frame_sequence(const std::filesystem::path& manifest_path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, manifest_path.string() + ": " + e.what());
  }
  FrameSequence seq;
  try {
    seq.width = j.at("width").get<int>();
    seq.height = j.at("height").get<int>();
    seq.fps = j.at("fps").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, manifest_path.string() + ": " + e.what());
  }
  if (seq.width <= 0 || seq.height <= 0 || !(seq.fps > 0.0)) {
    throw Error(Errc::ParseError, manifest_path.string() + ": width, height and fps must be positive");
  }
  const auto dir = manifest_path.parent_path();
  const auto& frames = j.at("frames");
  seq.frames.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto path = dir / frames[i].get<std::string>();
    RgbImage img;
    try {
      img = detail::read_ppm(path);
    } catch (const Error& e) {
      throw Error(e.code(), "frame " + std::to_string(i) + ": " + e.message());
    }
    if (img.width != seq.width || img.height != seq.height) {
      throw Error(Errc::GeometryMismatch, "frame " + std::to_string(i) + " (" + path.string() + ") is " +
                                              std::to_string(img.width) + "x" + std::to_string(img.height) +
                                              ", manifest says " + std::to_string(seq.width) + "x" +
                                              std::to_string(seq.height));
    }
    seq.frames.push_back(std::move(img));
    seq.timestamps.push_back(static_cast<double>(i) / seq.fps);
  }
  return seq;
}

/// Loads `t,R,G,B[,R_bg,G_bg,B_bg]`. The sample rate is 1 / median(dt).
inline ChannelTraceSet load_trace_csv(const std::filesystem::path& path) {
  const auto table = detail::read_csv(path);
  const std::vector<std::string> fg = {"t", "R", "G", "B"};
  const std::vector<std::string> full = {"t", "R", "G", "B", "R_bg", "G_bg", "B_bg"};
  if (table.header != fg && table.header != full) {
    throw Error(Errc::ParseError, path.string() + ": header must be t,R,G,B[,R_bg,G_bg,B_bg]");
  }
  if (table.rows.size() < 2) throw Error(Errc::TooFewRows, path.string() + ": need at least 2 rows");

  ChannelTraceSet set;
  set.times = detail::column_reals(table, 0, path);
  detail::require_increasing(set.times, path);
  std::vector<double> dt;
  for (std::size_t i = 1; i < set.times.size(); ++i) dt.push_back(set.times[i] - set.times[i - 1]);
  set.fs = 1.0 / detail::median(dt);

  for (int c = 0; c < 3; ++c) {
    set.foreground[c] = make_trace(detail::column_reals(table, 1 + c, path), set.fs, static_cast<Channel>(c),
                                   Region::Foreground);
  }
  if (table.header.size() == full.size()) {
    std::array<ChannelTrace, 3> bg;
    for (int c = 0; c < 3; ++c) {
      bg[c] = make_trace(detail::column_reals(table, 4 + c, path), set.fs, static_cast<Channel>(c),
                         Region::Background);
    }
    set.background = std::move(bg);
  }
  return set;
}

/// Loads an HR CSV `t_s,hr_bpm` (ground truth or a previous estimate).
inline HrSeries load_ground_truth(const std::filesystem::path& path) {
  const auto table = detail::read_csv(path);
  if (table.header != std::vector<std::string>{"t_s", "hr_bpm"}) {
    throw Error(Errc::ParseError, path.string() + ": header must be t_s,hr_bpm");
  }
  if (table.rows.size() < 2) throw Error(Errc::TooFewRows, path.string() + ": need at least 2 rows");
  const auto t = detail::column_reals(table, 0, path);
  const auto hr = detail::column_reals(table, 1, path);
  detail::require_increasing(t, path);
  HrSeries s;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(hr[i] > 0.0)) {
      throw Error(Errc::NonPositiveHr, detail::where(path, i) + ": hr " + std::to_string(hr[i]));
    }
    s.samples.push_back({t[i], hr[i]});
  }
  return s;
}

/// Loads `frame,x,y,w,h`; every index in [0, n_frames) must appear once.
/// Box-inside-frame is checked later against the FrameSequence.
inline std::vector<RoiBox> load_roi_boxes(const std::filesystem::path& path, std::size_t n_frames) {
  const auto table = detail::read_csv(path);
  if (table.header != std::vector<std::string>{"frame", "x", "y", "w", "h"}) {
    throw Error(Errc::ParseError, path.string() + ": header must be frame,x,y,w,h");
  }
  std::vector<RoiBox> boxes(n_frames);
  std::vector<bool> seen(n_frames, false);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto where = detail::where(path, r);
    if (row.size() != 5) throw Error(Errc::ParseError, where + ": expected 5 cells");
    const long long idx = detail::parse_int(row[0], where);
    if (idx < 0 || static_cast<std::size_t>(idx) >= n_frames) {
      throw Error(Errc::IndexOutOfRange, where + ": frame index " + std::to_string(idx) + " outside [0, " +
                                             std::to_string(n_frames) + ")");
    }
    if (seen[idx]) throw Error(Errc::DuplicateIndex, where + ": frame " + std::to_string(idx) + " repeated");
    seen[idx] = true;
    RoiBox b;
    b.x = static_cast<int>(detail::parse_int(row[1], where));
    b.y = static_cast<int>(detail::parse_int(row[2], where));
    b.w = static_cast<int>(detail::parse_int(row[3], where));
    b.h = static_cast<int>(detail::parse_int(row[4], where));
    if (b.x < 0 || b.y < 0 || b.w <= 0 || b.h <= 0) {
      throw Error(Errc::ParseError, where + ": box needs x,y >= 0 and w,h > 0");
    }
    boxes[idx] = b;
  }
  for (std::size_t i = 0; i < n_frames; ++i) {
    if (!seen[i]) throw Error(Errc::MissingIndex, path.string() + ": no box for frame " + std::to_string(i));
  }
  return boxes;
}

/// Throws BoxOutsideFrame unless every box lies inside the frame geometry.
inline void check_boxes_inside(const std::vector<RoiBox>& boxes, int width, int height) {
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (!boxes[i].inside(width, height)) {
      throw Error(Errc::BoxOutsideFrame, "box for frame " + std::to_string(i) + " exceeds " +
                                             std::to_string(width) + "x" + std::to_string(height));
    }
  }
}

}  // namespace rppg
