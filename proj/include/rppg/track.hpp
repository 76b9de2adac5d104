#pragma once

// Face ROI provisioning and KLT stabilization: an RGB skin-rule fallback
// detector, Shi-Tomasi corner selection and pyramidal Lucas-Kanade tracking.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <vector>

#include "rppg/types.hpp"

namespace rppg {

struct FeaturePoint {
  double x = 0.0;
  double y = 0.0;
  int id = 0;
  bool alive = true;
};

enum class RoiSource { External, SkinFallback };

struct RoiTrack {
  std::vector<RoiBox> boxes;
  RoiSource source = RoiSource::External;
  bool stabilized = false;
};

struct KltParams {
  int levels = 3;            // pyramid levels including full resolution
  int window = 15;           // integration window side
  int max_iterations = 30;   // per level
  double epsilon = 0.01;     // px
  double max_residual = 20;  // RMS intensity units over the window
  double min_eigen = 1e-6;   // per-pixel normalized, below this the window is flat
};

inline GrayImage to_luma(const RgbImage& img) {
  GrayImage g(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const auto* p = img.px(x, y);
      g.at(x, y) = (static_cast<double>(p[0]) + p[1] + p[2]) / 3.0;
    }
  }
  return g;
}

inline bool is_skin(const std::uint8_t* p) {
  const int r = p[0], g = p[1], b = p[2];
  const int mx = std::max({r, g, b});
  const int mn = std::min({r, g, b});
  return r > 95 && g > 40 && b > 20 && mx - mn > 15 && std::abs(r - g) > 15 && r > g && r > b;
}

/// Bounding box of the largest 4-connected skin component, grown by 5% per
/// side and clamped to the frame.
inline RoiBox detect_skin_roi(const RgbImage& frame) {
  if (frame.width <= 0 || frame.height <= 0) throw Error(Errc::InvalidParameter, "empty frame");
  const int w = frame.width, h = frame.height;
  std::vector<int> label(static_cast<std::size_t>(w) * h, -1);
  std::size_t best_size = 0;
  RoiBox best;
  std::deque<int> queue;
  int next_label = 0;
  for (int start = 0; start < w * h; ++start) {
    if (label[start] != -1) continue;
    if (!is_skin(frame.px(start % w, start / w))) {
      label[start] = -2;
      continue;
    }
    const int id = next_label++;
    int x0 = w, y0 = h, x1 = -1, y1 = -1;
    std::size_t size = 0;
    label[start] = id;
    queue.push_back(start);
    while (!queue.empty()) {
      const int idx = queue.front();
      queue.pop_front();
      const int x = idx % w, y = idx / w;
      ++size;
      x0 = std::min(x0, x), x1 = std::max(x1, x);
      y0 = std::min(y0, y), y1 = std::max(y1, y);
      const std::array<std::array<int, 2>, 4> nbrs{{{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}}};
      for (const auto& [nx, ny] : nbrs) {
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const int n = ny * w + nx;
        if (label[n] != -1) continue;
        if (is_skin(frame.px(nx, ny))) {
          label[n] = id;
          queue.push_back(n);
        } else {
          label[n] = -2;
        }
      }
    }
    if (size > best_size) {
      best_size = size;
      best = {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
    }
  }
  if (best_size == 0) throw Error(Errc::NoSkinPixels, "no pixel satisfies the skin rule");

  const int dx = static_cast<int>(std::lround(0.05 * best.w));
  const int dy = static_cast<int>(std::lround(0.05 * best.h));
  const int left = std::max(0, best.x - dx);
  const int top = std::max(0, best.y - dy);
  const int right = std::min(w, best.x + best.w + dx);
  const int bottom = std::min(h, best.y + best.h + dy);
  return {left, top, right - left, bottom - top};
}

namespace detail {

inline double clamped(const GrayImage& img, int x, int y) {
  x = std::clamp(x, 0, img.width - 1);
  y = std::clamp(y, 0, img.height - 1);
  return img.at(x, y);
}

inline double bilinear(const GrayImage& img, double x, double y) {
  const int ix = static_cast<int>(std::floor(x));
  const int iy = static_cast<int>(std::floor(y));
  const double fx = x - ix, fy = y - iy;
  const double a = clamped(img, ix, iy), b = clamped(img, ix + 1, iy);
  const double c = clamped(img, ix, iy + 1), d = clamped(img, ix + 1, iy + 1);
  return (1 - fy) * ((1 - fx) * a + fx * b) + fy * ((1 - fx) * c + fx * d);
}

/// 5-tap binomial blur followed by 2x decimation.
inline GrayImage pyr_down(const GrayImage& src) {
  static constexpr std::array<double, 5> k{1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
  GrayImage tmp(src.width, src.height);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      double s = 0.0;
      for (int i = -2; i <= 2; ++i) s += k[i + 2] * clamped(src, x + i, y);
      tmp.at(x, y) = s;
    }
  }
  GrayImage dst((src.width + 1) / 2, (src.height + 1) / 2);
  for (int y = 0; y < dst.height; ++y) {
    for (int x = 0; x < dst.width; ++x) {
      double s = 0.0;
      for (int i = -2; i <= 2; ++i) s += k[i + 2] * clamped(tmp, 2 * x, 2 * y + i);
      dst.at(x, y) = s;
    }
  }
  return dst;
}

inline std::vector<GrayImage> build_pyramid(const GrayImage& base, int levels) {
  std::vector<GrayImage> pyr{base};
  for (int l = 1; l < levels; ++l) pyr.push_back(pyr_down(pyr.back()));
  return pyr;
}

}  // namespace detail

/// Shi-Tomasi score min(l1, l2) of the 3x3-summed structure tensor of
/// Sobel gradients. Pixels whose stencil leaves the image score zero.
inline GrayImage shi_tomasi_scores(const GrayImage& gray) {
  const int w = gray.width, h = gray.height;
  GrayImage gxx(w, h), gxy(w, h), gyy(w, h), score(w, h);
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      const double gx = (gray.at(x + 1, y - 1) + 2 * gray.at(x + 1, y) + gray.at(x + 1, y + 1)) -
                        (gray.at(x - 1, y - 1) + 2 * gray.at(x - 1, y) + gray.at(x - 1, y + 1));
      const double gy = (gray.at(x - 1, y + 1) + 2 * gray.at(x, y + 1) + gray.at(x + 1, y + 1)) -
                        (gray.at(x - 1, y - 1) + 2 * gray.at(x, y - 1) + gray.at(x + 1, y - 1));
      gxx.at(x, y) = gx * gx;
      gxy.at(x, y) = gx * gy;
      gyy.at(x, y) = gy * gy;
    }
  }
  for (int y = 2; y + 2 < h; ++y) {
    for (int x = 2; x + 2 < w; ++x) {
      double a = 0, b = 0, c = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          a += gxx.at(x + dx, y + dy);
          b += gxy.at(x + dx, y + dy);
          c += gyy.at(x + dx, y + dy);
        }
      }
      const double half_tr = 0.5 * (a + c);
      const double disc = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
      score.at(x, y) = std::max(0.0, half_tr - disc);
    }
  }
  return score;
}

/// Up to `max_n` corners inside `roi`, strongest first, at least 5 px apart,
/// each scoring at least 1% of the strongest.
inline std::vector<FeaturePoint> select_features(const GrayImage& gray, const RoiBox& roi, std::size_t max_n) {
  if (max_n == 0) throw Error(Errc::InvalidParameter, "max_n must be >= 1");
  if (!roi.inside(gray.width, gray.height)) throw Error(Errc::BoxOutsideFrame, "roi outside frame");
  constexpr double kMinDistance = 5.0;
  constexpr double kQuality = 0.01;

  const GrayImage score = shi_tomasi_scores(gray);
  struct Candidate {
    double s;
    int x, y;
  };
  std::vector<Candidate> cands;
  double best = 0.0;
  for (int y = roi.y; y < roi.y + roi.h; ++y) {
    for (int x = roi.x; x < roi.x + roi.w; ++x) best = std::max(best, score.at(x, y));
  }
  if (best <= 0.0) return {};
  for (int y = roi.y; y < roi.y + roi.h; ++y) {
    for (int x = roi.x; x < roi.x + roi.w; ++x) {
      const double s = score.at(x, y);
      if (s > 0.0 && s >= kQuality * best) cands.push_back({s, x, y});
    }
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) { return a.s > b.s; });

  std::vector<FeaturePoint> out;
  for (const auto& c : cands) {
    if (out.size() == max_n) break;
    const bool clear = std::none_of(out.begin(), out.end(), [&](const FeaturePoint& p) {
      const double dx = p.x - c.x, dy = p.y - c.y;
      return dx * dx + dy * dy < kMinDistance * kMinDistance;
    });
    if (clear) out.push_back({static_cast<double>(c.x), static_cast<double>(c.y), static_cast<int>(out.size()), true});
  }
  return out;
}

/// Pyramidal Lucas-Kanade. Each window's mean intensity difference is
/// removed before solving, so uniform brightness changes (pulse, flashes)
/// do not bias the flow.
inline std::vector<FeaturePoint> track_features(const GrayImage& prev, const GrayImage& next,
                                                const std::vector<FeaturePoint>& points,
                                                const KltParams& params = {}) {
  if (prev.width != next.width || prev.height != next.height) {
    throw Error(Errc::GeometryMismatch, "prev and next rasters differ in size");
  }
  const auto prev_pyr = detail::build_pyramid(prev, params.levels);
  const auto next_pyr = detail::build_pyramid(next, params.levels);
  const int half = params.window / 2;
  const std::size_t npix = static_cast<std::size_t>(params.window) * params.window;

  std::vector<double> ix(npix), iy(npix), iv(npix);
  std::vector<FeaturePoint> out = points;
  for (auto& pt : out) {
    if (!pt.alive) continue;
    // Windows (plus one pixel for the gradient stencil) must fit at full resolution.
    auto window_inside = [&](double x, double y) {
      return x - half - 1 >= 0 && y - half - 1 >= 0 && x + half + 1 <= prev.width - 1 &&
             y + half + 1 <= prev.height - 1;
    };
    if (!window_inside(pt.x, pt.y)) {
      pt.alive = false;
      continue;
    }
    double gx = 0.0, gy = 0.0;  // flow guess at the current level
    bool ok = true;
    for (int level = params.levels - 1; level >= 0 && ok; --level) {
      const GrayImage& I = prev_pyr[level];
      const GrayImage& J = next_pyr[level];
      const double scale = std::ldexp(1.0, -level);
      const double px = pt.x * scale, py = pt.y * scale;

      double a = 0, b = 0, c = 0;
      std::size_t k = 0;
      for (int wy = -half; wy <= half; ++wy) {
        for (int wx = -half; wx <= half; ++wx, ++k) {
          const double x = px + wx, y = py + wy;
          iv[k] = detail::bilinear(I, x, y);
          ix[k] = 0.5 * (detail::bilinear(I, x + 1, y) - detail::bilinear(I, x - 1, y));
          iy[k] = 0.5 * (detail::bilinear(I, x, y + 1) - detail::bilinear(I, x, y - 1));
          a += ix[k] * ix[k];
          b += ix[k] * iy[k];
          c += iy[k] * iy[k];
        }
      }
      // Offset compensation: remove gradient mean so the mean-difference term drops out exactly.
      double sx = 0, sy = 0;
      for (std::size_t i = 0; i < npix; ++i) sx += ix[i], sy += iy[i];
      const double n = static_cast<double>(npix);
      a -= sx * sx / n;
      b -= sx * sy / n;
      c -= sy * sy / n;
      const double det = a * c - b * b;
      const double min_eig = 0.5 * (a + c) - std::sqrt(0.25 * (a - c) * (a - c) + b * b);
      if (det <= 0.0 || min_eig / n < params.min_eigen) {
        ok = false;
        break;
      }

      double vx = 0.0, vy = 0.0;
      for (int it = 0; it < params.max_iterations; ++it) {
        double bx = 0, by = 0, mean_j = 0;
        k = 0;
        for (int wy = -half; wy <= half; ++wy) {
          for (int wx = -half; wx <= half; ++wx, ++k) {
            const double diff = iv[k] - detail::bilinear(J, px + gx + vx + wx, py + gy + vy + wy);
            bx += diff * ix[k];
            by += diff * iy[k];
            mean_j += diff;
          }
        }
        mean_j /= n;
        bx -= mean_j * sx;
        by -= mean_j * sy;
        const double ex = (c * bx - b * by) / det;
        const double ey = (a * by - b * bx) / det;
        vx += ex;
        vy += ey;
        if (ex * ex + ey * ey < params.epsilon * params.epsilon) break;
      }
      if (level > 0) {
        gx = 2.0 * (gx + vx);
        gy = 2.0 * (gy + vy);
      } else {
        gx += vx;
        gy += vy;
      }
    }
    if (!ok) {
      pt.alive = false;
      continue;
    }
    const double nx = pt.x + gx, ny = pt.y + gy;
    if (nx < 0 || ny < 0 || nx > next.width - 1 || ny > next.height - 1 || !window_inside(nx, ny)) {
      pt.alive = false;
      pt.x = nx, pt.y = ny;
      continue;
    }
    // Offset-compensated RMS residual at full resolution.
    double sum = 0, sum2 = 0;
    for (int wy = -half; wy <= half; ++wy) {
      for (int wx = -half; wx <= half; ++wx) {
        const double d = detail::bilinear(prev, pt.x + wx, pt.y + wy) - detail::bilinear(next, nx + wx, ny + wy);
        sum += d;
        sum2 += d * d;
      }
    }
    const double n = static_cast<double>(npix);
    const double rms = std::sqrt(std::max(0.0, sum2 / n - (sum / n) * (sum / n)));
    pt.x = nx;
    pt.y = ny;
    if (rms > params.max_residual) pt.alive = false;
  }
  return out;
}

namespace detail {

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline RoiBox clamp_box(RoiBox b, int width, int height) {
  b.w = std::min(b.w, width);
  b.h = std::min(b.h, height);
  b.x = std::clamp(b.x, 0, width - b.w);
  b.y = std::clamp(b.y, 0, height - b.h);
  return b;
}

}  // namespace detail

/// Replaces per-frame detector boxes with the frame-0 box carried along by
/// the median KLT displacement. Falls back to the input boxes (stabilized =
/// false) when no trackable features remain.
inline RoiTrack stabilize_roi(const std::vector<RoiBox>& boxes, const FrameSequence& frames,
                              RoiSource source = RoiSource::External, std::size_t max_features = 100,
                              const KltParams& params = {}) {
  if (boxes.size() != frames.size()) {
    throw Error(Errc::LengthMismatch, std::to_string(boxes.size()) + " boxes for " +
                                          std::to_string(frames.size()) + " frames");
  }
  RoiTrack fallback{boxes, source, false};
  if (frames.size() == 0) return fallback;
  for (auto& b : fallback.boxes) b = detail::clamp_box(b, frames.width, frames.height);

  const RoiBox base = fallback.boxes[0];
  GrayImage prev = to_luma(frames.frames[0]);
  auto points = select_features(prev, base, max_features);
  if (points.empty()) return fallback;

  RoiTrack out{{base}, source, true};
  out.boxes.reserve(frames.size());
  std::size_t epoch_count = points.size();
  std::vector<FeaturePoint> origin = points;  // positions at the start of the epoch
  double epoch_dx = 0.0, epoch_dy = 0.0;      // offset of the epoch start from frame 0
  double cur_dx = 0.0, cur_dy = 0.0;

  for (std::size_t f = 1; f < frames.size(); ++f) {
    GrayImage next = to_luma(frames.frames[f]);
    points = track_features(prev, next, points, params);

    std::vector<double> dxs, dys;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!points[i].alive) continue;
      dxs.push_back(points[i].x - origin[i].x);
      dys.push_back(points[i].y - origin[i].y);
    }
    if (!dxs.empty()) {
      cur_dx = epoch_dx + detail::median_of(dxs);
      cur_dy = epoch_dy + detail::median_of(dys);
    }
    RoiBox box = base;
    box.x += static_cast<int>(std::lround(cur_dx));
    box.y += static_cast<int>(std::lround(cur_dy));
    box = detail::clamp_box(box, frames.width, frames.height);
    out.boxes.push_back(box);

    if (static_cast<double>(dxs.size()) < 0.25 * static_cast<double>(epoch_count)) {
      points = select_features(next, box, max_features);
      if (points.empty()) return fallback;
      origin = points;
      epoch_count = points.size();
      epoch_dx = cur_dx;
      epoch_dy = cur_dy;
    }
    prev = std::move(next);
  }
  return out;
}

}  // namespace rppg
