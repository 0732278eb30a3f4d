#ifndef STEREOFORGE_WARP_HPP
#define STEREOFORGE_WARP_HPP

// Disparity-based forward warping of the left view into the right view.
// Content moves toward -x: source (x, y) lands on (round(x - d), y).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <variant>
#include <vector>

#include "error.hpp"
#include "image.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "tensorio.hpp"

namespace stereoforge {

struct MetricDisparity {
  double focal_px = 0.0;
  double baseline_m = 0.0;
};

struct ScaledDisparity {
  double scale = 0.03;
};

using DisparityMode = std::variant<MetricDisparity, ScaledDisparity>;

inline constexpr double kDefaultDisparityScale = 0.03;

/// Metric: d = f*b/z. Scaled: d = s*W*q with q the inverse depth min-max
/// normalized over the whole clip (so the largest disparity is exactly s*W).
inline DisparityField depth_to_disparity(const DepthSequence& depth, const DisparityMode& mode)
{
  for (int i = 0; i < depth.frames(); ++i) require_positive_depth(depth[i], "frame " + std::to_string(i));
  DisparityField out(depth.frames(), depth.width(), depth.height());

  if (const auto* m = std::get_if<MetricDisparity>(&mode)) {
    if (!(m->focal_px > 0.0) || !(m->baseline_m > 0.0))
      throw Error(Errc::InvalidConfig, "metric disparity needs positive focal and baseline");
    double fb = m->focal_px * m->baseline_m;
    parallel_for(depth.frames(), [&](int f) {
      auto src = depth[f].data();
      auto dst = out[f].data();
      for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<float>(fb / src[i]);
    });
    return out;
  }

  double s = std::get<ScaledDisparity>(mode).scale;
  if (!(s >= 0.0) || !std::isfinite(s)) throw Error(Errc::InvalidConfig, "disparity scale must be >= 0");
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& frame : depth)
    for (float z : frame.data()) {
      double inv = 1.0 / z;
      lo = std::min(lo, inv);
      hi = std::max(hi, inv);
    }
  double range = hi - lo;
  double gain = s * depth.width();
  parallel_for(depth.frames(), [&](int f) {
    auto src = depth[f].data();
    auto dst = out[f].data();
    for (std::size_t i = 0; i < src.size(); ++i) {
      double q = range > 0.0 ? (1.0 / src[i] - lo) / range : 0.0;
      dst[i] = static_cast<float>(gain * q);
    }
  });
  return out;
}

struct WarpResult {
  Image image;
  Mask holes;      // 1 = no source landed here
  DepthMap zbuf;   // winning ordering key; +inf where holes == 1
};

/// Target column of a source pixel; half-way cases round up.
inline int splat_target(int x, float disparity) noexcept
{
  return static_cast<int>(std::floor(static_cast<double>(x) - disparity + 0.5));
}

/// Splats each source pixel to (round(x - d), y). Collisions keep the source
/// with the smaller key, then the larger source x. The key is `depth` when
/// given and -disparity otherwise. Unwritten targets are black with holes = 1.
inline WarpResult forward_warp(const Image& frame, const DisparityMap& disp,
                               const DepthMap* depth = nullptr)
{
  require_same_size(frame, disp, "forward_warp: frame/disparity size");
  if (depth) require_same_size(frame, *depth, "forward_warp: frame/depth size");
  const int w = frame.width(), h = frame.height();
  constexpr float inf = std::numeric_limits<float>::infinity();
  WarpResult r{Image(w, h), Mask(w, h, 1), DepthMap(w, h, inf)};

  std::vector<int> winner(static_cast<std::size_t>(w));
  for (int y = 0; y < h; ++y) {
    std::fill(winner.begin(), winner.end(), -1);
    for (int x = 0; x < w; ++x) {
      float d = disp(x, y);
      int tx = splat_target(x, d);
      if (tx < 0 || tx >= w) continue;
      float key = depth ? (*depth)(x, y) : -d;
      float& best = r.zbuf(tx, y);
      if (key < best || (key == best && x > winner[tx])) {
        best = key;
        winner[tx] = x;
      }
    }
    for (int tx = 0; tx < w; ++tx) {
      int sx = winner[tx];
      if (sx < 0) continue;
      r.holes(tx, y) = 0;
      for (int c = 0; c < 3; ++c) r.image(tx, y, c) = frame(sx, y, c);
    }
  }
  return r;
}

/// Fills horizontal hole runs of length <= max_span that have valid pixels on
/// both sides by linear interpolation along the row (rounded half up).
inline void fill_flying_pixels(Image& image, Mask& mask, int max_span = 2)
{
  require_same_size(image, mask, "fill_flying_pixels: image/mask size");
  if (max_span < 1) throw Error(Errc::InvalidConfig, "max_span must be >= 1");
  const int w = image.width();
  for (int y = 0; y < image.height(); ++y) {
    int x = 0;
    while (x < w) {
      if (!mask(x, y)) {
        ++x;
        continue;
      }
      int start = x;
      while (x < w && mask(x, y)) ++x;
      int len = x - start;
      if (start == 0 || x == w || len > max_span) continue;
      const int n = len + 1;
      for (int k = 1; k <= len; ++k) {
        for (int c = 0; c < 3; ++c) {
          long a = image(start - 1, y, c), b = image(x, y, c);
          long num = a * (n - k) + b * k;  // value = num / n
          image(start + k - 1, y, c) = static_cast<std::uint8_t>((2 * num + n) / (2 * n));
        }
        mask(start + k - 1, y) = 0;
      }
    }
  }
}

/// Binary dilation with a (2r+1)^2 square, applied `iterations` times.
/// Outside the frame counts as unset.
inline Mask dilate_mask(const Mask& mask, int radius = 1, int iterations = 1)
{
  if (radius < 1) throw Error(Errc::InvalidConfig, "dilation radius must be >= 1");
  if (iterations < 0) throw Error(Errc::InvalidConfig, "iterations must be >= 0");
  const int w = mask.width(), h = mask.height();
  Mask cur = mask;
  Mask tmp(w, h);
  for (int it = 0; it < iterations; ++it) {
    // The square element is separable: horizontal max, then vertical max.
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        std::uint8_t v = 0;
        for (int k = std::max(0, x - radius); k <= std::min(w - 1, x + radius) && !v; ++k)
          v = cur(k, y);
        tmp(x, y) = v;
      }
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        std::uint8_t v = 0;
        for (int k = std::max(0, y - radius); k <= std::min(h - 1, y + radius) && !v; ++k)
          v = tmp(x, k);
        cur(x, y) = v;
      }
  }
  return cur;
}

inline OcclusionMask dilate_mask(const OcclusionMask& mask, int radius = 1, int iterations = 1)
{
  std::vector<Mask> frames(static_cast<std::size_t>(mask.frames()));
  parallel_for(mask.frames(), [&](int f) { frames[f] = dilate_mask(mask[f], radius, iterations); });
  return OcclusionMask(std::move(frames));
}

struct WarpOptions {
  int fill_span = 2;   // 0 disables flying-pixel filling
  int dilate = 1;      // dilation radius, 0 disables
  int dilate_iterations = 1;
};

struct WarpedVideo {
  Video frames;
  OcclusionMask mask;
};

/// Warps a whole clip: splat, fill thin holes, dilate the hole mask. Pixels
/// newly covered by dilation are cleared so masked pixels are always black.
inline WarpedVideo warp_video(const Video& video, const DepthSequence& depth,
                              const DisparityMode& mode, const WarpOptions& opt = {})
{
  require_same_shape(video, depth, "warp_video: video/depth shape");
  DisparityField disp = depth_to_disparity(depth, mode);
  bool metric = std::holds_alternative<MetricDisparity>(mode);
  WarpedVideo out{Video(video.frames(), video.width(), video.height()),
                  OcclusionMask(video.frames(), video.width(), video.height())};
  parallel_for(video.frames(), [&](int f) {
    WarpResult r = forward_warp(video[f], disp[f], metric ? &depth[f] : nullptr);
    if (opt.fill_span > 0) fill_flying_pixels(r.image, r.holes, opt.fill_span);
    if (opt.dilate > 0 && opt.dilate_iterations > 0) {
      Mask grown = dilate_mask(r.holes, opt.dilate, opt.dilate_iterations);
      for (int y = 0; y < grown.height(); ++y)
        for (int x = 0; x < grown.width(); ++x)
          if (grown(x, y) && !r.holes(x, y))
            for (int c = 0; c < 3; ++c) r.image(x, y, c) = 0;
      r.holes = std::move(grown);
    }
    out.frames[f] = std::move(r.image);
    out.mask[f] = std::move(r.holes);
  });
  return out;
}

struct ScaleCalibration {
  double scale = 0.0;
  double psnr = 0.0;                 // mean masked PSNR at `scale`
  std::vector<double> grid;          // every candidate scale
  std::vector<double> grid_psnr;     // its score
};

inline constexpr double kOverlapThresholdDb = 20.0;

/// Grid-searches s in {0.02, 0.025, ..., 0.2} for the scaled-mode warp of
/// `left` that best overlaps `right` (mean masked PSNR over frames). The
/// first grid point wins ties. Throws NoOverlap when the best score is below
/// `threshold_db`.
inline ScaleCalibration calibrate_disparity_scale(const Video& left, const DepthSequence& depth,
                                                  const Video& right,
                                                  double threshold_db = kOverlapThresholdDb)
{
  require_same_shape(left, depth, "calibrate: left/depth shape");
  require_same_shape(left, right, "calibrate: left/right shape");
  ScaleCalibration best;
  best.psnr = -std::numeric_limits<double>::infinity();
  for (int step = 0; step <= 36; ++step) {
    double s = (20 + 5 * step) / 1000.0;
    DisparityField disp = depth_to_disparity(depth, ScaledDisparity{s});
    std::vector<double> scores(static_cast<std::size_t>(left.frames()));
    parallel_for(left.frames(), [&](int f) {
      WarpResult r = forward_warp(left[f], disp[f]);
      try {
        scores[f] = psnr(r.image, right[f], &r.holes);
      } catch (const Error&) {
        scores[f] = 0.0;  // nothing landed in frame
      }
    });
    double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / scores.size();
    best.grid.push_back(s);
    best.grid_psnr.push_back(mean);
    if (mean > best.psnr) {
      best.psnr = mean;
      best.scale = s;
    }
  }
  if (best.psnr < threshold_db)
    throw Error(Errc::NoOverlap,
                "best overlap " + std::to_string(best.psnr) + " dB at s=" + std::to_string(best.scale) +
                    " is below " + std::to_string(threshold_db) + " dB");
  return best;
}

} // namespace stereoforge

#endif // STEREOFORGE_WARP_HPP
