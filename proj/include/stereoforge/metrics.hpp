#ifndef STEREOFORGE_METRICS_HPP
#define STEREOFORGE_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "image.hpp"
#include "parallel.hpp"

namespace stereoforge {

/// Reported in place of +inf when two images are identical.
inline constexpr double kPsnrCap = 99.0;

inline double psnr_from_mse(double mse)
{
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

/// PSNR over all channels of the pixels where `mask` is 0 (all pixels when
/// no mask is given).
inline double psnr(const Image& a, const Image& b, const Mask* mask = nullptr)
{
  require_same_size(a, b, "psnr: image sizes");
  if (mask) require_same_size(a, *mask, "psnr: mask size");
  double sum = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      if (mask && (*mask)(x, y)) continue;
      for (int c = 0; c < 3; ++c) {
        double d = static_cast<double>(a(x, y, c)) - b(x, y, c);
        sum += d * d;
      }
      ++count;
    }
  if (count == 0) throw Error(Errc::EmptyMask, "mask excludes every pixel");
  return psnr_from_mse(sum / (3.0 * count));
}

using LumaPlane = Plane<double, 1>;

inline LumaPlane luma(const Image& img)
{
  LumaPlane y(img.width(), img.height());
  for (int r = 0; r < img.height(); ++r)
    for (int x = 0; x < img.width(); ++x)
      y(x, r) = 0.299 * img(x, r, 0) + 0.587 * img(x, r, 1) + 0.114 * img(x, r, 2);
  return y;
}

namespace detail {

inline std::vector<double> ssim_window()
{
  std::vector<double> k(11);
  double sum = 0.0;
  for (int i = 0; i < 11; ++i) {
    double t = i - 5;
    k[i] = std::exp(-t * t / (2.0 * 1.5 * 1.5));
    sum += k[i];
  }
  for (auto& v : k) v /= sum;
  return k;
}

/// Separable "valid" correlation with an 11-tap kernel.
inline LumaPlane filter_valid(const LumaPlane& in, const std::vector<double>& k)
{
  const int r = static_cast<int>(k.size()) / 2;
  const int w = in.width() - 2 * r, h = in.height() - 2 * r;
  LumaPlane horiz(w, in.height());
  for (int y = 0; y < in.height(); ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int i = 0; i < static_cast<int>(k.size()); ++i) s += k[i] * in(x + i, y);
      horiz(x, y) = s;
    }
  LumaPlane out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int i = 0; i < static_cast<int>(k.size()); ++i) s += k[i] * horiz(x, y + i);
      out(x, y) = s;
    }
  return out;
}

} // namespace detail

/// Gaussian-window SSIM (11x11, sigma 1.5, K1 0.01, K2 0.03) on luma,
/// averaged over window positions fully inside the image.
inline double ssim(const Image& a, const Image& b)
{
  require_same_size(a, b, "ssim: image sizes");
  if (a.width() < 11 || a.height() < 11)
    throw Error(Errc::TooSmall, "ssim needs at least 11x11 pixels");
  static const std::vector<double> window = detail::ssim_window();
  constexpr double c1 = (0.01 * 255) * (0.01 * 255);
  constexpr double c2 = (0.03 * 255) * (0.03 * 255);

  LumaPlane x = luma(a), y = luma(b);
  LumaPlane xx(x.width(), x.height()), yy(xx), xy(xx);
  for (std::size_t i = 0; i < x.data().size(); ++i) {
    xx.data()[i] = x.data()[i] * x.data()[i];
    yy.data()[i] = y.data()[i] * y.data()[i];
    xy.data()[i] = x.data()[i] * y.data()[i];
  }
  LumaPlane mx = detail::filter_valid(x, window), my = detail::filter_valid(y, window);
  LumaPlane exx = detail::filter_valid(xx, window), eyy = detail::filter_valid(yy, window);
  LumaPlane exy = detail::filter_valid(xy, window);

  double total = 0.0;
  for (std::size_t i = 0; i < mx.data().size(); ++i) {
    double ux = mx.data()[i], uy = my.data()[i];
    double vx = exx.data()[i] - ux * ux, vy = eyy.data()[i] - uy * uy;
    double cxy = exy.data()[i] - ux * uy;
    total += ((2.0 * ux * uy + c1) * (2.0 * cxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(mx.data().size());
}

/// Feature vector: per 8x8 block the mean luma, then per block the mean Sobel
/// gradient magnitude; the concatenation is L2-normalized. Partial blocks at
/// the right/bottom edges are ignored.
inline std::vector<double> patch_features(const Image& img)
{
  const int bw = img.width() / 8, bh = img.height() / 8;
  if (bw < 1 || bh < 1) throw Error(Errc::TooSmall, "patch features need at least 8x8 pixels");
  LumaPlane y = luma(img);
  const int w = y.width(), h = y.height();
  auto at = [&](int px, int py) { return y(std::clamp(px, 0, w - 1), std::clamp(py, 0, h - 1)); };

  const std::size_t blocks = static_cast<std::size_t>(bw) * bh;
  std::vector<double> feat(2 * blocks, 0.0);
  for (int py = 0; py < bh * 8; ++py)
    for (int px = 0; px < bw * 8; ++px) {
      double gx = (at(px + 1, py - 1) + 2 * at(px + 1, py) + at(px + 1, py + 1)) -
                  (at(px - 1, py - 1) + 2 * at(px - 1, py) + at(px - 1, py + 1));
      double gy = (at(px - 1, py + 1) + 2 * at(px, py + 1) + at(px + 1, py + 1)) -
                  (at(px - 1, py - 1) + 2 * at(px, py - 1) + at(px + 1, py - 1));
      std::size_t b = static_cast<std::size_t>(py / 8) * bw + px / 8;
      feat[b] += y(px, py);
      feat[blocks + b] += std::sqrt(gx * gx + gy * gy);
    }
  double norm = 0.0;
  for (auto& v : feat) {
    v /= 64.0;
    norm += v * v;
  }
  norm = std::sqrt(norm);
  if (norm > 0.0)
    for (auto& v : feat) v /= norm;
  return feat;
}

inline double patch_cosine(const Image& a, const Image& b)
{
  require_same_size(a, b, "patch_cosine: image sizes");
  auto fa = patch_features(a), fb = patch_features(b);
  double na = std::inner_product(fa.begin(), fa.end(), fa.begin(), 0.0);
  double nb = std::inner_product(fb.begin(), fb.end(), fb.begin(), 0.0);
  if (na == 0.0 && nb == 0.0) return 1.0;  // two black frames
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::inner_product(fa.begin(), fa.end(), fb.begin(), 0.0);
}

enum class FrameMetric { ssim, psnr, patch_cosine };

inline double frame_metric(FrameMetric kind, const Image& a, const Image& b)
{
  switch (kind) {
  case FrameMetric::ssim: return ssim(a, b);
  case FrameMetric::psnr: return psnr(a, b);
  case FrameMetric::patch_cosine: return patch_cosine(a, b);
  }
  return 0.0;
}

inline std::string_view frame_metric_name(FrameMetric kind)
{
  switch (kind) {
  case FrameMetric::ssim: return "ssim";
  case FrameMetric::psnr: return "psnr";
  case FrameMetric::patch_cosine: return "patch_cosine";
  }
  return "?";
}

struct ScoreSeries {
  std::vector<double> per_frame;
  double mean = 0.0;
};

inline ScoreSeries make_series(std::vector<double> values)
{
  ScoreSeries s{std::move(values), 0.0};
  if (!s.per_frame.empty())
    s.mean = std::accumulate(s.per_frame.begin(), s.per_frame.end(), 0.0) / s.per_frame.size();
  return s;
}

/// Per-frame `kind` between corresponding frames of two clips.
inline ScoreSeries compare_videos(FrameMetric kind, const Video& a, const Video& b,
                                  const OcclusionMask* mask = nullptr)
{
  require_same_shape(a, b, "compare_videos: clip shapes");
  if (mask) require_same_shape(a, *mask, "compare_videos: mask shape");
  std::vector<double> v(static_cast<std::size_t>(a.frames()));
  parallel_for(a.frames(), [&](int f) {
    v[f] = (kind == FrameMetric::psnr && mask) ? psnr(a[f], b[f], &(*mask)[f])
                                               : frame_metric(kind, a[f], b[f]);
  });
  return make_series(std::move(v));
}

/// Mean of `kind` over the F-1 consecutive frame pairs.
inline ScoreSeries temporal_consistency(const Video& video, FrameMetric kind)
{
  if (video.frames() < 2) throw Error(Errc::SingleFrame, "temporal consistency needs >= 2 frames");
  std::vector<double> v(static_cast<std::size_t>(video.frames() - 1));
  parallel_for(video.frames() - 1, [&](int f) { v[f] = frame_metric(kind, video[f], video[f + 1]); });
  return make_series(std::move(v));
}

/// Mean over frames of patch_cosine(left_f, right_f).
inline ScoreSeries view_consistency(const Video& left, const Video& right)
{
  require_same_shape(left, right, "view_consistency: clip shapes");
  return compare_videos(FrameMetric::patch_cosine, left, right);
}

/// Immerkaer's fast noise estimate on luma: sigma from the mean absolute
/// response to the difference-of-Laplacians kernel.
inline double estimate_noise_sigma(const Image& img)
{
  if (img.width() < 3 || img.height() < 3) throw Error(Errc::TooSmall, "noise estimate needs 3x3");
  LumaPlane y = luma(img);
  double sum = 0.0;
  for (int r = 1; r < y.height() - 1; ++r)
    for (int x = 1; x < y.width() - 1; ++x) {
      double v = y(x - 1, r - 1) - 2 * y(x, r - 1) + y(x + 1, r - 1) - 2 * y(x - 1, r) + 4 * y(x, r) -
                 2 * y(x + 1, r) + y(x - 1, r + 1) - 2 * y(x, r + 1) + y(x + 1, r + 1);
      sum += std::abs(v);
    }
  double n = static_cast<double>(y.width() - 2) * (y.height() - 2);
  return std::sqrt(std::numbers::pi / 2.0) * sum / (6.0 * n);
}

} // namespace stereoforge

#endif // STEREOFORGE_METRICS_HPP
