#ifndef STEREOFORGE_TEST_SUPPORT_HPP
#define STEREOFORGE_TEST_SUPPORT_HPP

// Shared fixtures and brute-force oracles. Oracles here are written
// independently of the library code paths they check.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <stereoforge/stereoforge.hpp>

namespace sftest {

namespace fs = std::filesystem;
using namespace stereoforge;

class TempDir {
public:
  TempDir()
  {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("sf_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir()
  {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& leaf) const { return path_ / leaf; }

private:
  fs::path path_;
};

inline Image random_image(int w, int h, std::mt19937& rng)
{
  Image img(w, h);
  std::uniform_int_distribution<int> d(0, 255);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(d(rng));
  return img;
}

inline Image constant_image(int w, int h, std::uint8_t value)
{
  return Image(w, h, value);
}

/// Smooth color texture for tests that need natural-looking content.
inline Image noise_texture(int w, int h, std::uint64_t seed, double cell_px = 6.0)
{
  Image img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      auto rgb = texture::sample(seed, x / cell_px, y / cell_px);
      for (int c = 0; c < 3; ++c) img(x, y, c) = rgb[c];
    }
  return img;
}

inline Video render_clip(std::uint64_t seed, int w, int h, int frames, SceneConfig cfg = {})
{
  cfg.width = w;
  cfg.height = h;
  cfg.frame_count = frames;
  auto scene = sample_scene(seed, cfg);
  return render_stereo(scene, make_rig(scene, w, h)).left;
}

/// Enumerates every source pixel for every target: the winner is the
/// smallest key, then the largest source x.
inline WarpResult splat_oracle(const Image& frame, const DisparityMap& disp, const DepthMap* depth)
{
  const int w = frame.width(), h = frame.height();
  WarpResult r{Image(w, h), Mask(w, h, 1), DepthMap(w, h, std::numeric_limits<float>::infinity())};
  for (int y = 0; y < h; ++y)
    for (int tx = 0; tx < w; ++tx) {
      int best_x = -1;
      float best_key = std::numeric_limits<float>::infinity();
      for (int sx = 0; sx < w; ++sx) {
        double target = static_cast<double>(sx) - disp(sx, y);
        // round half up without going through the library helper
        int t = static_cast<int>(std::floor(target + 0.5));
        if (t != tx) continue;
        float key = depth ? (*depth)(sx, y) : -disp(sx, y);
        if (best_x < 0 || key < best_key || (key == best_key && sx > best_x)) {
          best_key = key;
          best_x = sx;
        }
      }
      if (best_x < 0) continue;
      r.holes(tx, y) = 0;
      r.zbuf(tx, y) = best_key;
      for (int c = 0; c < 3; ++c) r.image(tx, y, c) = frame(best_x, y, c);
    }
  return r;
}

/// Minkowski sum of the set bits with a (2r+1)^2 square, by enumeration.
inline Mask minkowski_oracle(const Mask& m, int radius)
{
  Mask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      if (!m(x, y)) continue;
      for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
          int px = x + dx, py = y + dy;
          if (px >= 0 && py >= 0 && px < m.width() && py < m.height()) out(px, py) = 1;
        }
    }
  return out;
}

/// For each masked pixel scan outward for the closest valid source in the
/// row (right first, then left); fully masked rows take the nearest row.
inline Image nearest_valid_oracle(const Image& frame, const Mask& mask)
{
  const int w = frame.width(), h = frame.height();
  Image out = frame;
  auto row_valid = [&](int y) {
    for (int x = 0; x < w; ++x)
      if (!mask(x, y)) return true;
    return false;
  };
  auto fill_pixel = [&](int x, int y) -> const std::uint8_t* {
    for (int d = 0; x + d < w; ++d)
      if (!mask(x + d, y)) return &frame(x + d, y, 0);
    for (int d = 1; x - d >= 0; ++d)
      if (!mask(x - d, y)) return &frame(x - d, y, 0);
    return nullptr;
  };
  for (int y = 0; y < h; ++y) {
    int src_row = y;
    if (!row_valid(y)) {
      src_row = -1;
      for (int d = 1; d < h && src_row < 0; ++d) {
        if (y - d >= 0 && row_valid(y - d)) src_row = y - d;
        else if (y + d < h && row_valid(y + d)) src_row = y + d;
      }
    }
    for (int x = 0; x < w; ++x) {
      if (!mask(x, y)) continue;
      const std::uint8_t* p = fill_pixel(x, src_row);
      for (int c = 0; c < 3; ++c) out(x, y, c) = p[c];
    }
  }
  return out;
}

/// Histogram matching by sorting: each source value maps to the reference
/// order statistic at the same cumulative fraction.
inline std::array<std::uint8_t, 256> sort_quantile_oracle(const Image& src, const Image& ref, int c)
{
  std::vector<int> s, r;
  for (int y = 0; y < src.height(); ++y)
    for (int x = 0; x < src.width(); ++x) s.push_back(src(x, y, c));
  for (int y = 0; y < ref.height(); ++y)
    for (int x = 0; x < ref.width(); ++x) r.push_back(ref(x, y, c));
  std::sort(r.begin(), r.end());
  std::array<std::uint8_t, 256> map{};
  for (int v = 0; v < 256; ++v) {
    // fraction of src samples <= v
    auto le = std::count_if(s.begin(), s.end(), [v](int a) { return a <= v; });
    // smallest index k with (k+1)/|r| >= le/|s|
    std::size_t k = 0;
    while (k + 1 < r.size() && static_cast<double>(k + 1) * s.size() < static_cast<double>(le) * r.size()) ++k;
    map[v] = static_cast<std::uint8_t>(r[k]);
  }
  return map;
}

inline Video brighten(const Video& v, int delta)
{
  std::vector<Image> frames;
  for (const auto& f : v) {
    Image g = f;
    for (auto& px : g.data()) px = clamp_u8(px + delta);
    frames.push_back(std::move(g));
  }
  return Video(std::move(frames));
}

} // namespace sftest

#endif // STEREOFORGE_TEST_SUPPORT_HPP
