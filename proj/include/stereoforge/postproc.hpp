#ifndef STEREOFORGE_POSTPROC_HPP
#define STEREOFORGE_POSTPROC_HPP

#include <array>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include "error.hpp"
#include "image.hpp"
#include "parallel.hpp"

namespace stereoforge {

using ValueMap = std::array<std::uint8_t, 256>;

/// Cumulative 256-bin histogram of one channel.
inline std::array<std::int64_t, 256> channel_cdf(const Image& img, int channel)
{
  std::array<std::int64_t, 256> cdf{};
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) ++cdf[img(x, y, channel)];
  for (int v = 1; v < 256; ++v) cdf[v] += cdf[v - 1];
  return cdf;
}

/// v -> min{u : F_ref(u) >= F_src(v)}, compared exactly on integer counts.
inline ValueMap histogram_mapping(const Image& src, const Image& ref, int channel)
{
  auto cs = channel_cdf(src, channel), cr = channel_cdf(ref, channel);
  const std::int64_t ns = cs[255], nr = cr[255];
  ValueMap map{};
  int u = 0;
  for (int v = 0; v < 256; ++v) {
    // F_src is non-decreasing in v, so u only moves forward.
    while (u < 255 && cr[u] * ns < cs[v] * nr) ++u;
    map[v] = static_cast<std::uint8_t>(u);
  }
  return map;
}

inline Image match_histograms(const Image& src, const Image& ref)
{
  std::array<ValueMap, 3> maps{histogram_mapping(src, ref, 0), histogram_mapping(src, ref, 1),
                               histogram_mapping(src, ref, 2)};
  Image out(src.width(), src.height());
  for (int y = 0; y < src.height(); ++y)
    for (int x = 0; x < src.width(); ++x)
      for (int c = 0; c < 3; ++c) out(x, y, c) = maps[c][src(x, y, c)];
  return out;
}

/// Frame-by-frame histogram matching of `src` to the corresponding `ref` frame.
inline Video match_histograms(const Video& src, const Video& ref)
{
  if (src.frames() != ref.frames())
    throw Error(Errc::FrameCountMismatch, "histogram matching needs equal frame counts",
                std::to_string(src.frames()) + " vs " + std::to_string(ref.frames()));
  std::vector<Image> frames(static_cast<std::size_t>(src.frames()));
  parallel_for(src.frames(), [&](int f) { frames[f] = match_histograms(src[f], ref[f]); });
  return Video(std::move(frames));
}

enum class PackMode { sbs, tb, anaglyph };

inline PackMode parse_pack_mode(std::string_view s)
{
  if (s == "sbs") return PackMode::sbs;
  if (s == "tb") return PackMode::tb;
  if (s == "anaglyph") return PackMode::anaglyph;
  throw Error(Errc::InvalidConfig, "unknown pack mode '" + std::string(s) + "'");
}

inline Image pack(const Image& left, const Image& right, PackMode mode)
{
  require_same_size(left, right, "pack: view sizes");
  const int w = left.width(), h = left.height();
  switch (mode) {
  case PackMode::sbs: {
    Image out(2 * w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < 3; ++c) {
          out(x, y, c) = left(x, y, c);
          out(w + x, y, c) = right(x, y, c);
        }
    return out;
  }
  case PackMode::tb: {
    Image out(w, 2 * h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < 3; ++c) {
          out(x, y, c) = left(x, y, c);
          out(x, h + y, c) = right(x, y, c);
        }
    return out;
  }
  case PackMode::anaglyph: {
    Image out = right;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out(x, y, 0) = left(x, y, 0);
    return out;
  }
  }
  return {};
}

inline Video pack(const Video& left, const Video& right, PackMode mode)
{
  require_same_shape(left, right, "pack: view shapes");
  std::vector<Image> frames(static_cast<std::size_t>(left.frames()));
  parallel_for(left.frames(), [&](int f) { frames[f] = pack(left[f], right[f], mode); });
  return Video(std::move(frames));
}

/// Splits a side-by-side or top-bottom frame back into its two views.
inline std::pair<Image, Image> unpack(const Image& packed, PackMode mode)
{
  if (mode == PackMode::anaglyph) throw Error(Errc::InvalidConfig, "anaglyph packing is lossy");
  const bool sbs = mode == PackMode::sbs;
  if ((sbs ? packed.width() : packed.height()) % 2 != 0)
    throw Error(Errc::DimensionMismatch, "packed frame has odd split dimension");
  const int w = sbs ? packed.width() / 2 : packed.width();
  const int h = sbs ? packed.height() : packed.height() / 2;
  Image a(w, h), b(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        a(x, y, c) = packed(x, y, c);
        b(x, y, c) = sbs ? packed(w + x, y, c) : packed(x, h + y, c);
      }
  return {std::move(a), std::move(b)};
}

} // namespace stereoforge

#endif // STEREOFORGE_POSTPROC_HPP
