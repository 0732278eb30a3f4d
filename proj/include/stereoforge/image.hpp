#ifndef STEREOFORGE_IMAGE_HPP
#define STEREOFORGE_IMAGE_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace stereoforge {

/// Dense row-major raster with interleaved channels.
template <typename T, int Channels>
class Plane {
public:
  using value_type = T;
  static constexpr int channels = Channels;

  Plane() = default;
  Plane(int width, int height, T fill = T{})
    : width_(width), height_(height),
      data_(static_cast<std::size_t>(width) * height * Channels, fill)
  {
    if (width < 0 || height < 0)
      throw Error(Errc::DimensionMismatch, "negative plane dimensions");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }
  bool empty() const noexcept { return data_.empty(); }

  std::size_t index(int x, int y, int c = 0) const noexcept
  {
    return (static_cast<std::size_t>(y) * width_ + x) * Channels + c;
  }
  T& operator()(int x, int y, int c = 0) noexcept { return data_[index(x, y, c)]; }
  const T& operator()(int x, int y, int c = 0) const noexcept { return data_[index(x, y, c)]; }

  std::span<T> row(int y) noexcept
  {
    return {data_.data() + index(0, y), static_cast<std::size_t>(width_) * Channels};
  }
  std::span<const T> row(int y) const noexcept
  {
    return {data_.data() + index(0, y), static_cast<std::size_t>(width_) * Channels};
  }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  bool same_size(int width, int height) const noexcept { return width_ == width && height_ == height; }
  template <typename P>
  bool same_size(const P& other) const noexcept { return same_size(other.width(), other.height()); }

  friend bool operator==(const Plane&, const Plane&) = default;

private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using Image = Plane<std::uint8_t, 3>;   // 8-bit sRGB
using Mask = Plane<std::uint8_t, 1>;    // 0 or 1
using DepthMap = Plane<float, 1>;       // positive finite depth
using DisparityMap = Plane<float, 1>;   // px, >= 0

/// Ordered frame stack; all frames share one size.
template <typename P>
class Sequence {
public:
  using frame_type = P;

  Sequence() = default;
  explicit Sequence(std::vector<P> frames) : frames_(std::move(frames)) { validate(); }
  Sequence(int count, int width, int height) : frames_(count, P(width, height)) {}

  int frames() const noexcept { return static_cast<int>(frames_.size()); }
  int width() const noexcept { return frames_.empty() ? 0 : frames_.front().width(); }
  int height() const noexcept { return frames_.empty() ? 0 : frames_.front().height(); }
  bool empty() const noexcept { return frames_.empty(); }

  P& operator[](int i) noexcept { return frames_[static_cast<std::size_t>(i)]; }
  const P& operator[](int i) const noexcept { return frames_[static_cast<std::size_t>(i)]; }

  auto begin() noexcept { return frames_.begin(); }
  auto end() noexcept { return frames_.end(); }
  auto begin() const noexcept { return frames_.begin(); }
  auto end() const noexcept { return frames_.end(); }

  void push_back(P frame)
  {
    if (!frames_.empty() && !frame.same_size(frames_.front()))
      throw Error(Errc::DimensionMismatch, "frame size differs from sequence",
                  std::to_string(frame.width()) + "x" + std::to_string(frame.height()));
    frames_.push_back(std::move(frame));
  }

  friend bool operator==(const Sequence&, const Sequence&) = default;

private:
  void validate() const
  {
    for (const auto& f : frames_)
      if (!f.same_size(frames_.front()))
        throw Error(Errc::DimensionMismatch, "frame size differs from sequence",
                    std::to_string(f.width()) + "x" + std::to_string(f.height()));
  }

  std::vector<P> frames_;
};

using Video = Sequence<Image>;
using DepthSequence = Sequence<DepthMap>;
using OcclusionMask = Sequence<Mask>;
using DisparityField = Sequence<DisparityMap>;

/// Throws DimensionMismatch unless both sequences agree on F, H and W.
template <typename A, typename B>
void require_same_shape(const Sequence<A>& a, const Sequence<B>& b, const char* what)
{
  if (a.frames() != b.frames() || a.width() != b.width() || a.height() != b.height())
    throw Error(Errc::DimensionMismatch, what,
                std::to_string(a.frames()) + "x" + std::to_string(a.height()) + "x" +
                    std::to_string(a.width()) + " vs " + std::to_string(b.frames()) + "x" +
                    std::to_string(b.height()) + "x" + std::to_string(b.width()));
}

template <typename A, typename B>
void require_same_size(const A& a, const B& b, const char* what)
{
  if (a.width() != b.width() || a.height() != b.height())
    throw Error(Errc::DimensionMismatch, what,
                std::to_string(a.width()) + "x" + std::to_string(a.height()) + " vs " +
                    std::to_string(b.width()) + "x" + std::to_string(b.height()));
}

inline std::uint8_t clamp_u8(long v) noexcept
{
  return static_cast<std::uint8_t>(v < 0 ? 0 : (v > 255 ? 255 : v));
}

/// Round half up, then clamp to the 8-bit range.
inline std::uint8_t round_u8(double v) noexcept
{
  double r = v + 0.5;
  if (!(r >= 0.0)) return 0;
  if (r >= 255.0) return 255;
  return static_cast<std::uint8_t>(static_cast<long>(r));
}

inline bool all_zero(const Mask& m)
{
  for (auto b : m.data())
    if (b) return false;
  return true;
}

inline bool all_zero(const OcclusionMask& m)
{
  for (const auto& f : m)
    if (!all_zero(f)) return false;
  return true;
}

} // namespace stereoforge

#endif // STEREOFORGE_IMAGE_HPP
