#ifndef STEREOFORGE_DEGRADE_HPP
#define STEREOFORGE_DEGRADE_HPP

// Temporally consistent degradation: X' = Up(Down(X)).
//
// One seeded recipe is drawn per clip and applied unchanged to every frame.
// Down runs the recipe stages in order (blur at source resolution, then the
// area downsample, then noise and JPEG at target resolution); Up is the
// same area resampling back to the source size.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "image.hpp"
#include "jpeg_codec.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace stereoforge {

// ---------------------------------------------------------------------------
// Primitive operators

/// Area resampling: each output pixel averages the input pixels under its
/// footprint, weighted by exact overlap area. Works in integer arithmetic
/// (coordinates scaled by the output size) and rounds half up once at the end.
inline Image area_resize(const Image& src, int out_w, int out_h)
{
  if (out_w < 1 || out_h < 1) throw Error(Errc::InvalidConfig, "area_resize target must be >= 1x1");
  const int in_w = src.width(), in_h = src.height();
  if (in_w == out_w && in_h == out_h) return src;

  struct Tap {
    int index;
    std::int64_t weight;
  };
  // Output cell i spans [i*in, (i+1)*in) and input cell k spans
  // [k*out, (k+1)*out) in units of 1/out input pixels.
  auto taps_for = [](int in, int out) {
    std::vector<std::vector<Tap>> taps(static_cast<std::size_t>(out));
    for (int i = 0; i < out; ++i) {
      std::int64_t lo = static_cast<std::int64_t>(i) * in, hi = lo + in;
      for (int k = static_cast<int>(lo / out); k < in && static_cast<std::int64_t>(k) * out < hi; ++k) {
        std::int64_t a = std::max<std::int64_t>(lo, static_cast<std::int64_t>(k) * out);
        std::int64_t b = std::min<std::int64_t>(hi, static_cast<std::int64_t>(k + 1) * out);
        if (b > a) taps[i].push_back({k, b - a});
      }
    }
    return taps;
  };
  const auto xt = taps_for(in_w, out_w);
  const auto yt = taps_for(in_h, out_h);

  // Horizontal pass keeps the unnormalized numerator (sum of weights = in_w).
  std::vector<std::int64_t> horiz(static_cast<std::size_t>(out_w) * in_h * 3);
  for (int y = 0; y < in_h; ++y)
    for (int i = 0; i < out_w; ++i)
      for (int c = 0; c < 3; ++c) {
        std::int64_t s = 0;
        for (const auto& t : xt[i]) s += t.weight * src(t.index, y, c);
        horiz[(static_cast<std::size_t>(y) * out_w + i) * 3 + c] = s;
      }
  const std::int64_t den = static_cast<std::int64_t>(in_w) * in_h;
  Image out(out_w, out_h);
  for (int j = 0; j < out_h; ++j)
    for (int i = 0; i < out_w; ++i)
      for (int c = 0; c < 3; ++c) {
        std::int64_t s = 0;
        for (const auto& t : yt[j]) s += t.weight * horiz[(static_cast<std::size_t>(t.index) * out_w + i) * 3 + c];
        out(i, j, c) = static_cast<std::uint8_t>((2 * s + den) / (2 * den));
      }
  return out;
}

/// Normalized Gaussian taps for radius ceil(3 sigma), centre at index radius.
inline std::vector<double> gaussian_kernel(double sigma)
{
  if (!(sigma > 0.0)) throw Error(Errc::InvalidConfig, "blur sigma must be > 0");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  for (auto& v : k) v /= sum;
  return k;
}

/// Reflect-101 index (gfedcb|abcdefgh|gfedcba) for any offset.
inline int reflect101(int i, int n) noexcept
{
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

/// Separable Gaussian blur per channel with reflect-101 borders.
inline Image gaussian_blur(const Image& src, double sigma)
{
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size()) / 2;
  const int w = src.width(), h = src.height();
  Plane<double, 3> tmp(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double s = 0.0;
        for (int i = -r; i <= r; ++i) s += k[i + r] * src(reflect101(x + i, w), y, c);
        tmp(x, y, c) = s;
      }
  Image out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double s = 0.0;
        for (int i = -r; i <= r; ++i) s += k[i + r] * tmp(x, reflect101(y + i, h), c);
        out(x, y, c) = round_u8(s);
      }
  return out;
}

/// Adds i.i.d. N(0, sigma^2) to every sample, rounding half up and clamping.
inline Image add_noise(const Image& src, double sigma, Rng& stream)
{
  if (sigma < 0.0) throw Error(Errc::InvalidConfig, "noise sigma must be >= 0");
  if (sigma == 0.0) return src;
  Image out(src.width(), src.height());
  auto in = src.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < in.size(); ++i) dst[i] = round_u8(in[i] + sigma * stream.normal());
  return out;
}

/// Encodes to baseline JPEG at `quality` and decodes again.
inline Image jpeg_roundtrip(const Image& src, int quality)
{
  if (quality < 1 || quality > 100) throw Error(Errc::InvalidConfig, "JPEG quality must be in [1,100]");
  return jpeg::decode(jpeg::encode(src, quality));
}

// ---------------------------------------------------------------------------
// Recipes

enum class Stage { blur, resize_down, noise, jpeg };

inline std::string_view stage_name(Stage s)
{
  switch (s) {
  case Stage::blur: return "blur";
  case Stage::resize_down: return "down";
  case Stage::noise: return "noise";
  case Stage::jpeg: return "jpeg";
  }
  return "?";
}

inline Stage parse_stage(std::string_view name)
{
  if (name == "blur") return Stage::blur;
  if (name == "down" || name == "resize_down") return Stage::resize_down;
  if (name == "noise") return Stage::noise;
  if (name == "jpeg") return Stage::jpeg;
  throw Error(Errc::InvalidConfig, "unknown degradation stage '" + std::string(name) + "'");
}

inline const std::vector<Stage>& default_stages()
{
  static const std::vector<Stage> all{Stage::blur, Stage::resize_down, Stage::noise, Stage::jpeg};
  return all;
}

struct DegradationRecipe {
  std::uint64_t seed = 0;
  double blur_sigma = 1.0;
  int target_w = 0;
  int target_h = 0;
  double noise_sigma = 1.0;
  int jpeg_quality = 95;
  std::vector<Stage> stages = default_stages();
  std::string up_method = "area_interp";

  friend bool operator==(const DegradationRecipe&, const DegradationRecipe&) = default;
};

struct RecipeRanges {
  double blur_min = 0.2, blur_max = 3.0;
  double noise_min = 1.0, noise_max = 30.0;
  int quality_min = 30, quality_max = 95;
  int target_w = 256, target_h = 128;
  std::vector<Stage> stages = default_stages();
};

inline constexpr double kBlurLimits[2] = {0.2, 3.0};
inline constexpr double kNoiseLimits[2] = {1.0, 30.0};
inline constexpr int kQualityLimits[2] = {30, 95};

inline DegradationRecipe sample_recipe(std::uint64_t seed, const RecipeRanges& r)
{
  auto bad = [](const std::string& what) { throw Error(Errc::InvalidRange, what); };
  if (!(r.blur_min >= kBlurLimits[0] && r.blur_min <= r.blur_max && r.blur_max <= kBlurLimits[1]))
    bad("blur sigma range must lie in [0.2, 3]");
  if (!(r.noise_min >= kNoiseLimits[0] && r.noise_min <= r.noise_max && r.noise_max <= kNoiseLimits[1]))
    bad("noise sigma range must lie in [1, 30]");
  if (!(r.quality_min >= kQualityLimits[0] && r.quality_min <= r.quality_max &&
        r.quality_max <= kQualityLimits[1]))
    bad("JPEG quality range must lie in [30, 95]");
  if (r.target_w < 1 || r.target_h < 1) bad("target size must be positive");

  Rng rng(hash_combine(seed, 0x7265636970ULL));
  DegradationRecipe out;
  out.seed = seed;
  out.blur_sigma = rng.uniform(r.blur_min, r.blur_max);
  out.noise_sigma = rng.uniform(r.noise_min, r.noise_max);
  out.jpeg_quality = static_cast<int>(rng.uniform_int(r.quality_min, r.quality_max));
  out.target_w = r.target_w;
  out.target_h = r.target_h;
  out.stages = r.stages;
  return out;
}

/// Seed of the second recipe in a two-pass chain.
inline std::uint64_t second_order_seed(std::uint64_t seed) { return hash_combine(seed, 2); }

inline void validate_recipe(const DegradationRecipe& r, int width, int height)
{
  auto bad = [](const std::string& what) { throw Error(Errc::InvalidRecipe, what); };
  if (r.target_w < 1 || r.target_h < 1 || r.target_w > width || r.target_h > height)
    bad("target " + std::to_string(r.target_w) + "x" + std::to_string(r.target_h) +
        " must fit inside " + std::to_string(width) + "x" + std::to_string(height));
  for (Stage s : r.stages) {
    if (s == Stage::blur && !(r.blur_sigma > 0.0)) bad("blur sigma must be > 0");
    if (s == Stage::noise && !(r.noise_sigma >= 0.0)) bad("noise sigma must be >= 0");
    if (s == Stage::jpeg && (r.jpeg_quality < 1 || r.jpeg_quality > 100)) bad("JPEG quality out of range");
  }
  if (r.up_method != "area_interp") bad("unknown up_method '" + r.up_method + "'");
}

/// Per-frame noise stream: depends on the recipe seed and frame index only.
inline Rng noise_stream(std::uint64_t seed, int frame_index)
{
  return Rng(hash_combine(seed, static_cast<std::uint64_t>(frame_index)));
}

inline Image degrade_frame(const Image& frame, const DegradationRecipe& r, int frame_index)
{
  Image cur = frame;
  for (Stage s : r.stages) {
    switch (s) {
    case Stage::blur: cur = gaussian_blur(cur, r.blur_sigma); break;
    case Stage::resize_down: cur = area_resize(cur, r.target_w, r.target_h); break;
    case Stage::noise: {
      Rng stream = noise_stream(r.seed, frame_index);
      cur = add_noise(cur, r.noise_sigma, stream);
      break;
    }
    case Stage::jpeg: cur = jpeg_roundtrip(cur, r.jpeg_quality); break;
    }
  }
  return area_resize(cur, frame.width(), frame.height());
}

inline Video degrade_video(const Video& video, const DegradationRecipe& recipe)
{
  validate_recipe(recipe, video.width(), video.height());
  std::vector<Image> frames(static_cast<std::size_t>(video.frames()));
  parallel_for(video.frames(), [&](int f) { frames[f] = degrade_frame(video[f], recipe, f); });
  return Video(std::move(frames));
}

/// Two passes of the stage chain, each with its own recipe.
inline Video degrade_video(const Video& video, const DegradationRecipe& first,
                           const DegradationRecipe& second)
{
  return degrade_video(degrade_video(video, first), second);
}

inline nlohmann::ordered_json to_json(const DegradationRecipe& r)
{
  nlohmann::ordered_json j;
  j["seed"] = r.seed;
  j["blur_sigma"] = r.blur_sigma;
  j["target_w"] = r.target_w;
  j["target_h"] = r.target_h;
  j["noise_sigma"] = r.noise_sigma;
  j["jpeg_quality"] = r.jpeg_quality;
  j["stages"] = nlohmann::ordered_json::array();
  for (Stage s : r.stages) j["stages"].push_back(std::string(stage_name(s)));
  j["up_method"] = r.up_method;
  return j;
}

inline DegradationRecipe recipe_from_json(const nlohmann::json& j)
{
  try {
    DegradationRecipe r;
    r.seed = j.at("seed").get<std::uint64_t>();
    r.blur_sigma = j.at("blur_sigma").get<double>();
    r.target_w = j.at("target_w").get<int>();
    r.target_h = j.at("target_h").get<int>();
    r.noise_sigma = j.at("noise_sigma").get<double>();
    r.jpeg_quality = j.at("jpeg_quality").get<int>();
    r.stages.clear();
    for (const auto& s : j.at("stages")) r.stages.push_back(parse_stage(s.get<std::string>()));
    r.up_method = j.value("up_method", std::string("area_interp"));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidRecipe, std::string("malformed recipe: ") + e.what());
  }
}

} // namespace stereoforge

#endif // STEREOFORGE_DEGRADE_HPP
