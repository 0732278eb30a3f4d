#ifndef STEREOFORGE_SYNTHGEN_HPP
#define STEREOFORGE_SYNTHGEN_HPP

// Deterministic software renderer for synthetic rectified stereo clips.
//
// The rig is a pair of parallel pinhole cameras: left at the origin, right
// displaced by +baseline along x, both looking down +z. A world point
// (x, y, z) projects to u = f*x/z + W/2, v = f*y/z + H/2, so the right-view
// disparity of anything at depth z is exactly f*baseline/z. Objects are
// fronto-parallel textured quads; the background is an infinite textured
// plane. Each pixel is a single nearest sample at its integer coordinate.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "image.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace stereoforge {

struct CameraRig {
  double focal_px = 0.0;
  double baseline_m = 0.0;
  int width = 0;
  int height = 0;
};

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

struct SceneObject {
  Vec3 center;            // m, at frame 0
  double half_extent = 0; // m, square quad
  Vec3 velocity;          // m/frame
  std::uint64_t texture_seed = 0;
  double texture_cell_m = 0.05;

  Vec3 center_at(int frame) const
  {
    return {center.x + velocity.x * frame, center.y + velocity.y * frame,
            center.z + velocity.z * frame};
  }
  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

struct SceneSpec {
  std::uint64_t seed = 0;
  double baseline_m = 0.065;
  std::vector<SceneObject> objects;
  double background_depth_m = 8.0;
  std::uint64_t background_seed = 0;
  double background_cell_m = 0.25;
  int frame_count = 1;

  friend bool operator==(const SceneSpec&, const SceneSpec&) = default;
};

struct SceneConfig {
  int num_objects = 4;
  double depth_min = 1.5;         // m
  double depth_max = 4.0;         // m
  double speed_min = 0.0;         // m/frame toward the camera
  double speed_max = 0.05;
  double background_depth = 0.0;  // 0 = 2 * depth_max
  int frame_count = 21;
  int width = 1024;               // used to keep objects inside the view
  int height = 512;
  double focal_px = 0.0;          // 0 = width / 2
};

inline constexpr double kMinObjectDepth = 0.1;
inline constexpr double kBaselineMean = 0.065;
inline constexpr double kBaselineSigma = 0.001;

inline double default_focal(int width) { return width / 2.0; }

/// Draws a baseline from N(65 mm, 1 mm), clamped to [60, 70] mm.
inline double sample_baseline(Rng& rng)
{
  return std::clamp(rng.normal(kBaselineMean, kBaselineSigma), 0.060, 0.070);
}

/// Checks the visibility invariant for every rendered frame.
inline void validate_scene(const SceneSpec& scene)
{
  if (scene.frame_count < 1) throw Error(Errc::InvalidConfig, "frame_count must be >= 1");
  if (!(scene.baseline_m > 0.0)) throw Error(Errc::InvalidConfig, "baseline must be > 0");
  if (!(scene.background_depth_m > kMinObjectDepth))
    throw Error(Errc::InvalidConfig, "background must lie beyond 0.1 m");
  for (const auto& o : scene.objects) {
    if (!(o.half_extent > 0.0) || !(o.texture_cell_m > 0.0))
      throw Error(Errc::InvalidConfig, "object extent and texture cell must be positive");
    for (int f : {0, scene.frame_count - 1})
      if (!(o.center_at(f).z > kMinObjectDepth))
        throw Error(Errc::InvalidConfig, "object leaves the visible depth range",
                    "frame " + std::to_string(f));
  }
}

inline SceneSpec sample_scene(std::uint64_t seed, const SceneConfig& config)
{
  if (config.num_objects < 1) throw Error(Errc::InvalidConfig, "num_objects must be >= 1");
  if (!(config.depth_min > kMinObjectDepth) || !(config.depth_max >= config.depth_min) ||
      !std::isfinite(config.depth_max))
    throw Error(Errc::InvalidConfig, "depth_range must lie inside (0.1, inf)",
                std::to_string(config.depth_min) + ".." + std::to_string(config.depth_max));
  if (config.speed_min < 0.0 || config.speed_max < config.speed_min)
    throw Error(Errc::InvalidConfig, "speed_range must be a non-negative interval");
  if (config.frame_count < 1) throw Error(Errc::InvalidConfig, "frame_count must be >= 1");
  if (config.width < 8 || config.height < 8) throw Error(Errc::InvalidConfig, "view too small");
  double bg = config.background_depth > 0.0 ? config.background_depth : 2.0 * config.depth_max;
  if (bg <= config.depth_max) throw Error(Errc::InvalidConfig, "background must be behind objects");

  double focal = config.focal_px > 0.0 ? config.focal_px : default_focal(config.width);
  Rng rng(seed);
  SceneSpec scene;
  scene.seed = seed;
  scene.baseline_m = sample_baseline(rng);
  scene.background_depth_m = bg;
  scene.background_seed = rng.next();
  // Background features span ~16 px at the default focal length.
  scene.background_cell_m = bg * 16.0 / focal;
  scene.frame_count = config.frame_count;

  double last = config.frame_count - 1;
  for (int i = 0; i < config.num_objects; ++i) {
    SceneObject o;
    double z0 = rng.uniform(config.depth_min, config.depth_max);
    double speed = rng.uniform(config.speed_min, config.speed_max);
    // Forward motion must not carry the quad closer than depth_min.
    if (last > 0.0 && z0 - speed * last < config.depth_min) speed = (z0 - config.depth_min) / last;
    double half_w = 0.5 * config.width * z0 / focal;   // half view width at z0, m
    double half_h = 0.5 * config.height * z0 / focal;
    o.half_extent = rng.uniform(0.08, 0.2) * 2.0 * std::min(half_w, half_h);
    o.center = {rng.uniform(-0.6, 0.6) * half_w, rng.uniform(-0.6, 0.6) * half_h, z0};
    double lateral = 0.002 * z0;
    o.velocity = {rng.uniform(-lateral, lateral), rng.uniform(-lateral, lateral), -speed};
    o.texture_seed = rng.next();
    o.texture_cell_m = z0 * 10.0 / focal;  // ~10 px features when first seen
    scene.objects.push_back(o);
  }
  validate_scene(scene);
  return scene;
}

inline CameraRig make_rig(const SceneSpec& scene, int width, int height, double focal_px = 0.0)
{
  return {focal_px > 0.0 ? focal_px : default_focal(width), scene.baseline_m, width, height};
}

// ---------------------------------------------------------------------------
// Procedural texture

namespace texture {

inline double lattice(std::uint64_t seed, std::int64_t ix, std::int64_t iy) noexcept
{
  std::uint64_t h = hash_combine(hash_combine(seed, static_cast<std::uint64_t>(ix)),
                                 static_cast<std::uint64_t>(iy));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

inline double quintic(double t) noexcept { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

/// Value noise in [0, 1] with unit lattice spacing and C2 interpolation.
inline double value_noise(std::uint64_t seed, double x, double y) noexcept
{
  double fx = std::floor(x), fy = std::floor(y);
  auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy);
  double tx = quintic(x - fx), ty = quintic(y - fy);
  double a = lattice(seed, ix, iy), b = lattice(seed, ix + 1, iy);
  double c = lattice(seed, ix, iy + 1), d = lattice(seed, ix + 1, iy + 1);
  double top = a + (b - a) * tx, bottom = c + (d - c) * tx;
  return top + (bottom - top) * ty;
}

/// Two-octave band-limited color texture; (u, v) are in lattice cells.
inline std::array<std::uint8_t, 3> sample(std::uint64_t seed, double u, double v) noexcept
{
  double base = value_noise(seed, u, v) + 0.4 * value_noise(seed ^ 0x5bd1e995ULL, 2.0 * u, 2.0 * v);
  base /= 1.4;
  std::array<std::uint8_t, 3> rgb{};
  for (int c = 0; c < 3; ++c) {
    double tint = lattice(seed, -1, -1 - c);  // per-texture base color
    double chroma = value_noise(seed + 101 + c, 0.5 * u, 0.5 * v);
    double value = 30.0 + 60.0 * tint + 140.0 * base + 25.0 * chroma;
    rgb[c] = round_u8(value);
  }
  return rgb;
}

} // namespace texture

// ---------------------------------------------------------------------------
// Rendering

struct StereoRender {
  Video left;
  Video right;
  DepthSequence left_depth;
  DepthSequence right_depth;
};

namespace detail {

/// Renders one view. camera_x is the camera position along x.
inline void render_view(const SceneSpec& scene, const CameraRig& rig, int frame,
                        double camera_x, Image& image, DepthMap& depth)
{
  const double cx = rig.width / 2.0, cy = rig.height / 2.0;
  const double inv_f = 1.0 / rig.focal_px;

  struct Placed {
    Vec3 c;
    double half;
    std::uint64_t seed;
    double inv_cell;
  };
  std::vector<Placed> placed;
  placed.reserve(scene.objects.size());
  for (const auto& o : scene.objects)
    placed.push_back({o.center_at(frame), o.half_extent, o.texture_seed, 1.0 / o.texture_cell_m});
  // Near-to-far so the first hit wins the z-buffer; stable for equal depth.
  std::stable_sort(placed.begin(), placed.end(),
                   [](const Placed& a, const Placed& b) { return a.c.z < b.c.z; });

  const double bg_z = scene.background_depth_m;
  const double bg_inv_cell = 1.0 / scene.background_cell_m;
  for (int py = 0; py < rig.height; ++py) {
    double ray_y = (py - cy) * inv_f;
    for (int px = 0; px < rig.width; ++px) {
      double ray_x = (px - cx) * inv_f;
      const Placed* hit = nullptr;
      double wx = 0.0, wy = 0.0;
      for (const auto& p : placed) {
        wx = ray_x * p.c.z + camera_x;
        wy = ray_y * p.c.z;
        if (std::abs(wx - p.c.x) <= p.half && std::abs(wy - p.c.y) <= p.half) {
          hit = &p;
          break;
        }
      }
      std::array<std::uint8_t, 3> rgb;
      if (hit) {
        rgb = texture::sample(hit->seed, (wx - hit->c.x) * hit->inv_cell,
                              (wy - hit->c.y) * hit->inv_cell);
        depth(px, py) = static_cast<float>(hit->c.z);
      } else {
        rgb = texture::sample(scene.background_seed, (ray_x * bg_z + camera_x) * bg_inv_cell,
                              ray_y * bg_z * bg_inv_cell);
        depth(px, py) = static_cast<float>(bg_z);
      }
      image(px, py, 0) = rgb[0];
      image(px, py, 1) = rgb[1];
      image(px, py, 2) = rgb[2];
    }
  }
}

} // namespace detail

inline StereoRender render_stereo(const SceneSpec& scene, const CameraRig& rig)
{
  validate_scene(scene);
  if (!(rig.focal_px > 0.0) || !(rig.baseline_m > 0.0) || rig.width < 1 || rig.height < 1)
    throw Error(Errc::InvalidConfig, "invalid camera rig");

  const int n = scene.frame_count;
  StereoRender out{Video(n, rig.width, rig.height), Video(n, rig.width, rig.height),
                   DepthSequence(n, rig.width, rig.height), DepthSequence(n, rig.width, rig.height)};
  parallel_for(2 * n, [&](int job) {
    int frame = job / 2;
    if (job % 2 == 0)
      detail::render_view(scene, rig, frame, 0.0, out.left[frame], out.left_depth[frame]);
    else
      detail::render_view(scene, rig, frame, rig.baseline_m, out.right[frame], out.right_depth[frame]);
  });
  return out;
}

/// Keeps frames [first, end) of every sequence in the render.
inline StereoRender drop_leading_frames(StereoRender render, int count)
{
  auto trim = [count](auto& seq) {
    using S = std::decay_t<decltype(seq)>;
    std::vector<typename S::frame_type> kept;
    for (int i = count; i < seq.frames(); ++i) kept.push_back(std::move(seq[i]));
    seq = S(std::move(kept));
  };
  if (count < 0 || count >= render.left.frames())
    throw Error(Errc::InvalidConfig, "cannot drop " + std::to_string(count) + " of " +
                                         std::to_string(render.left.frames()) + " frames");
  trim(render.left);
  trim(render.right);
  trim(render.left_depth);
  trim(render.right_depth);
  return render;
}

inline nlohmann::ordered_json to_json(const SceneSpec& s)
{
  nlohmann::ordered_json j;
  j["seed"] = s.seed;
  j["baseline_m"] = s.baseline_m;
  j["background_depth_m"] = s.background_depth_m;
  j["background_seed"] = s.background_seed;
  j["background_cell_m"] = s.background_cell_m;
  j["frame_count"] = s.frame_count;
  j["objects"] = nlohmann::ordered_json::array();
  for (const auto& o : s.objects) {
    j["objects"].push_back({{"center", {o.center.x, o.center.y, o.center.z}},
                            {"half_extent", o.half_extent},
                            {"velocity", {o.velocity.x, o.velocity.y, o.velocity.z}},
                            {"texture_seed", o.texture_seed},
                            {"texture_cell_m", o.texture_cell_m}});
  }
  return j;
}

} // namespace stereoforge

#endif // STEREOFORGE_SYNTHGEN_HPP
