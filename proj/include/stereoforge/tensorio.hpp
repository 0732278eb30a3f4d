#ifndef STEREOFORGE_TENSORIO_HPP
#define STEREOFORGE_TENSORIO_HPP

// On-disk formats: a directory holds manifest.json plus one file per frame.
// Videos are 8-bit RGB PNG, masks 8-bit gray PNG (0/255), depth either
// little-endian PFM or 16-bit gray PNG with an explicit scale.

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "error.hpp"
#include "image.hpp"
#include "parallel.hpp"
#include "png_codec.hpp"

namespace stereoforge {

namespace fs = std::filesystem;

inline constexpr const char* kFormatVersion = "stereoforge/1";
inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kDefaultFramePattern = "frame_%05d.png";

enum class DepthEncoding { pfm, png16 };

struct Manifest {
  std::string version = kFormatVersion;
  std::string frame_pattern = kDefaultFramePattern;
  int frame_count = 0;
  int width = 0;
  int height = 0;
  std::optional<DepthEncoding> depth_encoding;  // set for depth directories only
  double depth_scale = 0.0;                     // scene units per png16 code
  std::map<std::string, std::string> extras;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

inline nlohmann::ordered_json to_json(const Manifest& m)
{
  nlohmann::ordered_json j;
  j["version"] = m.version;
  j["frame_pattern"] = m.frame_pattern;
  j["frame_count"] = m.frame_count;
  j["width"] = m.width;
  j["height"] = m.height;
  if (m.depth_encoding) {
    j["depth_encoding"] = *m.depth_encoding == DepthEncoding::pfm ? "pfm" : "png16";
    j["depth_scale"] = m.depth_scale;
  }
  j["extras"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : m.extras) j["extras"][k] = v;
  return j;
}

/// Validates a printf-style pattern with exactly one integer conversion
/// (`%d` or `%0Nd`) and no other conversions.
inline void check_frame_pattern(const std::string& pattern)
{
  int conversions = 0;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    if (pattern[i] != '%') continue;
    if (i + 1 < pattern.size() && pattern[i + 1] == '%') {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < pattern.size() && std::isdigit(static_cast<unsigned char>(pattern[j]))) ++j;
    if (j >= pattern.size() || pattern[j] != 'd' || j - i > 4)
      throw Error(Errc::DecodeError, "unsupported frame_pattern", pattern);
    ++conversions;
    i = j;
  }
  if (conversions != 1)
    throw Error(Errc::DecodeError, "frame_pattern needs exactly one %d conversion", pattern);
  if (pattern.find('/') != std::string::npos)
    throw Error(Errc::DecodeError, "frame_pattern must not contain '/'", pattern);
}

inline std::string frame_file_name(const std::string& pattern, int index)
{
  char buf[512];
  int n = std::snprintf(buf, sizeof buf, pattern.c_str(), index);
  if (n < 0 || n >= static_cast<int>(sizeof buf))
    throw Error(Errc::DecodeError, "frame_pattern expands too long", pattern);
  return buf;
}

inline Manifest manifest_from_json(const nlohmann::json& j, const std::string& where)
{
  try {
    Manifest m;
    m.version = j.at("version").get<std::string>();
    m.frame_pattern = j.value("frame_pattern", std::string(kDefaultFramePattern));
    m.frame_count = j.at("frame_count").get<int>();
    m.width = j.at("width").get<int>();
    m.height = j.at("height").get<int>();
    if (j.contains("depth_encoding")) {
      auto enc = j.at("depth_encoding").get<std::string>();
      if (enc == "pfm")
        m.depth_encoding = DepthEncoding::pfm;
      else if (enc == "png16" || enc == "png16+scale")
        m.depth_encoding = DepthEncoding::png16;
      else
        throw Error(Errc::DecodeError, "unknown depth_encoding '" + enc + "'", where);
      m.depth_scale = j.value("depth_scale", 0.0);
      if (m.depth_encoding == DepthEncoding::png16 && !(m.depth_scale > 0.0))
        throw Error(Errc::DecodeError, "png16 depth needs depth_scale > 0", where);
    }
    if (j.contains("extras"))
      for (const auto& [k, v] : j.at("extras").items())
        m.extras[k] = v.is_string() ? v.get<std::string>() : v.dump();
    check_frame_pattern(m.frame_pattern);
    if (m.frame_count < 0 || m.width < 0 || m.height < 0)
      throw Error(Errc::DecodeError, "negative manifest field", where);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::DecodeError, std::string("malformed manifest: ") + e.what(), where);
  }
}

inline Manifest read_manifest(const fs::path& dir)
{
  fs::path path = dir / kManifestName;
  std::ifstream in(path);
  if (!in) throw Error(Errc::MissingManifest, "no manifest.json", dir.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::DecodeError, std::string("manifest is not JSON: ") + e.what(), path.string());
  }
  return manifest_from_json(j, path.string());
}

inline void write_text_file(const fs::path& path, const std::string& text)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write file", path.string());
  out << text;
  out.flush();
  if (!out) throw Error(Errc::IoError, "short write", path.string());
}

inline void write_manifest(const fs::path& dir, const Manifest& m)
{
  write_text_file(dir / kManifestName, to_json(m).dump(2) + "\n");
}

inline void ensure_directory(const fs::path& dir)
{
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw Error(Errc::IoError, "cannot create directory: " + ec.message(), dir.string());
}

namespace detail {

/// Checks that exactly frame_count files exist for the pattern.
inline void check_frame_files(const fs::path& dir, const Manifest& m)
{
  int present = 0;
  for (int i = 0; i < m.frame_count; ++i)
    if (fs::exists(dir / frame_file_name(m.frame_pattern, i))) ++present;
  bool extra = fs::exists(dir / frame_file_name(m.frame_pattern, m.frame_count));
  if (present != m.frame_count || extra)
    throw Error(Errc::FrameCountMismatch,
                "manifest declares " + std::to_string(m.frame_count) + " frames, found " +
                    std::to_string(present) + (extra ? " plus extras" : ""),
                dir.string());
}

/// Removes leftover frame files past `count` from an earlier, longer save.
inline void remove_stale_frames(const fs::path& dir, const std::string& pattern, int count)
{
  for (int i = count;; ++i) {
    std::error_code ec;
    if (!fs::remove(dir / frame_file_name(pattern, i), ec)) break;
  }
}

inline void check_dims(const Manifest& m, int width, int height, const fs::path& file)
{
  if (width != m.width || height != m.height)
    throw Error(Errc::DimensionMismatch,
                "frame is " + std::to_string(width) + "x" + std::to_string(height) +
                    ", manifest says " + std::to_string(m.width) + "x" + std::to_string(m.height),
                file.string());
}

template <typename P, typename ReadFn>
Sequence<P> load_frames_as(const fs::path& dir, const Manifest& m, ReadFn read)
{
  std::vector<P> frames(static_cast<std::size_t>(m.frame_count));
  parallel_for(m.frame_count, [&](int i) {
    fs::path file = dir / frame_file_name(m.frame_pattern, i);
    frames[i] = read(file);
    check_dims(m, frames[i].width(), frames[i].height(), file);
  });
  return Sequence<P>(std::move(frames));
}

} // namespace detail

// ---------------------------------------------------------------------------
// Single-frame codecs

inline Image read_image_png(const fs::path& path)
{
  auto r = png::read(path);
  if (r.bit_depth != 8) throw Error(Errc::DecodeError, "expected 8-bit PNG", path.string());
  Image img(r.width, r.height);
  auto out = img.data();
  if (r.channels == 3) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<std::uint8_t>(r.samples[i]);
  } else {
    for (std::size_t p = 0; p < img.pixel_count(); ++p)
      out[3 * p] = out[3 * p + 1] = out[3 * p + 2] = static_cast<std::uint8_t>(r.samples[p]);
  }
  return img;
}

inline void write_image_png(const fs::path& path, const Image& img)
{
  png::write(path, img.width(), img.height(), 3, 8, img.data().data());
}

/// Masks are 8-bit gray: 255 -> 1, 0 -> 0, anything else is a decode error.
inline Mask read_mask_png(const fs::path& path)
{
  auto r = png::read(path);
  if (r.bit_depth != 8 || r.channels != 1)
    throw Error(Errc::DecodeError, "mask must be 8-bit grayscale", path.string());
  Mask m(r.width, r.height);
  auto out = m.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (r.samples[i] == 255)
      out[i] = 1;
    else if (r.samples[i] != 0)
      throw Error(Errc::DecodeError, "mask value " + std::to_string(r.samples[i]) + " not in {0,255}",
                  path.string());
  }
  return m;
}

inline void write_mask_png(const fs::path& path, const Mask& m)
{
  std::vector<std::uint8_t> codes(m.data().size());
  for (std::size_t i = 0; i < codes.size(); ++i) codes[i] = m.data()[i] ? 255 : 0;
  png::write(path, m.width(), m.height(), 1, 8, codes.data());
}

/// Reads a single-channel PFM ("Pf"). A negative scale marks little-endian
/// data; samples are multiplied by |scale|. Rows are stored bottom-to-top.
inline DepthMap read_pfm(const fs::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::DecodeError, "cannot open PFM", path.string());
  std::string magic;
  int width = 0, height = 0;
  double scale = 0.0;
  in >> magic >> width >> height >> scale;
  if (!in || magic != "Pf" || width <= 0 || height <= 0 || scale == 0.0 || !std::isfinite(scale))
    throw Error(Errc::DecodeError, "bad PFM header", path.string());
  in.get();  // single whitespace byte before the raster
  bool little = scale < 0.0;
  double factor = std::abs(scale);

  DepthMap d(width, height);
  std::vector<unsigned char> row(static_cast<std::size_t>(width) * 4);
  for (int r = 0; r < height; ++r) {
    if (!in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size())))
      throw Error(Errc::DecodeError, "truncated PFM raster", path.string());
    int y = height - 1 - r;
    for (int x = 0; x < width; ++x) {
      const unsigned char* b = &row[static_cast<std::size_t>(x) * 4];
      std::uint32_t bits = little ? (b[0] | b[1] << 8 | b[2] << 16 | std::uint32_t(b[3]) << 24)
                                  : (b[3] | b[2] << 8 | b[1] << 16 | std::uint32_t(b[0]) << 24);
      float v = std::bit_cast<float>(bits);
      d(x, y) = factor == 1.0 ? v : static_cast<float>(v * factor);
    }
  }
  return d;
}

inline void write_pfm(const fs::path& path, const DepthMap& d)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot create PFM", path.string());
  out << "Pf\n" << d.width() << " " << d.height() << "\n-1.0\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(d.width()) * 4);
  for (int y = d.height() - 1; y >= 0; --y) {
    for (int x = 0; x < d.width(); ++x) {
      auto bits = std::bit_cast<std::uint32_t>(d(x, y));
      unsigned char* b = &row[static_cast<std::size_t>(x) * 4];
      b[0] = bits & 0xff;
      b[1] = (bits >> 8) & 0xff;
      b[2] = (bits >> 16) & 0xff;
      b[3] = (bits >> 24) & 0xff;
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  out.flush();
  if (!out) throw Error(Errc::IoError, "short write", path.string());
}

/// Decodes png16 depth as code * scale; code 0 is reserved for "no depth".
inline DepthMap read_depth_png16(const fs::path& path, double scale)
{
  auto r = png::read(path);
  if (r.bit_depth != 16 || r.channels != 1)
    throw Error(Errc::DecodeError, "depth PNG must be 16-bit grayscale", path.string());
  DepthMap d(r.width, r.height);
  auto out = d.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(r.samples[i] * scale);
  return d;
}

inline void write_depth_png16(const fs::path& path, const DepthMap& d, double scale)
{
  std::vector<std::uint16_t> codes(d.data().size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    double c = std::floor(d.data()[i] / scale + 0.5);
    codes[i] = static_cast<std::uint16_t>(c < 1.0 ? 1.0 : (c > 65535.0 ? 65535.0 : c));
  }
  png::write(path, d.width(), d.height(), 1, 16, codes.data());
}

inline void require_positive_depth(const DepthMap& d, const std::string& where)
{
  for (int y = 0; y < d.height(); ++y)
    for (int x = 0; x < d.width(); ++x) {
      float v = d(x, y);
      if (!(v > 0.0f) || !std::isfinite(v))
        throw Error(Errc::NonPositiveDepth,
                    "depth " + std::to_string(v) + " at (" + std::to_string(x) + "," +
                        std::to_string(y) + ")",
                    where);
    }
}

// ---------------------------------------------------------------------------
// Sequences

inline Video load_video(const fs::path& dir)
{
  Manifest m = read_manifest(dir);
  detail::check_frame_files(dir, m);
  if (m.frame_count < 1) throw Error(Errc::FrameCountMismatch, "video has no frames", dir.string());
  return detail::load_frames_as<Image>(dir, m, read_image_png);
}

/// Loads `count` frames named by `pattern` without a manifest (backend output).
/// Throws OutputMismatch when files are missing or sizes disagree.
inline Video load_frames(const fs::path& dir, int count, int width, int height,
                         const std::string& pattern = kDefaultFramePattern)
{
  std::vector<Image> frames(static_cast<std::size_t>(count));
  parallel_for(count, [&](int i) {
    fs::path file = dir / frame_file_name(pattern, i);
    if (!fs::exists(file)) throw Error(Errc::OutputMismatch, "missing frame", file.string());
    frames[i] = read_image_png(file);
    if (!frames[i].same_size(width, height))
      throw Error(Errc::OutputMismatch,
                  "frame is " + std::to_string(frames[i].width()) + "x" +
                      std::to_string(frames[i].height()) + ", expected " + std::to_string(width) +
                      "x" + std::to_string(height),
                  file.string());
  });
  if (fs::exists(dir / frame_file_name(pattern, count)))
    throw Error(Errc::OutputMismatch, "more frames than declared", dir.string());
  return Video(std::move(frames));
}

inline void save_video(const Video& video, const fs::path& dir,
                       std::map<std::string, std::string> extras = {})
{
  ensure_directory(dir);
  Manifest m;
  m.frame_count = video.frames();
  m.width = video.width();
  m.height = video.height();
  m.extras = std::move(extras);
  parallel_for(video.frames(), [&](int i) {
    write_image_png(dir / frame_file_name(m.frame_pattern, i), video[i]);
  });
  detail::remove_stale_frames(dir, m.frame_pattern, m.frame_count);
  write_manifest(dir, m);
}

inline OcclusionMask load_mask(const fs::path& dir)
{
  Manifest m = read_manifest(dir);
  detail::check_frame_files(dir, m);
  return detail::load_frames_as<Mask>(dir, m, read_mask_png);
}

inline void save_mask(const OcclusionMask& mask, const fs::path& dir)
{
  ensure_directory(dir);
  Manifest m;
  m.frame_count = mask.frames();
  m.width = mask.width();
  m.height = mask.height();
  parallel_for(mask.frames(), [&](int i) {
    write_mask_png(dir / frame_file_name(m.frame_pattern, i), mask[i]);
  });
  detail::remove_stale_frames(dir, m.frame_pattern, m.frame_count);
  write_manifest(dir, m);
}

inline DepthSequence load_depth(const fs::path& dir)
{
  Manifest m = read_manifest(dir);
  if (!m.depth_encoding)
    throw Error(Errc::DecodeError, "manifest has no depth_encoding", dir.string());
  detail::check_frame_files(dir, m);
  auto depth = *m.depth_encoding == DepthEncoding::pfm
                   ? detail::load_frames_as<DepthMap>(dir, m, read_pfm)
                   : detail::load_frames_as<DepthMap>(
                         dir, m, [&](const fs::path& p) { return read_depth_png16(p, m.depth_scale); });
  for (int i = 0; i < depth.frames(); ++i)
    require_positive_depth(depth[i], (dir / frame_file_name(m.frame_pattern, i)).string());
  return depth;
}

inline void save_depth(const DepthSequence& depth, const fs::path& dir,
                       DepthEncoding encoding = DepthEncoding::pfm, double png16_scale = 0.001)
{
  if (encoding == DepthEncoding::png16 && !(png16_scale > 0.0))
    throw Error(Errc::InvalidConfig, "png16 depth needs a positive scale");
  ensure_directory(dir);
  Manifest m;
  m.frame_pattern = encoding == DepthEncoding::pfm ? "frame_%05d.pfm" : "frame_%05d.png";
  m.frame_count = depth.frames();
  m.width = depth.width();
  m.height = depth.height();
  m.depth_encoding = encoding;
  m.depth_scale = encoding == DepthEncoding::pfm ? 1.0 : png16_scale;
  parallel_for(depth.frames(), [&](int i) {
    fs::path file = dir / frame_file_name(m.frame_pattern, i);
    if (encoding == DepthEncoding::pfm)
      write_pfm(file, depth[i]);
    else
      write_depth_png16(file, depth[i], png16_scale);
  });
  detail::remove_stale_frames(dir, m.frame_pattern, m.frame_count);
  write_manifest(dir, m);
}

} // namespace stereoforge

#endif // STEREOFORGE_TENSORIO_HPP
