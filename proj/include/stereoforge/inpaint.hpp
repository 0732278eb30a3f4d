#ifndef STEREOFORGE_INPAINT_HPP
#define STEREOFORGE_INPAINT_HPP

// Dual-branch stereo conversion. The same backend serves both branches:
//   left_to_right: warped left view + occlusion mask -> right view
//   left_to_left:  left view + all-zero mask          -> restored left view
// Backends are builtin (in-process) or external processes that speak a
// file protocol: a job.json manifest, frame directories and an exit code.

#include <sys/types.h>
#include <sys/wait.h>
#include <signal.h>
#include <unistd.h>

#include <array>
#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "image.hpp"
#include "parallel.hpp"
#include "postproc.hpp"
#include "tensorio.hpp"
#include "warp.hpp"

namespace stereoforge {

// ---------------------------------------------------------------------------
// Builtin baseline

/// Masked pixels copy the nearest unmasked pixel to their right in the same
/// row, else the nearest to their left. Rows with no unmasked pixel copy the
/// same column from the nearest row that has one (the upper row on ties).
inline Image baseline_inpaint(const Image& frame, const Mask& mask)
{
  require_same_size(frame, mask, "baseline_inpaint: frame/mask size");
  const int w = frame.width(), h = frame.height();
  Image out = frame;
  std::vector<char> row_has_source(static_cast<std::size_t>(h), 0);

  for (int y = 0; y < h; ++y) {
    int next_valid = -1;  // nearest unmasked column at or right of x
    std::vector<int> right_src(static_cast<std::size_t>(w), -1);
    for (int x = w - 1; x >= 0; --x) {
      if (!mask(x, y)) next_valid = x;
      right_src[x] = next_valid;
    }
    int prev_valid = -1;
    for (int x = 0; x < w; ++x) {
      if (!mask(x, y)) {
        prev_valid = x;
        row_has_source[y] = 1;
        continue;
      }
      int src = right_src[x] >= 0 ? right_src[x] : prev_valid;
      if (src < 0) continue;
      for (int c = 0; c < 3; ++c) out(x, y, c) = frame(src, y, c);
    }
  }

  bool any = false;
  for (char v : row_has_source) any = any || v;
  if (!any) throw Error(Errc::FullyMaskedFrame, "every pixel of the frame is masked");

  for (int y = 0; y < h; ++y) {
    if (row_has_source[y]) continue;
    int src = -1;
    for (int d = 1; src < 0; ++d) {
      if (y - d >= 0 && row_has_source[y - d]) src = y - d;
      else if (y + d < h && row_has_source[y + d]) src = y + d;
    }
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) out(x, y, c) = out(x, src, c);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Job manifest

enum class Branch { left_to_right, left_to_left };

inline std::string_view branch_name(Branch b)
{
  return b == Branch::left_to_right ? "left_to_right" : "left_to_left";
}

inline Branch parse_branch(std::string_view s)
{
  if (s == "left_to_right") return Branch::left_to_right;
  if (s == "left_to_left") return Branch::left_to_left;
  throw Error(Errc::DecodeError, "unknown branch '" + std::string(s) + "'");
}

inline constexpr const char* kJobVersion = "stereoforge-job/1";

struct BackendJob {
  std::string version = kJobVersion;
  Branch branch = Branch::left_to_right;
  std::string input_frames;
  std::string mask;
  std::string output_frames;
  int width = 0;
  int height = 0;
  int frame_count = 0;
  std::map<std::string, std::string> extras;

  friend bool operator==(const BackendJob&, const BackendJob&) = default;
};

inline nlohmann::ordered_json to_json(const BackendJob& job)
{
  nlohmann::ordered_json j;
  j["version"] = job.version;
  j["branch"] = std::string(branch_name(job.branch));
  j["input_frames"] = job.input_frames;
  j["mask"] = job.mask;
  j["output_frames"] = job.output_frames;
  j["width"] = job.width;
  j["height"] = job.height;
  j["frame_count"] = job.frame_count;
  j["extras"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : job.extras) j["extras"][k] = v;
  return j;
}

inline BackendJob job_from_json(const nlohmann::json& j)
{
  try {
    BackendJob job;
    job.version = j.at("version").get<std::string>();
    job.branch = parse_branch(j.at("branch").get<std::string>());
    job.input_frames = j.at("input_frames").get<std::string>();
    job.mask = j.at("mask").get<std::string>();
    job.output_frames = j.at("output_frames").get<std::string>();
    job.width = j.at("width").get<int>();
    job.height = j.at("height").get<int>();
    job.frame_count = j.at("frame_count").get<int>();
    if (j.contains("extras"))
      for (const auto& [k, v] : j.at("extras").items()) job.extras[k] = v.get<std::string>();
    return job;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::DecodeError, std::string("malformed job manifest: ") + e.what());
  }
}

inline void write_job(const fs::path& path, const BackendJob& job)
{
  write_text_file(path, to_json(job).dump(2) + "\n");
}

inline BackendJob read_job(const fs::path& path)
{
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open job manifest", path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::DecodeError, std::string("job manifest is not JSON: ") + e.what(), path.string());
  }
  return job_from_json(j);
}

/// Where run_backend writes the manifest for an external process.
inline fs::path job_manifest_path(const BackendJob& job)
{
  fs::path out(job.output_frames);
  return out.parent_path() / (std::string(branch_name(job.branch)) + ".job.json");
}

/// Enforces the branch law (left_to_left <=> all-zero mask) and shapes.
inline void check_job_inputs(const BackendJob& job, const Video& input, const OcclusionMask& mask)
{
  require_same_shape(input, mask, "backend job: input/mask shape");
  if (input.frames() != job.frame_count || input.width() != job.width || input.height() != job.height)
    throw Error(Errc::DimensionMismatch, "backend job declares different dimensions", job.input_frames);
  if (job.branch == Branch::left_to_left && !all_zero(mask))
    throw Error(Errc::InvalidConfig, "left_to_left job must carry an all-zero mask", job.mask);
}

// ---------------------------------------------------------------------------
// Backends

enum class BackendKind { builtin_baseline, identity, external_process };

struct BackendRegistration {
  std::string name;
  BackendKind kind = BackendKind::builtin_baseline;
  std::string command;  // external_process: must contain "{job}"
};

inline BackendRegistration baseline_backend() { return {"baseline", BackendKind::builtin_baseline, {}}; }
inline BackendRegistration identity_backend() { return {"identity", BackendKind::identity, {}}; }
inline BackendRegistration external_backend(std::string name, std::string command)
{
  return {std::move(name), BackendKind::external_process, std::move(command)};
}

class BackendRegistry {
public:
  BackendRegistry()
  {
    add(baseline_backend());
    add(identity_backend());
  }

  void add(BackendRegistration reg)
  {
    if (reg.name.empty()) throw Error(Errc::InvalidConfig, "backend name must not be empty");
    if (entries_.count(reg.name))
      throw Error(Errc::InvalidConfig, "backend '" + reg.name + "' is already registered");
    if (reg.kind == BackendKind::external_process && reg.command.find("{job}") == std::string::npos)
      throw Error(Errc::InvalidConfig, "external backend command needs a {job} placeholder", reg.command);
    entries_.emplace(reg.name, std::move(reg));
  }

  const BackendRegistration& find(const std::string& name) const
  {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw Error(Errc::InvalidConfig, "unknown backend '" + name + "'");
    return it->second;
  }

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }

private:
  std::map<std::string, BackendRegistration> entries_;
};

inline constexpr std::chrono::seconds kDefaultBackendTimeout{600};

inline std::string shell_quote(const std::string& s)
{
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  return out + "'";
}

/// Runs `/bin/sh -c command`, inheriting stdout/stderr. Returns the exit
/// status; kills the process group and throws Timeout past the deadline.
inline int run_process(const std::string& command, std::chrono::milliseconds timeout)
{
  pid_t pid = fork();
  if (pid < 0) throw Error(Errc::BackendFailed, "fork failed", command);
  if (pid == 0) {
    setpgid(0, 0);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  setpgid(pid, pid);
  auto deadline = std::chrono::steady_clock::now() + timeout;
  int status = 0;
  for (;;) {
    pid_t r = waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0) throw Error(Errc::BackendFailed, "waitpid failed", command);
    if (std::chrono::steady_clock::now() >= deadline) {
      kill(-pid, SIGKILL);
      waitpid(pid, &status, 0);
      throw Error(Errc::Timeout,
                  "backend exceeded " + std::to_string(timeout.count()) + " ms", command);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
}

namespace detail {

inline Video run_builtin(const BackendJob& job, const BackendRegistration& reg, const Video& input,
                         const OcclusionMask& mask)
{
  check_job_inputs(job, input, mask);
  if (reg.kind == BackendKind::identity) return input;
  std::vector<Image> frames(static_cast<std::size_t>(input.frames()));
  parallel_for(input.frames(), [&](int f) {
    frames[f] = all_zero(mask[f]) ? input[f] : baseline_inpaint(input[f], mask[f]);
  });
  return Video(std::move(frames));
}

inline Video run_external(const BackendJob& job, const BackendRegistration& reg,
                          std::chrono::milliseconds timeout)
{
  if (reg.command.find("{job}") == std::string::npos)
    throw Error(Errc::InvalidConfig, "external backend command needs a {job} placeholder", reg.command);
  fs::path manifest = job_manifest_path(job);
  ensure_directory(job.output_frames);
  detail::remove_stale_frames(job.output_frames, kDefaultFramePattern, 0);
  write_job(manifest, job);

  std::string cmd = reg.command;
  for (auto pos = cmd.find("{job}"); pos != std::string::npos; pos = cmd.find("{job}", pos)) {
    std::string quoted = shell_quote(manifest.string());
    cmd.replace(pos, 5, quoted);
    pos += quoted.size();
  }
  int code = run_process(cmd, timeout);
  if (code != 0)
    throw Error(Errc::BackendFailed, "backend '" + reg.name + "' exited with " + std::to_string(code), cmd);
  return load_frames(job.output_frames, job.frame_count, job.width, job.height);
}

} // namespace detail

/// Runs one branch job whose inputs are already on disk. Builtin backends
/// also write their result to job.output_frames.
inline Video run_backend(const BackendJob& job, const BackendRegistration& reg,
                         std::chrono::milliseconds timeout = kDefaultBackendTimeout)
{
  Video input = load_video(job.input_frames);
  OcclusionMask mask = load_mask(job.mask);
  if (reg.kind == BackendKind::external_process) {
    check_job_inputs(job, input, mask);
    return detail::run_external(job, reg, timeout);
  }
  Video out = detail::run_builtin(job, reg, input, mask);
  save_video(out, job.output_frames);
  return out;
}

/// Same as above with the inputs in memory; they are written to the job
/// paths only when an external process needs them.
inline Video run_backend(const BackendJob& job, const BackendRegistration& reg, const Video& input,
                         const OcclusionMask& mask,
                         std::chrono::milliseconds timeout = kDefaultBackendTimeout)
{
  if (reg.kind != BackendKind::external_process) return detail::run_builtin(job, reg, input, mask);
  check_job_inputs(job, input, mask);
  save_video(input, job.input_frames);
  save_mask(mask, job.mask);
  return detail::run_external(job, reg, timeout);
}

// ---------------------------------------------------------------------------
// Conversion

enum class HistogramReference { input, output_left };

struct ConvertConfig {
  DisparityMode disparity = ScaledDisparity{kDefaultDisparityScale};
  WarpOptions warp;
  BackendRegistration backend = baseline_backend();
  bool hist_match = false;
  HistogramReference hist_ref = HistogramReference::input;
  fs::path work_dir;  // job manifests and external-backend frames
  std::chrono::milliseconds timeout = kDefaultBackendTimeout;
};

struct ConversionResult {
  Video left;
  Video right;
  WarpedVideo warped;
  std::array<BackendJob, 2> jobs;  // [left_to_right, left_to_left]
};

inline BackendJob make_job(Branch branch, const fs::path& work_dir, int width, int height, int frames)
{
  std::string tag(branch == Branch::left_to_right ? "l2r" : "l2l");
  BackendJob job;
  job.branch = branch;
  job.input_frames = (work_dir / (tag + "_input")).string();
  job.mask = (work_dir / (tag + "_mask")).string();
  job.output_frames = (work_dir / (tag + "_output")).string();
  job.width = width;
  job.height = height;
  job.frame_count = frames;
  return job;
}

inline ConversionResult convert_stereo(const Video& left, const DepthSequence& depth,
                                       const ConvertConfig& cfg)
{
  require_same_shape(left, depth, "convert_stereo: left/depth shape");
  if (cfg.backend.kind == BackendKind::external_process && cfg.work_dir.empty())
    throw Error(Errc::InvalidConfig, "external backends need a work directory");
  const int w = left.width(), h = left.height(), n = left.frames();

  ConversionResult out;
  out.warped = warp_video(left, depth, cfg.disparity, cfg.warp);
  out.jobs[0] = make_job(Branch::left_to_right, cfg.work_dir, w, h, n);
  out.jobs[1] = make_job(Branch::left_to_left, cfg.work_dir, w, h, n);
  if (const auto* s = std::get_if<ScaledDisparity>(&cfg.disparity))
    out.jobs[0].extras["disparity_scale"] = std::to_string(s->scale);

  OcclusionMask zero(n, w, h);
  out.right = run_backend(out.jobs[0], cfg.backend, out.warped.frames, out.warped.mask, cfg.timeout);
  out.left = run_backend(out.jobs[1], cfg.backend, left, zero, cfg.timeout);
  require_same_shape(out.right, left, "backend output shape");
  require_same_shape(out.left, left, "backend output shape");

  if (cfg.hist_match)
    out.right = match_histograms(out.right,
                                 cfg.hist_ref == HistogramReference::input ? left : out.left);
  return out;
}

} // namespace stereoforge

#endif // STEREOFORGE_INPAINT_HPP
