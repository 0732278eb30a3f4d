#include <gtest/gtest.h>

#include <fstream>

#include "test_support.hpp"

using namespace stereoforge;
using sftest::TempDir;

namespace {

Image row_image(const std::vector<int>& values)
{
  Image img(static_cast<int>(values.size()), 1);
  for (int x = 0; x < img.width(); ++x)
    for (int c = 0; c < 3; ++c) img(x, 0, c) = static_cast<std::uint8_t>(values[x]);
  return img;
}

/// Writes an executable shell script and returns its path.
fs::path write_script(const fs::path& path, const std::string& body)
{
  write_text_file(path, "#!/bin/sh\n" + body);
  fs::permissions(path, fs::perms::owner_all);
  return path;
}

// Copy backend: reads input_frames/output_frames out of job.json with sed.
constexpr const char* kCopyScript = R"SH(job="$1"
in=$(sed -n 's/.*"input_frames": "\(.*\)".*/\1/p' "$job")
out=$(sed -n 's/.*"output_frames": "\(.*\)".*/\1/p' "$job")
mkdir -p "$out"
cp "$in"/frame_*.png "$out"/
)SH";

struct Fixture {
  Video input;
  OcclusionMask mask;
};

Fixture random_fixture(int frames, int w, int h, unsigned seed)
{
  std::mt19937 rng(seed);
  Fixture f{Video(frames, w, h), OcclusionMask(frames, w, h)};
  for (int i = 0; i < frames; ++i) {
    f.input[i] = sftest::random_image(w, h, rng);
    for (auto& v : f.mask[i].data()) v = (rng() % 4) == 0;
  }
  return f;
}

} // namespace

TEST(BaselineInpaint, ZeroMaskIsIdentity)
{
  std::mt19937 rng(1);
  Image img = sftest::random_image(9, 5, rng);
  EXPECT_EQ(baseline_inpaint(img, Mask(9, 5)), img);
}

TEST(BaselineInpaint, NearestRightRule)
{
  Image img = row_image({10, 0, 0, 70});
  Mask m(4, 1);
  m(1, 0) = m(2, 0) = 1;
  Image out = baseline_inpaint(img, m);
  EXPECT_EQ(out(0, 0, 0), 10);
  EXPECT_EQ(out(1, 0, 0), 70);
  EXPECT_EQ(out(2, 0, 0), 70);
  EXPECT_EQ(out(3, 0, 0), 70);
}

TEST(BaselineInpaint, FallsBackToLeftAtRowEnd)
{
  Image img = row_image({10, 40, 0, 0});
  Mask m(4, 1);
  m(2, 0) = m(3, 0) = 1;
  Image out = baseline_inpaint(img, m);
  EXPECT_EQ(out(2, 0, 1), 40);
  EXPECT_EQ(out(3, 0, 1), 40);
}

TEST(BaselineInpaint, FullyMaskedRowUsesNearestRow)
{
  std::mt19937 rng(2);
  Image img = sftest::random_image(5, 4, rng);
  Mask m(5, 4);
  for (int x = 0; x < 5; ++x) m(x, 1) = m(x, 2) = 1;
  Image out = baseline_inpaint(img, m);
  for (int x = 0; x < 5; ++x)
    for (int c = 0; c < 3; ++c) {
      EXPECT_EQ(out(x, 1, c), img(x, 0, c));
      EXPECT_EQ(out(x, 2, c), img(x, 3, c));
    }
}

TEST(BaselineInpaint, MatchesNearestValidOracle)
{
  std::mt19937 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    Image img = sftest::random_image(16, 16, rng);
    Mask m(16, 16);
    int density = 1 + static_cast<int>(rng() % 9);
    for (auto& v : m.data()) v = static_cast<int>(rng() % 10) < density;
    if (trial % 10 == 0)
      for (int x = 0; x < 16; ++x) m(x, static_cast<int>(rng() % 16)) = 1;
    if (all_zero(m) || std::all_of(m.data().begin(), m.data().end(), [](auto v) { return v; })) continue;
    ASSERT_EQ(baseline_inpaint(img, m), sftest::nearest_valid_oracle(img, m));
  }
}

TEST(BaselineInpaint, FullyMaskedFrame)
{
  try {
    baseline_inpaint(Image(4, 4), Mask(4, 4, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::FullyMaskedFrame);
  }
}

TEST(BackendJob, JsonRoundTrip)
{
  BackendJob job = make_job(Branch::left_to_left, "/tmp/w", 64, 32, 16);
  job.extras["note"] = "x";
  EXPECT_EQ(job_from_json(nlohmann::json::parse(to_json(job).dump())), job);
  TempDir tmp;
  write_job(tmp / "job.json", job);
  EXPECT_EQ(read_job(tmp / "job.json"), job);
}

TEST(BackendJob, ManifestFieldNames)
{
  auto j = to_json(make_job(Branch::left_to_right, "/w", 8, 8, 1));
  for (const char* key : {"version", "branch", "input_frames", "mask", "output_frames", "width", "height",
                          "frame_count", "extras"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["branch"], "left_to_right");
}

TEST(BackendJob, TruncatedManifestRejected)
{
  TempDir tmp;
  write_text_file(tmp / "job.json", R"({"version": "stereoforge-job/1", "branch": "left_to_)");
  EXPECT_THROW(read_job(tmp / "job.json"), Error);
}

TEST(BackendJob, LeftToLeftRequiresZeroMask)
{
  auto f = random_fixture(2, 8, 8, 4);
  BackendJob job = make_job(Branch::left_to_left, "", 8, 8, 2);
  EXPECT_THROW(run_backend(job, baseline_backend(), f.input, f.mask), Error);
}

TEST(BackendRegistry, UniqueNamesAndPlaceholder)
{
  BackendRegistry reg;
  EXPECT_TRUE(reg.contains("baseline"));
  EXPECT_TRUE(reg.contains("identity"));
  EXPECT_THROW(reg.add(identity_backend()), Error);
  EXPECT_THROW(reg.add(external_backend("x", "cat")), Error);
  reg.add(external_backend("x", "cat {job}"));
  EXPECT_EQ(reg.find("x").kind, BackendKind::external_process);
  EXPECT_THROW(reg.find("missing"), Error);
}

TEST(RunBackend, IdentityCopiesInput)
{
  auto f = random_fixture(3, 12, 8, 5);
  BackendJob job = make_job(Branch::left_to_right, "", 12, 8, 3);
  EXPECT_EQ(run_backend(job, identity_backend(), f.input, f.mask), f.input);
}

TEST(RunBackend, BaselineOnLeftToLeftIsIdentity)
{
  auto f = random_fixture(3, 12, 8, 6);
  BackendJob job = make_job(Branch::left_to_left, "", 12, 8, 3);
  OcclusionMask zero(3, 12, 8);
  EXPECT_EQ(run_backend(job, baseline_backend(), f.input, zero), f.input);
}

TEST(RunBackend, FileBasedBuiltinWritesOutput)
{
  TempDir tmp;
  auto f = random_fixture(2, 10, 6, 7);
  BackendJob job = make_job(Branch::left_to_right, tmp.path(), 10, 6, 2);
  save_video(f.input, job.input_frames);
  save_mask(f.mask, job.mask);
  Video out = run_backend(job, baseline_backend());
  EXPECT_EQ(out[1], baseline_inpaint(f.input[1], f.mask[1]));
  EXPECT_EQ(load_video(job.output_frames), out);
}

TEST(RunBackend, ExternalCopyScriptEqualsIdentity)
{
  TempDir tmp;
  auto script = write_script(tmp / "copy.sh", kCopyScript);
  auto f = random_fixture(3, 16, 8, 8);
  BackendJob job = make_job(Branch::left_to_right, tmp / "work", 16, 8, 3);
  auto reg = external_backend("copy", "sh " + script.string() + " {job}");
  Video out = run_backend(job, reg, f.input, f.mask);
  EXPECT_EQ(out, run_backend(job, identity_backend(), f.input, f.mask));
  EXPECT_EQ(read_job(job_manifest_path(job)), job);
  // Disk-only entry point gives the same result.
  EXPECT_EQ(run_backend(job, reg), out);
}

TEST(RunBackend, ExternalFailureModes)
{
  TempDir tmp;
  auto f = random_fixture(2, 8, 8, 9);
  BackendJob job = make_job(Branch::left_to_right, tmp / "work", 8, 8, 2);
  auto code_of = [&](const BackendRegistration& reg, std::chrono::milliseconds timeout) {
    try {
      run_backend(job, reg, f.input, f.mask, timeout);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::IoError;
  };
  EXPECT_EQ(code_of(external_backend("fail", "exit 3; {job}"), std::chrono::seconds(10)), Errc::BackendFailed);
  EXPECT_EQ(code_of(external_backend("slow", "sleep 5 # {job}"), std::chrono::milliseconds(200)), Errc::Timeout);
  EXPECT_EQ(code_of(external_backend("lazy", "true {job}"), std::chrono::seconds(10)), Errc::OutputMismatch);

  // Wrong output size.
  auto script = write_script(tmp / "small.sh", R"SH(job="$1"
out=$(sed -n 's/.*"output_frames": "\(.*\)".*/\1/p' "$job")
mkdir -p "$out"
)SH");
  TempDir other;
  save_video(Video(2, 4, 4), other / "small");
  auto cp = "sh " + script.string() + " {job} && cp " + (other / "small").string() + "/frame_*.png " +
            (tmp / "work" / "l2r_output").string() + "/";
  EXPECT_EQ(code_of(external_backend("small", cp), std::chrono::seconds(10)), Errc::OutputMismatch);
}

TEST(ConvertStereo, IdentityBackendZeroDisparity)
{
  Video left = sftest::render_clip(1, 64, 32, 3);
  DepthSequence depth(3, 64, 32);
  for (auto& d : depth)
    for (auto& v : d.data()) v = 2.0f;
  ConvertConfig cfg;
  cfg.backend = identity_backend();
  auto r = convert_stereo(left, depth, cfg);  // constant depth -> zero disparity in scaled mode
  EXPECT_EQ(r.left, left);
  EXPECT_EQ(r.right, left);
}

TEST(ConvertStereo, BranchMasksAndUnmaskedContent)
{
  SceneConfig sc;
  sc.width = 128;
  sc.height = 64;
  sc.frame_count = 3;
  auto scene = sample_scene(6, sc);
  auto rig = make_rig(scene, 128, 64);
  auto render = render_stereo(scene, rig);
  ConvertConfig cfg;
  cfg.disparity = MetricDisparity{rig.focal_px, rig.baseline_m};
  for (auto backend : {identity_backend(), baseline_backend()}) {
    cfg.backend = backend;
    auto r = convert_stereo(render.left, render.left_depth, cfg);
    EXPECT_EQ(r.jobs[1].branch, Branch::left_to_left);
    EXPECT_EQ(r.jobs[0].branch, Branch::left_to_right);
    EXPECT_EQ(r.left, render.left);
    for (int f = 0; f < 3; ++f)
      for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 128; ++x)
          if (!r.warped.mask[f](x, y)) {
            for (int c = 0; c < 3; ++c) ASSERT_EQ(r.right[f](x, y, c), r.warped.frames[f](x, y, c));
          }
    if (backend.kind == BackendKind::builtin_baseline) {
      for (int f = 0; f < 3; ++f) EXPECT_EQ(r.right[f], baseline_inpaint(r.warped.frames[f], r.warped.mask[f]));
    }
  }
}

TEST(ConvertStereo, DefaultScaleAndHistogramReference)
{
  ConvertConfig cfg;
  ASSERT_TRUE(std::holds_alternative<ScaledDisparity>(cfg.disparity));
  EXPECT_DOUBLE_EQ(std::get<ScaledDisparity>(cfg.disparity).scale, 0.03);
  EXPECT_EQ(cfg.hist_ref, HistogramReference::input);

  SceneConfig sc;
  sc.width = 96;
  sc.height = 48;
  sc.frame_count = 2;
  auto scene = sample_scene(8, sc);
  auto render = render_stereo(scene, make_rig(scene, 96, 48));
  cfg.hist_match = true;
  auto r = convert_stereo(render.left, render.left_depth, cfg);
  EXPECT_EQ(r.jobs[0].extras.at("disparity_scale"), std::to_string(0.03));
  auto plain = cfg;
  plain.hist_match = false;
  auto unmatched = convert_stereo(render.left, render.left_depth, plain);
  EXPECT_EQ(r.right, match_histograms(unmatched.right, render.left));
}

TEST(ConvertStereo, ExternalBackendThroughWorkDir)
{
  TempDir tmp;
  auto script = write_script(tmp / "copy.sh", kCopyScript);
  Video left = sftest::render_clip(2, 48, 24, 2);
  DepthSequence depth(2, 48, 24);
  for (auto& d : depth)
    for (auto& v : d.data()) v = 1.0f + (&v - d.data().data()) % 7;
  ConvertConfig cfg;
  cfg.backend = external_backend("copy", "sh " + script.string() + " {job}");
  cfg.work_dir = tmp / "work";
  auto r = convert_stereo(left, depth, cfg);
  EXPECT_EQ(r.left, left);
  EXPECT_EQ(r.right, r.warped.frames);
  EXPECT_TRUE(all_zero(load_mask(r.jobs[1].mask)));
}
