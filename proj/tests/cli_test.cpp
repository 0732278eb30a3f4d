#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "test_support.hpp"

using namespace stereoforge;
using sftest::TempDir;

namespace {

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

RunResult run(const std::string& args, const TempDir& tmp)
{
  fs::path out = tmp / "stdout.txt", err = tmp / "stderr.txt";
  std::string cmd = std::string(STEREOFORGE_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
  int status = std::system(cmd.c_str());
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

bool same_tree(const fs::path& a, const fs::path& b)
{
  std::vector<fs::path> fa, fb;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) fa.push_back(fs::relative(e.path(), a));
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file()) fb.push_back(fs::relative(e.path(), b));
  std::sort(fa.begin(), fa.end());
  std::sort(fb.begin(), fb.end());
  if (fa != fb) return false;
  for (const auto& rel : fa) {
    std::ifstream x(a / rel, std::ios::binary), y(b / rel, std::ios::binary);
    std::string sx((std::istreambuf_iterator<char>(x)), {}), sy((std::istreambuf_iterator<char>(y)), {});
    if (sx != sy) return false;
  }
  return true;
}

} // namespace

TEST(Cli, GenIsReproducible)
{
  TempDir tmp;
  std::string common = "gen --seed 1 --frames 4 --drop 1 --width 64 --height 32 --out ";
  ASSERT_EQ(run(common + (tmp / "a").string(), tmp).code, 0);
  auto r = run("--threads 3 " + common + (tmp / "b").string(), tmp);
  ASSERT_EQ(r.code, 0);
  auto echo = nlohmann::json::parse(r.out);
  EXPECT_EQ(echo["command"], "gen");
  EXPECT_EQ(echo["config"]["seed"], 1);
  EXPECT_TRUE(same_tree(tmp / "a", tmp / "b"));
  for (const char* d : {"left", "right", "depth_left", "depth_right"})
    EXPECT_EQ(read_manifest(tmp / "a" / d).frame_count, 3) << d;
}

TEST(Cli, UsageErrorsExitTwo)
{
  TempDir tmp;
  EXPECT_EQ(run("convert only_left", tmp).code, 2);
  EXPECT_EQ(run("gen --out x", tmp).code, 2);  // --seed is mandatory
  EXPECT_EQ(run("frobnicate", tmp).code, 2);
  EXPECT_EQ(run("", tmp).code, 2);
}

TEST(Cli, DomainErrorsAreJsonOnStderr)
{
  TempDir tmp;
  auto r = run("warp " + (tmp / "missing").string() + " " + (tmp / "missing").string() + " " +
                   (tmp / "out").string(),
               tmp);
  EXPECT_EQ(r.code, 1);
  auto j = nlohmann::json::parse(r.err);
  EXPECT_EQ(j["code"], "MissingManifest");
  EXPECT_TRUE(j.contains("message"));
  EXPECT_TRUE(j.contains("context"));
}

TEST(Cli, PipelineCommands)
{
  TempDir tmp;
  auto d = [&](const char* leaf) { return (tmp / leaf).string(); };
  ASSERT_EQ(run("gen --seed 3 --frames 3 --drop 0 --width 64 --height 32 --out " + d("g"), tmp).code, 0);
  std::string left = d("g") + "/left", depth = d("g") + "/depth_left";

  ASSERT_EQ(run("warp --mode scaled --scale 0.05 --dilate 1 --fill 2 " + left + " " + depth + " " + d("w"), tmp).code, 0);
  EXPECT_EQ(load_mask(tmp / "w" / "mask").frames(), 3);
  EXPECT_EQ(load_video(tmp / "w" / "warped").frames(), 3);

  ASSERT_EQ(run("degrade --seed 42 --target 32x16 --stages blur,down,noise " + left + " " + d("deg"), tmp).code, 0);
  auto recipe = nlohmann::json::parse(std::ifstream(tmp / "deg" / "recipe.json"));
  EXPECT_EQ(recipe["recipe"]["target_w"], 32);
  EXPECT_EQ(recipe["recipe"]["stages"].size(), 3u);
  EXPECT_EQ(run("degrade --seed 42 --target 128x16 " + left + " " + d("bad"), tmp).code, 1);

  ASSERT_EQ(run("convert --backend baseline --hist-match " + d("deg") + " " + depth + " " + d("c"), tmp).code, 0);
  for (const char* sub : {"left", "right", "warped"}) EXPECT_EQ(load_video(tmp / "c" / sub).frames(), 3);
  EXPECT_EQ(read_job(tmp / "c" / "work" / "left_to_left.job.json").branch, Branch::left_to_left);

  ASSERT_EQ(run("histmatch " + d("c") + "/right " + left + " " + d("h"), tmp).code, 0);
  ASSERT_EQ(run("pack --mode sbs " + left + " " + d("c") + "/right " + d("p"), tmp).code, 0);
  EXPECT_EQ(load_video(tmp / "p").width(), 128);

  auto m = run("metrics --kind view " + left + " " + d("c") + "/right", tmp);
  ASSERT_EQ(m.code, 0);
  auto j = nlohmann::json::parse(m.out);
  EXPECT_EQ(j["metric"], "view");
  EXPECT_EQ(j["per_frame"].size(), 3u);
  EXPECT_GT(j["mean"].get<double>(), 0.5);

  auto t = nlohmann::json::parse(run("metrics --kind temporal --feature ssim " + left, tmp).out);
  EXPECT_EQ(t["per_frame"].size(), 2u);
  auto p = run("metrics --kind psnr --mask " + d("w") + "/mask " + d("w") + "/warped " + d("g") + "/right", tmp);
  ASSERT_EQ(p.code, 0);
  EXPECT_EQ(run("metrics --kind ssim " + left, tmp).code, 1);  // needs B_DIR
}

TEST(Cli, ExternalBackend)
{
  TempDir tmp;
  auto d = [&](const char* leaf) { return (tmp / leaf).string(); };
  ASSERT_EQ(run("gen --seed 4 --frames 2 --drop 0 --width 32 --height 16 --out " + d("g"), tmp).code, 0);
  write_text_file(tmp / "copy.sh", R"SH(job="$1"
in=$(sed -n 's/.*"input_frames": "\(.*\)".*/\1/p' "$job")
out=$(sed -n 's/.*"output_frames": "\(.*\)".*/\1/p' "$job")
cp "$in"/frame_*.png "$out"/
)SH");
  std::string backend = "--backend 'exec:sh " + d("copy.sh") + " {job}'";
  ASSERT_EQ(run("convert " + backend + " " + d("g") + "/left " + d("g") + "/depth_left " + d("c"), tmp).code, 0);
  EXPECT_EQ(load_video(tmp / "c" / "left"), load_video(tmp / "g" / "left"));
  EXPECT_EQ(load_video(tmp / "c" / "right"), load_video(tmp / "c" / "warped"));

  auto r = run("convert --backend 'exec:false {job}' " + d("g") + "/left " + d("g") + "/depth_left " + d("c2"), tmp);
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(nlohmann::json::parse(r.err)["code"], "BackendFailed");
}
