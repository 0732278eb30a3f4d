// stereoforge: command-line front end for the stereo conversion pipeline.
//
// Exit codes: 0 success, 1 domain error (JSON on stderr), 2 usage error.

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <stereoforge/stereoforge.hpp>

namespace sf = stereoforge;
using ojson = nlohmann::ordered_json;

namespace {

void emit_error(std::string_view code, const std::string& message, const std::string& context)
{
  ojson j{{"code", code}, {"message", message}, {"context", context}};
  std::cerr << j.dump() << std::endl;
}

void echo_config(const std::string& command, const ojson& config)
{
  std::cout << ojson{{"command", command}, {"config", config}}.dump() << std::endl;
}

std::pair<int, int> parse_size(const std::string& s)
{
  int w = 0, h = 0;
  char x = 0;
  std::istringstream in(s);
  if (!(in >> w >> x >> h) || (x != 'x' && x != 'X') || w < 1 || h < 1 || !in.eof())
    throw sf::Error(sf::Errc::InvalidConfig, "size must look like 256x128", s);
  return {w, h};
}

std::vector<sf::Stage> parse_stages(const std::string& csv)
{
  std::vector<sf::Stage> stages;
  std::stringstream in(csv);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) stages.push_back(sf::parse_stage(item));
  return stages;
}

struct DisparityArgs {
  std::string mode = "scaled";
  double scale = sf::kDefaultDisparityScale;
  double focal = 0.0;
  double baseline = sf::kBaselineMean;

  void add_to(CLI::App* cmd)
  {
    cmd->add_option("--mode", mode, "Disparity mode")->check(CLI::IsMember({"scaled", "metric"}));
    cmd->add_option("--scale", scale, "Disparity scaling s (scaled mode)");
    cmd->add_option("--focal", focal, "Focal length in px (metric mode; default W/2)");
    cmd->add_option("--baseline", baseline, "Baseline in m (metric mode)");
  }

  sf::DisparityMode resolve(int width) const
  {
    if (mode == "metric") return sf::MetricDisparity{focal > 0 ? focal : sf::default_focal(width), baseline};
    return sf::ScaledDisparity{scale};
  }

  ojson json(int width) const
  {
    if (mode == "metric")
      return {{"mode", mode}, {"focal_px", focal > 0 ? focal : sf::default_focal(width)}, {"baseline_m", baseline}};
    return {{"mode", mode}, {"scale", scale}};
  }
};

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"stereoforge: synthetic stereo data, warping, degradation and conversion"};
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: $STEREOFORGE_THREADS or all cores)");

  // gen
  auto* gen = app.add_subcommand("gen", "Render a synthetic stereo clip with ground-truth depth");
  std::uint64_t gen_seed = 0;
  int gen_frames = 21, gen_drop = 5, gen_width = 1024, gen_height = 512, gen_objects = 4;
  double gen_focal = 0.0, gen_dmin = 1.5, gen_dmax = 4.0;
  std::string gen_out;
  gen->add_option("--seed", gen_seed, "Scene seed")->required();
  gen->add_option("--frames", gen_frames, "Frames to render")->check(CLI::PositiveNumber);
  gen->add_option("--drop", gen_drop, "Leading frames to discard")->check(CLI::NonNegativeNumber);
  gen->add_option("--width", gen_width)->check(CLI::Range(8, 1 << 14));
  gen->add_option("--height", gen_height)->check(CLI::Range(8, 1 << 14));
  gen->add_option("--focal", gen_focal, "Focal length in px (default W/2)");
  gen->add_option("--objects", gen_objects)->check(CLI::PositiveNumber);
  gen->add_option("--depth-min", gen_dmin);
  gen->add_option("--depth-max", gen_dmax);
  gen->add_option("--out", gen_out, "Output directory")->required();

  // warp
  auto* warp = app.add_subcommand("warp", "Forward-warp a clip with its depth");
  DisparityArgs warp_disp;
  warp_disp.add_to(warp);
  int warp_dilate = 1, warp_fill = 2;
  std::string warp_in, warp_depth, warp_out;
  warp->add_option("--dilate", warp_dilate, "Mask dilation radius (0 = off)")->check(CLI::NonNegativeNumber);
  warp->add_option("--fill", warp_fill, "Max hole span filled by interpolation (0 = off)")
      ->check(CLI::NonNegativeNumber);
  warp->add_option("IN_DIR", warp_in)->required();
  warp->add_option("DEPTH_DIR", warp_depth)->required();
  warp->add_option("OUT_DIR", warp_out)->required();

  // degrade
  auto* degrade = app.add_subcommand("degrade", "Apply a seeded, temporally consistent degradation");
  std::uint64_t deg_seed = 0;
  std::string deg_target = "256x128", deg_stages = "blur,down,noise,jpeg", deg_in, deg_out;
  bool deg_second = false;
  sf::RecipeRanges ranges;
  degrade->add_option("--seed", deg_seed, "Recipe seed")->required();
  degrade->add_option("--target", deg_target, "Down-sampled size WxH");
  degrade->add_option("--stages", deg_stages, "Comma-separated subset of blur,down,noise,jpeg");
  degrade->add_flag("--second-order", deg_second, "Run the stage chain twice with two recipes");
  degrade->add_option("--blur-min", ranges.blur_min);
  degrade->add_option("--blur-max", ranges.blur_max);
  degrade->add_option("--noise-min", ranges.noise_min);
  degrade->add_option("--noise-max", ranges.noise_max);
  degrade->add_option("--quality-min", ranges.quality_min);
  degrade->add_option("--quality-max", ranges.quality_max);
  degrade->add_option("IN_DIR", deg_in)->required();
  degrade->add_option("OUT_DIR", deg_out)->required();

  // convert
  auto* convert = app.add_subcommand("convert", "Convert a left clip plus depth into a stereo pair");
  DisparityArgs conv_disp;
  conv_disp.add_to(convert);
  int conv_dilate = 1, conv_fill = 2, conv_timeout = 600;
  std::string conv_backend = "baseline", conv_hist_ref = "input", conv_left, conv_depth, conv_out;
  bool conv_hist = false;
  convert->add_option("--dilate", conv_dilate)->check(CLI::NonNegativeNumber);
  convert->add_option("--fill", conv_fill)->check(CLI::NonNegativeNumber);
  convert->add_option("--backend", conv_backend, "baseline | identity | exec:\"CMD {job}\"");
  convert->add_flag("--hist-match", conv_hist, "Match the right view's histograms to the reference");
  convert->add_option("--hist-ref", conv_hist_ref, "Histogram reference")
      ->check(CLI::IsMember({"input", "output-left"}));
  convert->add_option("--timeout", conv_timeout, "External backend timeout in seconds")
      ->check(CLI::PositiveNumber);
  convert->add_option("LEFT_DIR", conv_left)->required();
  convert->add_option("DEPTH_DIR", conv_depth)->required();
  convert->add_option("OUT_DIR", conv_out)->required();

  // histmatch
  auto* histmatch = app.add_subcommand("histmatch", "Match per-frame channel histograms to a reference");
  std::string hm_src, hm_ref, hm_out;
  histmatch->add_option("SRC_DIR", hm_src)->required();
  histmatch->add_option("REF_DIR", hm_ref)->required();
  histmatch->add_option("OUT_DIR", hm_out)->required();

  // pack
  auto* packcmd = app.add_subcommand("pack", "Pack a stereo pair for viewing");
  std::string pack_mode = "sbs", pack_left, pack_right, pack_out;
  packcmd->add_option("--mode", pack_mode)->check(CLI::IsMember({"sbs", "tb", "anaglyph"}));
  packcmd->add_option("LEFT_DIR", pack_left)->required();
  packcmd->add_option("RIGHT_DIR", pack_right)->required();
  packcmd->add_option("OUT_DIR", pack_out)->required();

  // metrics
  auto* metrics = app.add_subcommand("metrics", "Evaluate clips; prints JSON");
  std::string met_kind, met_a, met_b, met_mask, met_feature = "patch_cosine";
  metrics->add_option("--kind", met_kind)->required()->check(CLI::IsMember({"view", "temporal", "psnr", "ssim"}));
  metrics->add_option("--mask", met_mask, "Mask directory; psnr skips pixels where mask = 1");
  metrics->add_option("--feature", met_feature, "Per-pair metric for --kind temporal")
      ->check(CLI::IsMember({"patch_cosine", "ssim", "psnr"}));
  metrics->add_option("A_DIR", met_a)->required();
  metrics->add_option("B_DIR", met_b);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (threads <= 0)
      if (const char* env = std::getenv("STEREOFORGE_THREADS")) threads = std::atoi(env);
    sf::set_thread_count(threads);

    if (*gen) {
      sf::SceneConfig cfg;
      cfg.num_objects = gen_objects;
      cfg.depth_min = gen_dmin;
      cfg.depth_max = gen_dmax;
      cfg.frame_count = gen_frames;
      cfg.width = gen_width;
      cfg.height = gen_height;
      cfg.focal_px = gen_focal;
      if (gen_drop >= gen_frames)
        throw sf::Error(sf::Errc::InvalidConfig, "--drop must be smaller than --frames");
      auto scene = sf::sample_scene(gen_seed, cfg);
      auto rig = sf::make_rig(scene, gen_width, gen_height, gen_focal);
      echo_config("gen", {{"seed", gen_seed}, {"frames", gen_frames}, {"drop", gen_drop},
                          {"width", gen_width}, {"height", gen_height}, {"focal_px", rig.focal_px},
                          {"baseline_m", rig.baseline_m}, {"objects", gen_objects}, {"out", gen_out}});
      auto render = sf::drop_leading_frames(sf::render_stereo(scene, rig), gen_drop);
      sf::fs::path out(gen_out);
      sf::ensure_directory(out);
      std::map<std::string, std::string> extras{{"focal_px", std::to_string(rig.focal_px)},
                                                {"baseline_m", std::to_string(rig.baseline_m)}};
      sf::save_video(render.left, out / "left", extras);
      sf::save_video(render.right, out / "right", extras);
      sf::save_depth(render.left_depth, out / "depth_left");
      sf::save_depth(render.right_depth, out / "depth_right");
      ojson scene_json = sf::to_json(scene);
      scene_json["focal_px"] = rig.focal_px;
      scene_json["dropped_frames"] = gen_drop;
      sf::write_text_file(out / "scene.json", scene_json.dump(2) + "\n");
    } else if (*warp) {
      auto video = sf::load_video(warp_in);
      auto depth = sf::load_depth(warp_depth);
      echo_config("warp", {{"disparity", warp_disp.json(video.width())}, {"dilate", warp_dilate},
                           {"fill", warp_fill}, {"in", warp_in}, {"depth", warp_depth}, {"out", warp_out}});
      sf::WarpOptions opt{warp_fill, warp_dilate, 1};
      auto warped = sf::warp_video(video, depth, warp_disp.resolve(video.width()), opt);
      sf::save_video(warped.frames, sf::fs::path(warp_out) / "warped");
      sf::save_mask(warped.mask, sf::fs::path(warp_out) / "mask");
    } else if (*degrade) {
      auto [tw, th] = parse_size(deg_target);
      ranges.target_w = tw;
      ranges.target_h = th;
      ranges.stages = parse_stages(deg_stages);
      auto recipe = sf::sample_recipe(deg_seed, ranges);
      ojson config{{"seed", deg_seed}, {"recipe", sf::to_json(recipe)}};
      std::optional<sf::DegradationRecipe> second;
      if (deg_second) {
        second = sf::sample_recipe(sf::second_order_seed(deg_seed), ranges);
        config["second_recipe"] = sf::to_json(*second);
      }
      echo_config("degrade", config);
      auto video = sf::load_video(deg_in);
      auto out = second ? sf::degrade_video(video, recipe, *second) : sf::degrade_video(video, recipe);
      sf::save_video(out, deg_out);
      sf::write_text_file(sf::fs::path(deg_out) / "recipe.json", config.dump(2) + "\n");
    } else if (*convert) {
      auto left = sf::load_video(conv_left);
      auto depth = sf::load_depth(conv_depth);
      sf::fs::path out(conv_out);
      sf::ConvertConfig cfg;
      cfg.disparity = conv_disp.resolve(left.width());
      cfg.warp = {conv_fill, conv_dilate, 1};
      cfg.hist_match = conv_hist;
      cfg.hist_ref = conv_hist_ref == "input" ? sf::HistogramReference::input
                                              : sf::HistogramReference::output_left;
      cfg.work_dir = out / "work";
      cfg.timeout = std::chrono::seconds(conv_timeout);
      sf::BackendRegistry registry;
      if (conv_backend.rfind("exec:", 0) == 0) {
        registry.add(sf::external_backend("exec", conv_backend.substr(5)));
        cfg.backend = registry.find("exec");
      } else {
        cfg.backend = registry.find(conv_backend);
      }
      echo_config("convert", {{"disparity", conv_disp.json(left.width())}, {"dilate", conv_dilate},
                              {"fill", conv_fill}, {"backend", conv_backend}, {"hist_match", conv_hist},
                              {"hist_ref", conv_hist_ref}, {"timeout_s", conv_timeout},
                              {"left", conv_left}, {"depth", conv_depth}, {"out", conv_out}});
      sf::ensure_directory(cfg.work_dir);
      auto result = sf::convert_stereo(left, depth, cfg);
      sf::save_video(result.left, out / "left");
      sf::save_video(result.right, out / "right");
      sf::save_video(result.warped.frames, out / "warped");
      sf::save_mask(result.warped.mask, out / "mask");
      for (const auto& job : result.jobs)
        sf::write_job(cfg.work_dir / (std::string(sf::branch_name(job.branch)) + ".job.json"), job);
    } else if (*histmatch) {
      echo_config("histmatch", {{"src", hm_src}, {"ref", hm_ref}, {"out", hm_out}});
      sf::save_video(sf::match_histograms(sf::load_video(hm_src), sf::load_video(hm_ref)), hm_out);
    } else if (*packcmd) {
      echo_config("pack", {{"mode", pack_mode}, {"left", pack_left}, {"right", pack_right}, {"out", pack_out}});
      sf::save_video(sf::pack(sf::load_video(pack_left), sf::load_video(pack_right),
                              sf::parse_pack_mode(pack_mode)),
                     pack_out);
    } else if (*metrics) {
      auto a = sf::load_video(met_a);
      std::optional<sf::Video> b;
      if (!met_b.empty()) b = sf::load_video(met_b);
      auto need_b = [&] {
        if (!b) throw sf::Error(sf::Errc::InvalidConfig, "--kind " + met_kind + " needs B_DIR");
        return *b;
      };
      sf::ScoreSeries series;
      std::string metric = met_kind;
      if (met_kind == "view") {
        series = sf::view_consistency(a, need_b());
      } else if (met_kind == "temporal") {
        sf::FrameMetric f = met_feature == "ssim"   ? sf::FrameMetric::ssim
                            : met_feature == "psnr" ? sf::FrameMetric::psnr
                                                    : sf::FrameMetric::patch_cosine;
        series = sf::temporal_consistency(a, f);
        metric += ":" + met_feature;
      } else if (met_kind == "psnr") {
        std::optional<sf::OcclusionMask> mask;
        if (!met_mask.empty()) mask = sf::load_mask(met_mask);
        series = sf::compare_videos(sf::FrameMetric::psnr, a, need_b(), mask ? &*mask : nullptr);
      } else {
        series = sf::compare_videos(sf::FrameMetric::ssim, a, need_b());
      }
      ojson j{{"metric", metric}, {"per_frame", series.per_frame}, {"mean", series.mean},
              {"config", {{"a", met_a}, {"b", met_b}, {"mask", met_mask}}}};
      std::cout << j.dump() << std::endl;
    }
  } catch (const sf::Error& e) {
    emit_error(sf::errc_name(e.code()), e.message(), e.context());
    return 1;
  } catch (const std::exception& e) {
    emit_error("InternalError", e.what(), "");
    return 1;
  }
  return 0;
}
