#include "stochsplat/backward.hpp"
#include "stochsplat/experiments.hpp"
#include "stochsplat/io.hpp"
#include "stochsplat/metrics.hpp"
#include "stochsplat/optim.hpp"
#include "stochsplat/parallel.hpp"
#include "stochsplat/render.hpp"
#include "stochsplat/scenes.hpp"
#include "stochsplat/taa.hpp"
#include "stochsplat/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Geometry>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace stochsplat;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Shared {
  std::string scene = "random:8:1";
  std::string cameras;
  int width = 64;
  int height = 64;
  int spp = 1;
  std::string depth_mode = "mean";
  std::uint64_t seed = 0;
  std::string background = "0";
  int tile_size = 16;
  std::string out = ".";
  std::string renderer = "stochastic";
  int threads = 0;
  double alpha_cutoff = kDefaultAlphaCutoff;
  bool cutoff_given = false;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

Rgb parse_background(const std::string& s) {
  const auto parts = split(s, ',');
  if (parts.size() == 1) return Rgb::Constant(std::stod(parts[0]));
  if (parts.size() == 3) return Rgb(std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2]));
  throw std::invalid_argument("--background takes v or r,g,b");
}

// "file.ply", or a built-in: random[:count[:seed]], crossing, planar[:grid[:seed]], overlap[:count[:seed]].
Scene load_scene(const std::string& spec) {
  if (spec.size() > 4 && spec.substr(spec.size() - 4) == ".ply") return load_ply(spec);
  const auto p = split(spec, ':');
  if (p.empty()) throw std::invalid_argument("empty --scene");
  auto num = [&](std::size_t i, long fallback) { return i < p.size() ? std::stol(p[i]) : fallback; };
  if (p[0] == "random") {
    RandomSceneOptions o;
    o.count = static_cast<int>(num(1, 8));
    o.seed = static_cast<std::uint64_t>(num(2, 1));
    return random_scene(o);
  }
  if (p[0] == "crossing") return crossing_scene();
  if (p[0] == "planar") return planar_scene(static_cast<int>(num(1, 6)), static_cast<std::uint64_t>(num(2, 1)));
  if (p[0] == "overlap") return overlap_scene(static_cast<int>(num(1, 64)), static_cast<std::uint64_t>(num(2, 1)));
  throw std::invalid_argument("unknown scene '" + spec + "'");
}

std::string scene_kind(const std::string& spec) { return split(spec, ':').empty() ? "" : split(spec, ':')[0]; }

std::vector<CameraRecord> load_views(const Shared& o) {
  if (!o.cameras.empty()) return load_cameras(o.cameras);
  const int w = o.width, h = o.height;
  const std::string kind = scene_kind(o.scene);
  Camera cam;
  if (kind == "crossing") {
    cam = crossing_camera(w, h, 0.0);
  } else if (kind == "overlap") {
    cam = orbit_camera(w, h, w, 4.0);
  } else if (kind == "planar") {
    cam.width = w;
    cam.height = h;
    cam.fx = cam.fy = w;
    cam.cx = 0.5 * w;
    cam.cy = 0.5 * h;
    cam.translation = Vec3(0, 0, 3.0);
  } else {
    cam = orbit_camera(w, h, 1.1 * w, 2.5);
  }
  return {{"view0", cam, ""}};
}

RenderConfig render_config(const Shared& o) {
  RenderConfig cfg;
  cfg.spp = o.spp;
  cfg.depth_mode = parse_depth_mode(o.depth_mode);
  cfg.pass_seed = o.seed;
  cfg.background = parse_background(o.background);
  cfg.tile_size = o.tile_size;
  cfg.alpha_cutoff = o.alpha_cutoff;
  cfg.validate();
  return cfg;
}

void emit(const json& j) { std::cout << j.dump() << "\n" << std::flush; }

fs::path out_dir(const Shared& o) {
  fs::path d(o.out);
  fs::create_directories(d);
  return d;
}

Camera yawed(const Camera& cam, double yaw) {
  Camera c = cam;
  const Vec3 center = cam.center();
  c.rotation = Eigen::AngleAxisd(yaw, Vec3::UnitY()).toRotationMatrix() * cam.rotation;
  c.translation = -c.rotation * center;
  return c;
}

Camera orbited(const Camera& cam, double angle) {
  Camera c = cam;
  c.rotation = cam.rotation * Eigen::AngleAxisd(angle, Vec3::UnitY()).toRotationMatrix().transpose();
  return c;
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

// ---- render ----

struct RenderArgs {
  std::string reference;
  std::string format = "png";
  double min_psnr = -1.0;
};

int cmd_render(const Shared& o, const RenderArgs& a) {
  const Scene scene = load_scene(o.scene);
  const auto views = load_views(o);
  const RenderConfig cfg = render_config(o);
  const RendererKind kind = parse_renderer(o.renderer);
  const fs::path dir = out_dir(o);
  bool ok = true;
  for (const auto& v : views) {
    const auto t0 = std::chrono::steady_clock::now();
    const Image img = render_with(kind, scene, v.camera, cfg);
    const double ms = elapsed_ms(t0);
    const fs::path file = dir / (v.id + "." + a.format);
    write_image(img, file);
    json j{{"camera", v.id}, {"renderer", o.renderer}, {"spp", cfg.spp}, {"depth_mode", o.depth_mode},
           {"seed", cfg.pass_seed}, {"ms", ms}, {"file", file.string()}};
    if (!a.reference.empty()) {
      Image ref;
      if (a.reference == "sorted") {
        RenderConfig rc = cfg;
        rc.early_stop_transmittance = 0.0;
        ref = render_sorted_ab(scene, v.camera, rc);
      } else if (a.reference == "images") {
        if (v.image_path.empty()) throw std::runtime_error("camera '" + v.id + "' has no image_path");
        ref = read_image(v.image_path);
      } else {
        ref = read_image(fs::path(a.reference) / (v.id + ".png"));
      }
      const double p = psnr(img, ref);
      j["mse"] = mse(img, ref);
      j["psnr"] = p;
      j["ssim"] = ssim(img, ref);
      if (a.min_psnr >= 0.0) {
        j["check"] = p >= a.min_psnr ? "pass" : "fail";
        ok = ok && p >= a.min_psnr;
      }
    }
    emit(j);
  }
  return ok ? 0 : 1;
}

// ---- bench ----

struct BenchArgs {
  std::string spp_list = "1,4,16";
  std::string resolutions = "64,128";
  std::string tile_sizes = "16";
  std::string renderers = "stochastic,sorted";
  int runs = 10;
  int warmup = 1;
};

int cmd_bench(const Shared& o, const BenchArgs& a) {
  const Scene scene = load_scene(o.scene);
  const Camera base = load_views(o).front().camera;
  const RenderConfig cfg0 = render_config(o);
  std::ofstream file;
  const bool to_file = o.out.size() > 4 && o.out.substr(o.out.size() - 4) == ".csv";
  if (to_file) file.open(o.out);
  std::ostream& csv = to_file ? static_cast<std::ostream&>(file) : std::cout;
  csv << "renderer,spp,width,height,tile_size,median_ms,min_ms,runs,fragments_per_pixel\n";
  for (const auto& rname : split(a.renderers, ',')) {
    const RendererKind kind = parse_renderer(rname);
    for (const auto& r : split(a.resolutions, ',')) {
      const int res = std::stoi(r);
      const Camera cam = resized_camera(base, res, res * base.height / base.width);
      const double frags = mean_fragments_per_pixel(scene, cam, cfg0);
      for (const auto& t : split(a.tile_sizes, ',')) {
        for (const auto& s : split(a.spp_list, ',')) {
          RenderConfig cfg = cfg0;
          cfg.spp = std::stoi(s);
          cfg.tile_size = std::stoi(t);
          if (kind == RendererKind::kSorted && cfg.spp != std::stoi(split(a.spp_list, ',').front())) continue;
          const TimingStats ts = time_runs([&] { (void)render_with(kind, scene, cam, cfg); }, a.warmup, a.runs);
          csv << rname << ',' << (kind == RendererKind::kSorted ? 0 : cfg.spp) << ',' << cam.width << ','
              << cam.height << ',' << cfg.tile_size << ',' << ts.median_ms << ',' << ts.min_ms << ',' << ts.runs
              << ',' << frags << "\n";
          std::cerr << rname << " spp=" << cfg.spp << " " << cam.width << "x" << cam.height << " tile=" << cfg.tile_size
                    << ": " << ts.median_ms << " ms\n";
        }
      }
    }
  }
  return 0;
}

// ---- finetune ----

struct FinetuneArgs {
  std::string target_scene;
  int iterations = 1000;
  int spp_train = 128;
  std::string loss = "l1";
  double lr_position = 5e-5;
  double lr_log_scale = 5e-3;
  double lr_rotation = 1e-3;
  double lr_opacity = 0.05;
  double lr_sh = 2.5e-3;
  int checkpoint_every = 0;
};

int cmd_finetune(const Shared& o, const FinetuneArgs& a) {
  const Scene scene = load_scene(o.scene);
  const auto views = load_views(o);
  const RenderConfig rc = render_config(o);
  OptimConfig cfg;
  cfg.iterations = a.iterations;
  cfg.spp_train = a.spp_train;
  cfg.loss = parse_loss(a.loss);
  cfg.lr = {a.lr_position, a.lr_log_scale, a.lr_rotation, a.lr_opacity, a.lr_sh};
  cfg.validate();
  std::vector<TrainingView> data;
  if (!a.target_scene.empty()) {
    const Scene truth = load_scene(a.target_scene);
    for (const auto& v : views) data.push_back({v.camera, render_sorted_ab(truth, v.camera, rc)});
  } else {
    for (const auto& v : views) {
      if (v.image_path.empty()) throw std::runtime_error("camera '" + v.id + "' has no image_path (or pass --target-scene)");
      data.push_back({v.camera, read_image(v.image_path)});
    }
  }
  const fs::path dir = out_dir(o);
  auto view_psnr = [&](const Scene& s) {
    double sum = 0.0;
    for (const auto& d : data) sum += psnr(render_sorted_ab(s, d.camera, rc), d.target);
    return sum / data.size();
  };
  const double before = view_psnr(scene);
  const auto result = finetune(scene, data, cfg, rc, [&](int it, double loss, const Scene& s) {
    emit({{"iteration", it}, {"loss", loss}});
    if (a.checkpoint_every > 0 && (it + 1) % a.checkpoint_every == 0) {
      save_ply(s, dir / ("checkpoint_" + std::to_string(it + 1) + ".ply"));
    }
  });
  save_ply(result.scene, dir / "finetuned.ply");
  emit({{"summary", "finetune"}, {"psnr_before", before}, {"psnr_after", view_psnr(result.scene)},
        {"skipped_gradients", result.skipped_gradients}, {"file", (dir / "finetuned.ply").string()}});
  return 0;
}

// ---- gradcheck ----

struct GradcheckArgs {
  int passes = 200;
  double h = 1e-4;
  double tol_opacity = 0.02;
  double tol_dc = 0.02;
  double tol_position = 0.05;
  std::string loss = "l2";
};

int cmd_gradcheck(const Shared& o, const GradcheckArgs& a) {
  const Scene scene = load_scene(o.scene);
  const Camera cam = load_views(o).front().camera;
  RenderConfig cfg = render_config(o);
  cfg.early_stop_transmittance = 0.0;
  if (!o.cutoff_given) cfg.alpha_cutoff = 1e-6;
  if (cfg.depth_mode == DepthMode::kFreeFlight) throw std::invalid_argument("gradcheck needs --depth-mode mean or plane");
  const Loss loss = parse_loss(a.loss);
  Scene shifted = scene;
  for (auto& g : shifted.gaussians) g.opacity_logit += 0.5;
  const Image target = render_sorted_ab(shifted, cam, cfg);
  const GradientBuffer est = averaged_stochastic_gradient(scene, cam, cfg, target, loss, a.passes);
  const Image dl = loss_grad(render_sorted_ab(scene, cam, cfg), target, loss);
  const GradientBuffer exact = sorted_backward(scene, cam, cfg, dl);
  const std::vector<int> position{0, 1, 2}, opacity{10}, dc{11, 12, 13};
  const std::vector<int> slots{0, 1, 2, 10, 11, 12, 13};
  const auto rows = compare_with_finite_differences(scene, cam, cfg, target, loss, est, slots, a.h);
  std::vector<GradCheckRow> exact_rows = rows;
  for (auto& r : exact_rows) r.estimate = grad_component(exact.gaussians[r.gaussian], r.slot);
  for (const auto& r : rows) {
    emit({{"gaussian", r.gaussian}, {"slot", r.slot}, {"stochastic", r.estimate}, {"finite_difference", r.reference},
          {"sorted_analytic", grad_component(exact.gaussians[r.gaussian], r.slot)}});
  }
  bool ok = true;
  auto group = [&](const char* name, const std::vector<int>& s, double tol) {
    const double e = group_relative_error(rows, s);
    const double ee = group_relative_error(exact_rows, s);
    const bool pass = e <= tol;
    ok = ok && pass;
    emit({{"group", name}, {"relative_error", e}, {"sorted_relative_error", ee}, {"tolerance", tol},
          {"check", pass ? "pass" : "fail"}});
  };
  group("opacity", opacity, a.tol_opacity);
  group("sh_dc", dc, a.tol_dc);
  group("position", position, a.tol_position);
  const fs::path dir = out_dir(o);
  for (int axis = 0; axis < 2; ++axis) {
    const Image st = gradient_image(scene, cam, cfg, axis);
    const Image so = sorted_gradient_image(scene, cam, cfg, axis);
    double peak = 0.0;
    for (double v : so.data()) peak = std::max(peak, std::abs(v));
    const std::string suffix = axis == 0 ? "x" : "y";
    write_image(signed_visualization(st, peak > 0 ? peak : 1.0), dir / ("grad_" + suffix + "_stochastic.png"));
    write_image(signed_visualization(so, peak > 0 ? peak : 1.0), dir / ("grad_" + suffix + "_sorted.png"));
  }
  return ok ? 0 : 1;
}

// ---- popcheck ----

struct PopcheckArgs {
  double delta = 1e-3;
  std::string angles = "0";
  double max_ratio = 0.1;
  double continuity_eps = 1e-9;
  bool heatmaps = false;
};

int cmd_popcheck(const Shared& o, const PopcheckArgs& a) {
  const Scene scene = load_scene(o.scene);
  const Camera base = load_views(o).front().camera;
  RenderConfig cfg = render_config(o);
  if (!o.cutoff_given) cfg.alpha_cutoff = 1e-9;
  const bool crossing = scene_kind(o.scene) == "crossing" && o.cameras.empty();
  bool ok = true;
  for (const auto& s : split(a.angles, ',')) {
    const double center = std::stod(s);
    auto camera = [&](double d) {
      return crossing ? crossing_camera(base.width, base.height, center + d) : yawed(base, center + d);
    };
    const PopcheckResult r = popcheck(scene, camera, a.delta, cfg);
    const PopcheckResult half = popcheck(scene, camera, 0.5 * a.delta, cfg);
    // Smooth change halves with delta; a pop does not.
    auto pops = [&](double d, double d_half) { return d > a.continuity_eps && d < 1.5 * d_half; };
    const bool mean_pops = pops(r.mean_discontinuity, half.mean_discontinuity);
    const bool plane_pops = pops(r.plane_discontinuity, half.plane_discontinuity);
    const bool pass = !plane_pops && (!mean_pops || r.plane_discontinuity <= a.max_ratio * r.mean_discontinuity);
    ok = ok && pass;
    emit({{"angle", center}, {"delta", a.delta}, {"mean_discontinuity", r.mean_discontinuity},
          {"plane_discontinuity", r.plane_discontinuity}, {"mean_pops", mean_pops}, {"plane_pops", plane_pops},
          {"ratio", r.mean_discontinuity > 0 ? r.plane_discontinuity / r.mean_discontinuity : 0.0},
          {"check", pass ? "pass" : "fail"}});
    if (a.heatmaps) {
      const fs::path dir = out_dir(o);
      const double scale = std::max(r.mean_discontinuity, 1e-12);
      Image m = r.mean_diff, p = r.plane_diff;
      for (auto& v : m.data()) v /= scale;
      for (auto& v : p.data()) v /= scale;
      write_image(m, dir / ("pop_mean_" + s + ".png"));
      write_image(p, dir / ("pop_plane_" + s + ".png"));
    }
  }
  return ok ? 0 : 1;
}

// ---- taa ----

struct TaaArgs {
  int frames = 64;
  double tau = -1.0;
  double orbit_step = 0.0;
  int reference_spp = 1024;
  bool write_frames = false;
};

int cmd_taa(const Shared& o, const TaaArgs& a) {
  const Scene scene = load_scene(o.scene);
  const auto views = load_views(o);
  const RenderConfig cfg = render_config(o);
  std::vector<Camera> path;
  if (views.size() > 1) {
    for (const auto& v : views) path.push_back(v.camera);
  } else {
    for (int f = 0; f < a.frames; ++f) path.push_back(orbited(views.front().camera, a.orbit_step * f));
  }
  TaaRunOptions opt;
  opt.tau = a.tau >= 0.0 ? a.tau : default_tau(scene);
  opt.seed = o.seed;
  opt.reference_spp = a.reference_spp;
  fs::path dir;
  if (a.write_frames) {
    dir = out_dir(o);
    opt.on_frame = [&](int f, const Image& raw, const Image& acc) {
      write_image(raw, dir / ("raw_" + std::to_string(f) + ".png"));
      write_image(acc, dir / ("taa_" + std::to_string(f) + ".png"));
    };
  }
  const auto reports = run_taa(scene, path, cfg, opt);
  double raw = 0.0;
  for (const auto& r : reports) {
    raw += r.mse_raw / reports.size();
    emit({{"frame", r.frame}, {"mse_raw", r.mse_raw}, {"mse_taa", r.mse_taa}});
  }
  emit({{"summary", "taa"}, {"tau", opt.tau}, {"frames", reports.size()}, {"mean_mse_raw", raw},
        {"final_mse_taa", reports.back().mse_taa}, {"factor", raw / reports.back().mse_taa}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sorting-free stochastic renderer for 3D Gaussian splats"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key=value file; flags given on the command line win");
  Shared o;
  app.add_option("--scene", o.scene, "PLY file or random[:n[:seed]] | crossing | planar[:grid[:seed]] | overlap[:n[:seed]]")
      ->capture_default_str();
  app.add_option("--cameras", o.cameras, "camera JSON file")->check(CLI::ExistingFile);
  app.add_option("--width", o.width, "default camera width")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--height", o.height, "default camera height")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--spp", o.spp, "samples per pixel")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--depth-mode", o.depth_mode)
      ->check(CLI::IsMember({"mean", "plane", "freeflight"}))
      ->capture_default_str();
  app.add_option("--seed", o.seed)->capture_default_str();
  app.add_option("--background", o.background, "v or r,g,b in [0,1]")->capture_default_str();
  app.add_option("--tile-size", o.tile_size)->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--out", o.out, "output directory (bench: .csv file or stdout)")->capture_default_str();
  app.add_option("--renderer", o.renderer)->check(CLI::IsMember({"stochastic", "sorted"}))->capture_default_str();
  app.add_option("--threads", o.threads, "worker cap, 0 = all cores")
      ->envname("STOCHSPLAT_THREADS")
      ->check(CLI::NonNegativeNumber);
  auto* cutoff = app.add_option("--alpha-cutoff", o.alpha_cutoff, "gradcheck defaults to 1e-6, popcheck to 1e-9")->capture_default_str();

  RenderArgs ra;
  auto* render = app.add_subcommand("render", "render every camera");
  render->add_option("--reference", ra.reference, "sorted | images | directory of <id>.png");
  render->add_option("--format", ra.format)->check(CLI::IsMember({"png", "pfm"}));
  render->add_option("--min-psnr", ra.min_psnr, "fail below this PSNR against --reference");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "timing grid over spp x resolution x tile size");
  bench->add_option("--spp-list", ba.spp_list)->capture_default_str();
  bench->add_option("--resolutions", ba.resolutions, "widths")->capture_default_str();
  bench->add_option("--tile-sizes", ba.tile_sizes)->capture_default_str();
  bench->add_option("--renderers", ba.renderers)->capture_default_str();
  bench->add_option("--runs", ba.runs)->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--warmup", ba.warmup)->check(CLI::NonNegativeNumber)->capture_default_str();

  FinetuneArgs fa;
  auto* ft = app.add_subcommand("finetune", "path-replay fine-tuning");
  ft->add_option("--target-scene", fa.target_scene, "render targets from this scene instead of image_path");
  ft->add_option("--iterations", fa.iterations)->check(CLI::NonNegativeNumber)->capture_default_str();
  ft->add_option("--spp-train", fa.spp_train)->check(CLI::PositiveNumber)->capture_default_str();
  ft->add_option("--loss", fa.loss)->check(CLI::IsMember({"l1", "l2"}))->capture_default_str();
  ft->add_option("--lr-position", fa.lr_position)->capture_default_str();
  ft->add_option("--lr-log-scale", fa.lr_log_scale)->capture_default_str();
  ft->add_option("--lr-rotation", fa.lr_rotation)->capture_default_str();
  ft->add_option("--lr-opacity", fa.lr_opacity)->capture_default_str();
  ft->add_option("--lr-sh", fa.lr_sh)->capture_default_str();
  ft->add_option("--checkpoint-every", fa.checkpoint_every, "write a PLY every N iterations");

  GradcheckArgs ga;
  auto* gc = app.add_subcommand("gradcheck", "stochastic gradients vs finite differences");
  gc->add_option("--passes", ga.passes)->check(CLI::PositiveNumber)->capture_default_str();
  gc->add_option("--fd-step", ga.h)->capture_default_str();
  gc->add_option("--tol-opacity", ga.tol_opacity)->capture_default_str();
  gc->add_option("--tol-dc", ga.tol_dc)->capture_default_str();
  gc->add_option("--tol-position", ga.tol_position)->capture_default_str();
  gc->add_option("--loss", ga.loss)->check(CLI::IsMember({"l1", "l2"}))->capture_default_str();

  PopcheckArgs pa;
  auto* pc = app.add_subcommand("popcheck", "order-flip discontinuity, MEAN vs PLANE");
  pc->add_option("--delta", pa.delta, "half rotation between the two frames (rad)")->capture_default_str();
  pc->add_option("--angles", pa.angles, "yaw values to test")->capture_default_str();
  pc->add_option("--max-ratio", pa.max_ratio)->capture_default_str();
  pc->add_flag("--heatmaps", pa.heatmaps, "write difference images");

  TaaArgs ta;
  auto* taa = app.add_subcommand("taa", "1-spp sequence with and without accumulation");
  taa->add_option("--frames", ta.frames)->check(CLI::PositiveNumber)->capture_default_str();
  taa->add_option("--tau", ta.tau, "default: 0.5% of the scene diagonal");
  taa->add_option("--orbit-step", ta.orbit_step, "rotation about world y per frame (rad)")->capture_default_str();
  taa->add_option("--reference-spp", ta.reference_spp)->check(CLI::PositiveNumber)->capture_default_str();
  taa->add_flag("--write-frames", ta.write_frames);

  CLI11_PARSE(app, argc, argv);
  try {
    o.cutoff_given = cutoff->count() > 0;
    if (o.threads > 0) set_thread_limit(o.threads);
    (void)render_config(o);
    (void)parse_background(o.background);
    if (*render) return cmd_render(o, ra);
    if (*bench) return cmd_bench(o, ba);
    if (*ft) return cmd_finetune(o, fa);
    if (*gc) return cmd_gradcheck(o, ga);
    if (*pc) return cmd_popcheck(o, pa);
    if (*taa) return cmd_taa(o, ta);
  } catch (const std::exception& e) {
    std::cerr << "stochsplat: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
