#include "stochsplat/experiments.hpp"

#include "stochsplat/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>
#include <string>

namespace stochsplat {

Image abs_diff_image(const Image& a, const Image& b) {
  if (!a.same_size(b)) throw std::invalid_argument("abs_diff_image: size mismatch");
  Image out(a.width(), a.height());
  for (std::size_t i = 0; i < a.pixel_count(); ++i) out.set(i, (a.at(i) - b.at(i)).abs());
  return out;
}

PopcheckResult popcheck(const Scene& scene, const std::function<Camera(double)>& camera, double delta,
                        const RenderConfig& base) {
  PopcheckResult r;
  r.delta = delta;
  RenderConfig cfg = base;
  cfg.early_stop_transmittance = 0.0;
  for (DepthMode mode : {DepthMode::kMean, DepthMode::kPlane}) {
    cfg.depth_mode = mode;
    const Image a = render_sorted_ab(scene, camera(-delta), cfg);
    const Image b = render_sorted_ab(scene, camera(delta), cfg);
    Image d = abs_diff_image(a, b);
    const double m = max_abs_diff(a, b);
    if (mode == DepthMode::kMean) {
      r.mean_discontinuity = m;
      r.mean_diff = std::move(d);
    } else {
      r.plane_discontinuity = m;
      r.plane_diff = std::move(d);
    }
  }
  return r;
}

std::vector<TaaFrameReport> run_taa(const Scene& scene, const std::vector<Camera>& path, const RenderConfig& cfg,
                                    const TaaRunOptions& options) {
  TaaState state;
  state.tau = options.tau;
  std::vector<TaaFrameReport> out;
  RenderConfig ref_cfg = cfg;
  ref_cfg.spp = options.reference_spp;
  ref_cfg.pass_seed = options.seed ^ 0x5bd1e9955bd1e995ull;
  Image reference;
  const Camera* reference_cam = nullptr;
  for (std::size_t f = 0; f < path.size(); ++f) {
    const Camera& cam = path[f];
    if (!reference_cam || cam.rotation != reference_cam->rotation || cam.translation != reference_cam->translation ||
        cam.fx != reference_cam->fx || cam.width != reference_cam->width) {
      reference = render_stochastic(scene, cam, ref_cfg);
      reference_cam = &cam;
    }
    RenderConfig fc = cfg;
    fc.pass_seed = options.seed + f;
    const StochasticFrame frame = render_stochastic_frame(scene, cam, fc, {.hit_positions = true});
    taa_accumulate(state, frame.color, frame.hit_positions, cam);
    TaaFrameReport rep;
    rep.frame = static_cast<int>(f);
    rep.mse_raw = mse(frame.color, reference);
    rep.mse_taa = mse(state.accum_color, reference);
    out.push_back(rep);
    if (options.on_frame) options.on_frame(static_cast<int>(f), frame.color, state.accum_color);
  }
  return out;
}

TimingStats time_runs(const std::function<void()>& fn, int warmup, int runs) {
  if (runs < 1) throw std::invalid_argument("runs must be >= 1");
  for (int i = 0; i < warmup; ++i) fn();
  std::vector<double> ms;
  for (int i = 0; i < runs; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::sort(ms.begin(), ms.end());
  TimingStats s;
  s.runs = runs;
  s.min_ms = ms.front();
  s.median_ms = runs % 2 ? ms[runs / 2] : 0.5 * (ms[runs / 2 - 1] + ms[runs / 2]);
  return s;
}

std::string_view to_string(RendererKind kind) { return kind == RendererKind::kSorted ? "sorted" : "stochastic"; }

RendererKind parse_renderer(std::string_view name) {
  if (name == "sorted") return RendererKind::kSorted;
  if (name == "stochastic") return RendererKind::kStochastic;
  throw std::invalid_argument("unknown renderer '" + std::string(name) + "'");
}

Image render_with(RendererKind kind, const Scene& scene, const Camera& cam, const RenderConfig& cfg) {
  return kind == RendererKind::kSorted ? render_sorted_ab(scene, cam, cfg) : render_stochastic(scene, cam, cfg);
}

Camera resized_camera(const Camera& cam, int width, int height) {
  Camera c = cam;
  const double sx = static_cast<double>(width) / cam.width;
  const double sy = static_cast<double>(height) / cam.height;
  c.width = width;
  c.height = height;
  c.fx *= sx;
  c.cx *= sx;
  c.fy *= sy;
  c.cy *= sy;
  return c;
}

double mean_fragments_per_pixel(const Scene& scene, const Camera& cam, const RenderConfig& cfg) {
  RenderConfig c = cfg;
  if (c.depth_mode == DepthMode::kFreeFlight) c.depth_mode = DepthMode::kMean;
  const FrameSetup frame = prepare_frame(scene, cam, c);
  double total = 0.0;
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) total += static_cast<double>(pixel_fragments(frame, cam, c, x, y).size());
  }
  return total / (static_cast<double>(cam.width) * cam.height);
}

}  // namespace stochsplat
