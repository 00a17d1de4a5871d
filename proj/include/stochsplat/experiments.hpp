#pragma once

#include "stochsplat/image.hpp"
#include "stochsplat/render.hpp"
#include "stochsplat/scene.hpp"
#include "stochsplat/taa.hpp"

#include <functional>
#include <string>
#include <vector>

namespace stochsplat {

// ---- popping ----

struct PopcheckResult {
  double delta = 0.0;
  /// Max per-pixel absolute difference between the converged images of the
  /// two frames, per depth mode.
  double mean_discontinuity = 0.0;
  double plane_discontinuity = 0.0;
  Image mean_diff;
  Image plane_diff;
};

/// Renders the frame pair camera(-delta), camera(+delta) with the exact
/// per-mode expectation (sorted blending, no early stop).
PopcheckResult popcheck(const Scene& scene, const std::function<Camera(double)>& camera, double delta,
                        const RenderConfig& base);

Image abs_diff_image(const Image& a, const Image& b);

// ---- TAA ----

struct TaaFrameReport {
  int frame = 0;
  double mse_raw = 0.0;
  double mse_taa = 0.0;
};

struct TaaRunOptions {
  double tau = 0.0;
  int reference_spp = 1024;
  std::uint64_t seed = 0;
  /// Receives (frame, raw 1-spp image, accumulated image).
  std::function<void(int, const Image&, const Image&)> on_frame;
};

/// Renders every camera at cfg.spp with seed options.seed + frame, feeds the
/// TAA accumulator, and measures both sequences against a reference_spp
/// stochastic render of the same camera (seeded independently).
std::vector<TaaFrameReport> run_taa(const Scene& scene, const std::vector<Camera>& path, const RenderConfig& cfg,
                                    const TaaRunOptions& options);

// ---- timing ----

struct TimingStats {
  double median_ms = 0.0;
  double min_ms = 0.0;
  int runs = 0;
};

/// Median wall-clock of `runs` calls after `warmup` untimed calls.
TimingStats time_runs(const std::function<void()>& fn, int warmup, int runs);

enum class RendererKind { kStochastic, kSorted };
std::string_view to_string(RendererKind kind);
RendererKind parse_renderer(std::string_view name);

Image render_with(RendererKind kind, const Scene& scene, const Camera& cam, const RenderConfig& cfg);

/// Scales intrinsics so the same view is rendered at width x height.
Camera resized_camera(const Camera& cam, int width, int height);

/// Average number of fragments above the cutoff per pixel.
double mean_fragments_per_pixel(const Scene& scene, const Camera& cam, const RenderConfig& cfg);

}  // namespace stochsplat
