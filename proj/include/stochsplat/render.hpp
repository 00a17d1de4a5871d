#pragma once

#include "stochsplat/image.hpp"
#include "stochsplat/projection.hpp"
#include "stochsplat/rng.hpp"
#include "stochsplat/scene.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace stochsplat {

enum class DepthMode { kMean, kPlane, kFreeFlight };

std::string_view to_string(DepthMode mode);
/// Accepts "mean", "plane", "freeflight" (also "free_flight").
DepthMode parse_depth_mode(std::string_view name);

struct RenderConfig {
  int spp = 1;
  DepthMode depth_mode = DepthMode::kMean;
  std::uint64_t pass_seed = 0;
  Rgb background = Rgb::Zero();
  int tile_size = 16;
  /// Sorted renderer only: stop once transmittance drops below this value.
  double early_stop_transmittance = 1e-4;
  double alpha_cutoff = kDefaultAlphaCutoff;
  double dilation = kDefaultDilation;

  ProjectionSettings projection() const { return {alpha_cutoff, dilation, 1e8}; }
  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

/// Fragment opacity of a splat at a pixel position. Zero below the cutoff,
/// clamped to kMaxAlpha at the top.
struct FragmentAlpha {
  double alpha = 0.0;
  double falloff = 0.0;  // exp(-q/2)
  bool clamped = false;
};

inline FragmentAlpha fragment_alpha(const ProjectedSplat& s, double px, double py) {
  FragmentAlpha f;
  const double q = s.mahalanobis2(px, py);
  if (!(q <= s.max_mahalanobis2)) return f;
  f.falloff = std::exp(-0.5 * q);
  f.alpha = s.opacity * f.falloff;
  if (f.alpha > kMaxAlpha) {
    f.alpha = kMaxAlpha;
    f.clamped = true;
  }
  return f;
}

/// Everything derived from (scene, camera, config) before per-pixel work.
struct FrameSetup {
  std::vector<ProjectedSplat> splats;
  TileBins bins;
  /// Per-splat peak extinction, filled in free-flight mode only.
  std::vector<double> sigma_t;
};

/// Projects and bins. `depth_sorted` orders tile lists by (mean depth, id).
FrameSetup prepare_frame(const Scene& scene, const Camera& cam, const RenderConfig& cfg,
                         bool depth_sorted = false);

/// Sorted alpha blending (the reference). Supports kMean (global sort by mean
/// depth) and kPlane (per-pixel sort by plane depth).
Image render_sorted_ab(const Scene& scene, const Camera& cam, const RenderConfig& cfg);
Image render_sorted_ab(const FrameSetup& frame, const Camera& cam, const RenderConfig& cfg);

/// One stochastic sample of one pixel.
struct ReplaySample {
  std::int32_t splat = -1;  // index into FrameSetup::splats, -1 = background
  Rgb color = Rgb::Zero();
  double depth = kInf;
};

struct StochasticOptions {
  bool record_replay = false;
  bool hit_positions = false;
};

struct StochasticFrame {
  Image color;
  /// pixel-major, spp entries per pixel (when record_replay)
  std::vector<ReplaySample> replay;
  /// Mean world-space hit point per pixel; background samples hit the far plane.
  std::vector<Vec3> hit_positions;
};

Image render_stochastic(const Scene& scene, const Camera& cam, const RenderConfig& cfg);
StochasticFrame render_stochastic_frame(const Scene& scene, const Camera& cam, const RenderConfig& cfg,
                                        const StochasticOptions& options = {});
StochasticFrame render_stochastic_frame(const FrameSetup& frame, const Camera& cam,
                                        const RenderConfig& cfg, const StochasticOptions& options = {});

/// Depth of `splat` at pixel (x, y) under cfg.depth_mode. Free-flight depth is
/// sampled from `key` (stream forced to kFreeFlight) and may be +inf.
double resolve_depth(const ProjectedSplat& splat, double sigma_t, const Camera& cam, int x, int y,
                     const RenderConfig& cfg, SampleKey key);

struct PixelFragment {
  double alpha = 0.0;
  double depth = 0.0;
  std::uint32_t id = 0;
};

struct PmfResult {
  std::vector<double> probability;  // same order as the input
  double residual = 1.0;            // background
};

/// P(i) = alpha_i prod_{front k} (1 - alpha_k), fronts ordered by (depth, id).
PmfResult pmf_exact(std::span<const PixelFragment> fragments);

/// Fragments of one pixel (alpha above cutoff) with their non-random depth.
/// Not available for kFreeFlight.
std::vector<PixelFragment> pixel_fragments(const FrameSetup& frame, const Camera& cam, const RenderConfig& cfg,
                                           int x, int y, std::vector<std::uint32_t>* splat_indices = nullptr);

}  // namespace stochsplat
