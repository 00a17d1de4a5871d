#pragma once

#include "stochsplat/image.hpp"
#include "stochsplat/scene.hpp"

#include <cstdint>
#include <vector>

namespace stochsplat {

/// Running per-pixel mean of color and world-space hit point.
struct TaaState {
  Image accum_color;
  std::vector<std::uint32_t> accum_count;
  std::vector<Vec3> world_pos;
  Camera camera;
  /// Blend only where the warped and new hit points are closer than tau.
  double tau = 0.0;

  bool initialized() const { return accum_color.pixel_count() > 0; }
};

struct Reprojection {
  Image color;
  std::vector<Vec3> positions;
  std::vector<std::uint32_t> count;
  std::vector<std::uint8_t> valid;
};

/// Forward-splats every stored hit point into the nearest pixel of `cam`,
/// keeping the nearest point per pixel. Pixels that receive nothing, and
/// points behind the near plane, are invalid.
Reprojection reproject(const TaaState& state, const Camera& cam);

/// Blends `frame` into the state: c = N/(N+1) mu + 1/(N+1) c_new (same for the
/// hit point) where the reprojected history is valid and within tau,
/// otherwise the pixel restarts with N = 1.
void taa_accumulate(TaaState& state, const Image& frame, const std::vector<Vec3>& positions, const Camera& cam);

/// 0.5% of the diagonal of the primitive positions' bounding box.
double default_tau(const Scene& scene);

}  // namespace stochsplat
