#pragma once

#include "stochsplat/scene.hpp"

#include <cstdint>

namespace stochsplat {

/// Camera at (0, 0, -distance) looking at the origin, +y world up.
Camera orbit_camera(int width, int height, double focal, double distance, double azimuth = 0.0,
                    double elevation = 0.0);

struct RandomSceneOptions {
  int count = 8;
  std::uint64_t seed = 1;
  /// Positions uniform in [-extent, extent]^3 around the origin.
  double extent = 0.5;
  double min_log_scale = -2.3;
  double max_log_scale = -1.2;
  double min_opacity = 0.2;
  double max_opacity = 0.9;
  int sh_degree = 0;
  /// Magnitude of random higher-order SH coefficients.
  double sh_rest_scale = 0.0;
};

Scene random_scene(const RandomSceneOptions& options);

/// `count` large, low-opacity primitives stacked in depth in front of a camera
/// from orbit_camera(..., distance = 4): every pixel of the central region is
/// covered by every primitive.
Scene overlap_scene(int count, std::uint64_t seed, double opacity = 0.05);

/// Two thin sheets crossing in an X when seen from above; their centers sit
/// at the same camera depth, so a rotation about the camera's vertical axis
/// flips their mean-depth order at angle zero. Use with crossing_camera.
Scene crossing_scene();
Camera crossing_camera(int width, int height, double yaw);

/// A fronto-parallel grid of colored primitives at world z = 0 in front of a
/// near-opaque backdrop at z = 0.02.
Scene planar_scene(int grid, std::uint64_t seed);

}  // namespace stochsplat
