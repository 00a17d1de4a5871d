#pragma once

#include "stochsplat/backward.hpp"
#include "stochsplat/render.hpp"
#include "stochsplat/scene.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace stochsplat {

/// Loss of the sorted (exact) renderer.
double sorted_loss(const Scene& scene, const Camera& cam, const RenderConfig& cfg, const Image& target, Loss loss);

/// Central difference of sorted_loss in one raw parameter.
double central_difference(const Scene& scene, const Camera& cam, const RenderConfig& cfg, const Image& target,
                          Loss loss, std::size_t gaussian, int slot, double h);

/// Mean of path_replay_backward over `passes` seeds cfg.pass_seed + k.
GradientBuffer averaged_stochastic_gradient(const Scene& scene, const Camera& cam, const RenderConfig& cfg,
                                            const Image& target, Loss loss, int passes,
                                            const BackwardOptions& options = {});

/// ||a - b|| / ||b||.
double relative_error(std::span<const double> a, std::span<const double> b);

struct GradCheckRow {
  std::size_t gaussian = 0;
  int slot = 0;
  double estimate = 0.0;
  double reference = 0.0;
};

/// Pairs the estimated gradient with central differences for the given slots
/// of every primitive, using step `h`.
std::vector<GradCheckRow> compare_with_finite_differences(const Scene& scene, const Camera& cam,
                                                          const RenderConfig& cfg, const Image& target, Loss loss,
                                                          const GradientBuffer& estimate,
                                                          std::span<const int> slots, double h = 1e-3);

/// Relative error of the rows whose slot is in `slots`.
double group_relative_error(std::span<const GradCheckRow> rows, std::span<const int> slots);

}  // namespace stochsplat
