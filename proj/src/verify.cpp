#include "stochsplat/verify.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stochsplat {

double sorted_loss(const Scene& scene, const Camera& cam, const RenderConfig& cfg, const Image& target, Loss loss) {
  return loss_value(render_sorted_ab(scene, cam, cfg), target, loss);
}

double central_difference(const Scene& scene, const Camera& cam, const RenderConfig& cfg, const Image& target,
                          Loss loss, std::size_t gaussian, int slot, double h) {
  Scene s = scene;
  double& p = raw_parameter(s.gaussians.at(gaussian), slot);
  const double p0 = p;
  p = p0 + h;
  const double up = sorted_loss(s, cam, cfg, target, loss);
  p = p0 - h;
  const double down = sorted_loss(s, cam, cfg, target, loss);
  return (up - down) / (2.0 * h);
}

GradientBuffer averaged_stochastic_gradient(const Scene& scene, const Camera& cam, const RenderConfig& cfg,
                                            const Image& target, Loss loss, int passes,
                                            const BackwardOptions& options) {
  if (passes < 1) throw std::invalid_argument("passes must be >= 1");
  GradientBuffer sum(scene.size());
  RenderConfig rc = cfg;
  for (int k = 0; k < passes; ++k) {
    rc.pass_seed = cfg.pass_seed + static_cast<std::uint64_t>(k);
    const BackwardResult r = path_replay_backward(scene, cam, rc, target, loss, options);
    for (std::size_t i = 0; i < scene.size(); ++i) sum.gaussians[i] += r.grads.gaussians[i];
  }
  for (auto& g : sum.gaussians) {
    for (int slot = 0; slot < kParamsPerGaussian; ++slot) grad_component(g, slot) /= passes;
  }
  return sum;
}

double relative_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("relative_error: size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

std::vector<GradCheckRow> compare_with_finite_differences(const Scene& scene, const Camera& cam,
                                                          const RenderConfig& cfg, const Image& target, Loss loss,
                                                          const GradientBuffer& estimate,
                                                          std::span<const int> slots, double h) {
  std::vector<GradCheckRow> rows;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    for (int slot : slots) {
      rows.push_back({i, slot, grad_component(estimate.gaussians[i], slot),
                      central_difference(scene, cam, cfg, target, loss, i, slot, h)});
    }
  }
  return rows;
}

double group_relative_error(std::span<const GradCheckRow> rows, std::span<const int> slots) {
  std::vector<double> a, b;
  for (const auto& r : rows) {
    if (std::find(slots.begin(), slots.end(), r.slot) == slots.end()) continue;
    a.push_back(r.estimate);
    b.push_back(r.reference);
  }
  return relative_error(a, b);
}

}  // namespace stochsplat
