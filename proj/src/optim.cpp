#include "stochsplat/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace stochsplat {

double LearningRates::of(ParamGroup g) const {
  switch (g) {
    case ParamGroup::kPosition: return position;
    case ParamGroup::kLogScale: return log_scale;
    case ParamGroup::kRotation: return rotation;
    case ParamGroup::kOpacity: return opacity;
    case ParamGroup::kSh: return sh;
  }
  return 0.0;
}

void OptimConfig::validate() const {
  if (iterations < 0) throw std::invalid_argument("iterations must be >= 0");
  if (spp_train < 1) throw std::invalid_argument("spp_train must be >= 1");
  for (double r : {lr.position, lr.log_scale, lr.rotation, lr.opacity, lr.sh}) {
    if (!(r >= 0.0)) throw std::invalid_argument("learning rates must be >= 0");
  }
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("Adam betas must lie in (0, 1)");
  }
  if (!(eps > 0.0)) throw std::invalid_argument("Adam eps must be positive");
}

void adam_update(double& param, double grad, AdamMoments& mo, long step, double lr, const OptimConfig& cfg) {
  mo.m = cfg.beta1 * mo.m + (1.0 - cfg.beta1) * grad;
  mo.v = cfg.beta2 * mo.v + (1.0 - cfg.beta2) * grad * grad;
  const double m_hat = mo.m / (1.0 - std::pow(cfg.beta1, static_cast<double>(step)));
  const double v_hat = mo.v / (1.0 - std::pow(cfg.beta2, static_cast<double>(step)));
  param -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
}

ParamGroup param_group(int slot) {
  if (slot < 3) return ParamGroup::kPosition;
  if (slot < 6) return ParamGroup::kLogScale;
  if (slot < 10) return ParamGroup::kRotation;
  if (slot < 11) return ParamGroup::kOpacity;
  return ParamGroup::kSh;
}

std::size_t adam_step(Scene& scene, const GradientBuffer& grads, AdamState& state, const OptimConfig& cfg) {
  if (grads.size() != scene.size()) throw std::invalid_argument("adam_step: gradient count differs from scene");
  state.moments.resize(scene.size() * kParamsPerGaussian);
  ++state.step;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    AdamMoments* mo = state.moments.data() + i * kParamsPerGaussian;
    Gaussian3D& g = scene.gaussians[i];
    const GaussianGrad& d = grads.gaussians[i];
    for (int slot = 0; slot < kParamsPerGaussian; ++slot) {
      const double gv = grad_component(d, slot);
      if (!std::isfinite(gv)) {
        ++skipped;
        continue;
      }
      adam_update(raw_parameter(g, slot), gv, mo[slot], state.step, cfg.lr.of(param_group(slot)), cfg);
    }
  }
  return skipped;
}

FinetuneResult finetune(const Scene& scene, const std::vector<TrainingView>& views, const OptimConfig& cfg,
                        const RenderConfig& render_cfg, const FinetuneCallback& callback) {
  cfg.validate();
  if (views.empty()) throw std::invalid_argument("finetune needs at least one view");
  FinetuneResult result;
  result.scene = scene;
  AdamState state;
  RenderConfig rc = render_cfg;
  rc.spp = cfg.spp_train;
  for (int it = 0; it < cfg.iterations; ++it) {
    const TrainingView& view = views[static_cast<std::size_t>(it) % views.size()];
    rc.pass_seed = render_cfg.pass_seed + static_cast<std::uint64_t>(it);
    const BackwardResult b = path_replay_backward(result.scene, view.camera, rc, view.target, cfg.loss);
    result.skipped_gradients += adam_step(result.scene, b.grads, state, cfg);
    result.losses.push_back(b.loss);
    if (callback) callback(it, b.loss, result.scene);
  }
  return result;
}

}  // namespace stochsplat
