#pragma once

#include "stochsplat/backward.hpp"
#include "stochsplat/image.hpp"
#include "stochsplat/render.hpp"
#include "stochsplat/scene.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace stochsplat {

enum class ParamGroup { kPosition, kLogScale, kRotation, kOpacity, kSh };

struct LearningRates {
  double position = 5e-5;
  double log_scale = 5e-3;
  double rotation = 1e-3;
  double opacity = 0.05;
  double sh = 2.5e-3;

  double of(ParamGroup g) const;
};

struct OptimConfig {
  int iterations = 1000;
  int spp_train = 128;
  LearningRates lr;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-15;
  Loss loss = Loss::kL1;

  void validate() const;
};

struct AdamMoments {
  double m = 0.0;
  double v = 0.0;
};

/// One bias-corrected Adam update of a scalar; `step` counts from 1.
void adam_update(double& param, double grad, AdamMoments& moments, long step, double lr, const OptimConfig& cfg);

/// Group of a raw_parameter slot.
ParamGroup param_group(int slot);

struct AdamState {
  std::vector<AdamMoments> moments;  // kParamsPerGaussian per primitive
  long step = 0;
};

/// Returns the number of scalar gradients skipped for being non-finite.
std::size_t adam_step(Scene& scene, const GradientBuffer& grads, AdamState& state, const OptimConfig& cfg);

struct TrainingView {
  Camera camera;
  Image target;
};

struct FinetuneResult {
  Scene scene;
  std::vector<double> losses;  // per iteration
  std::size_t skipped_gradients = 0;
};

/// Called after every iteration with (iteration, loss, current scene).
using FinetuneCallback = std::function<void(int, double, const Scene&)>;

/// Path-replay fine-tuning. Views are visited round-robin; iteration i renders
/// with seed render_cfg.pass_seed + i and cfg.spp_train samples per pixel.
FinetuneResult finetune(const Scene& scene, const std::vector<TrainingView>& views, const OptimConfig& cfg,
                        const RenderConfig& render_cfg, const FinetuneCallback& callback = {});

}  // namespace stochsplat
