#include "stochsplat/metrics.hpp"
#include "stochsplat/optim.hpp"
#include "stochsplat/scenes.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace stochsplat;

TEST(Adam, ZeroGradientKeepsParameter) {
  OptimConfig cfg;
  AdamMoments m;
  double p = 0.7;
  for (long step = 1; step <= 5; ++step) adam_update(p, 0.0, m, step, 0.1, cfg);
  EXPECT_EQ(p, 0.7);
}

TEST(Adam, ConstantGradientStepsByLearningRate) {
  OptimConfig cfg;
  AdamMoments m;
  double p = 0.0;
  for (long step = 1; step <= 200; ++step) {
    const double before = p;
    adam_update(p, -3.0, m, step, 0.01, cfg);
    EXPECT_NEAR(p - before, 0.01, 1e-12);
  }
}

TEST(Adam, TwoStepsByHand) {
  OptimConfig cfg;
  AdamMoments m;
  const double lr = 0.1;
  double p = 1.0;
  adam_update(p, 1.0, m, 1, lr, cfg);
  // m = 0.1, v = 1e-3, both bias-corrected to 1.
  EXPECT_NEAR(p, 1.0 - lr, 1e-14);
  adam_update(p, -1.0, m, 2, lr, cfg);
  // m = 0.09 - 0.1 = -0.01 -> m_hat = -0.01 / 0.19; v = 0.001999 -> v_hat = 1.
  EXPECT_NEAR(m.m, -0.01, 1e-15);
  EXPECT_NEAR(m.v, 0.001999, 1e-15);
  EXPECT_NEAR(p, 1.0 - lr + lr * 0.01 / 0.19, 1e-13);
}

TEST(Adam, GroupsAndDefaults) {
  EXPECT_EQ(param_group(0), ParamGroup::kPosition);
  EXPECT_EQ(param_group(5), ParamGroup::kLogScale);
  EXPECT_EQ(param_group(9), ParamGroup::kRotation);
  EXPECT_EQ(param_group(10), ParamGroup::kOpacity);
  EXPECT_EQ(param_group(58), ParamGroup::kSh);
  const OptimConfig cfg;
  EXPECT_DOUBLE_EQ(cfg.lr.position, 5e-5);
  EXPECT_EQ(cfg.spp_train, 128);
  EXPECT_EQ(cfg.iterations, 1000);
  EXPECT_EQ(cfg.loss, Loss::kL1);
  EXPECT_DOUBLE_EQ(cfg.lr.of(ParamGroup::kOpacity), 0.05);
}

TEST(Adam, ValidateRejectsBadSettings) {
  OptimConfig cfg;
  cfg.beta1 = 1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = OptimConfig{};
  cfg.lr.sh = -1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = OptimConfig{};
  cfg.spp_train = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(AdamStep, SkipsNonFiniteGradients) {
  RandomSceneOptions o;
  o.count = 2;
  Scene s = random_scene(o);
  const Scene before = s;
  GradientBuffer g(2);
  g.gaussians[0].opacity_logit = std::numeric_limits<double>::quiet_NaN();
  g.gaussians[1].position.x() = std::numeric_limits<double>::infinity();
  g.gaussians[1].sh[0][1] = 1.0;
  AdamState state;
  OptimConfig cfg;
  EXPECT_EQ(adam_step(s, g, state, cfg), 2u);
  EXPECT_EQ(s.gaussians[0].opacity_logit, before.gaussians[0].opacity_logit);
  EXPECT_EQ(s.gaussians[1].position.x(), before.gaussians[1].position.x());
  EXPECT_NEAR(s.gaussians[1].sh[0][1], before.gaussians[1].sh[0][1] - cfg.lr.sh, 1e-12);
  EXPECT_EQ(state.step, 1);
  EXPECT_THROW(adam_step(s, GradientBuffer(3), state, cfg), std::invalid_argument);
}

namespace {

std::vector<TrainingView> views_of(const Scene& truth, int count, int size, const RenderConfig& cfg) {
  std::vector<TrainingView> views;
  for (int i = 0; i < count; ++i) {
    const Camera cam = orbit_camera(size, size, size * 1.2, 2.5, 0.4 * i, 0.15 * (i % 2));
    views.push_back({cam, render_sorted_ab(truth, cam, cfg)});
  }
  return views;
}

bool same_parameters(const Scene& a, const Scene& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (int slot = 0; slot < kParamsPerGaussian; ++slot) {
      if (raw_parameter(a.gaussians[i], slot) != raw_parameter(b.gaussians[i], slot)) return false;
    }
  }
  return true;
}

}  // namespace

TEST(Finetune, ZeroIterationsIsIdentity) {
  RandomSceneOptions o;
  const Scene s = random_scene(o);
  RenderConfig rc;
  OptimConfig cfg;
  cfg.iterations = 0;
  const auto r = finetune(s, views_of(s, 1, 8, rc), cfg, rc);
  EXPECT_TRUE(same_parameters(r.scene, s));
  EXPECT_TRUE(r.losses.empty());
}

TEST(Finetune, ZeroLearningRatesIsIdentity) {
  RandomSceneOptions o;
  const Scene s = random_scene(o);
  RenderConfig rc;
  OptimConfig cfg;
  cfg.iterations = 3;
  cfg.spp_train = 2;
  cfg.lr = {0.0, 0.0, 0.0, 0.0, 0.0};
  RandomSceneOptions other = o;
  other.seed = 99;
  const auto r = finetune(s, views_of(random_scene(other), 2, 8, rc), cfg, rc);
  EXPECT_TRUE(same_parameters(r.scene, s));
  EXPECT_EQ(r.losses.size(), 3u);
}

TEST(Finetune, RecoversPerturbedOpacities) {
  RandomSceneOptions o;
  o.count = 10;
  o.seed = 5;
  const Scene truth = random_scene(o);
  Scene start = truth;
  for (std::size_t i = 0; i < start.size(); ++i) start.gaussians[i].opacity_logit += (i % 2 ? 0.6 : -0.6);
  RenderConfig rc;
  rc.background = Rgb::Constant(0.5);
  const auto views = views_of(truth, 4, 16, rc);
  const Camera held_out = orbit_camera(16, 16, 19.2, 2.5, 0.2, 0.1);
  const Image held_target = render_sorted_ab(truth, held_out, rc);
  OptimConfig cfg;
  cfg.iterations = 150;
  cfg.spp_train = 16;
  cfg.loss = Loss::kL2;
  int calls = 0;
  const auto r = finetune(start, views, cfg, rc, [&](int it, double, const Scene&) { EXPECT_EQ(it, calls++); });
  EXPECT_EQ(calls, 150);
  const double before = psnr(render_sorted_ab(start, held_out, rc), held_target);
  const double after = psnr(render_sorted_ab(r.scene, held_out, rc), held_target);
  EXPECT_GT(after, before + 3.0) << before << " -> " << after;
  EXPECT_EQ(r.skipped_gradients, 0u);
}

TEST(Finetune, RequiresViews) {
  EXPECT_THROW(finetune(Scene{}, {}, OptimConfig{}, RenderConfig{}), std::invalid_argument);
}
