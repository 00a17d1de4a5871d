#pragma once

#include "stochsplat/image.hpp"
#include "stochsplat/render.hpp"
#include "stochsplat/scene.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace stochsplat {

enum class Loss { kL1, kL2 };

std::string_view to_string(Loss loss);
Loss parse_loss(std::string_view name);

/// Partials of the loss with respect to one primitive's raw parameters.
struct GaussianGrad {
  Vec3 position = Vec3::Zero();
  Vec3 log_scale = Vec3::Zero();
  Vec4 rotation = Vec4::Zero();
  double opacity_logit = 0.0;
  std::array<Vec3, kShCoeffCount> sh;

  GaussianGrad() { sh.fill(Vec3::Zero()); }
  GaussianGrad& operator+=(const GaussianGrad& o);
};

/// Component matching raw_parameter(g, slot).
double grad_component(const GaussianGrad& g, int slot);
double& grad_component(GaussianGrad& g, int slot);

/// Indexed like Scene::gaussians.
struct GradientBuffer {
  std::vector<GaussianGrad> gaussians;

  explicit GradientBuffer(std::size_t n = 0) : gaussians(n) {}
  std::size_t size() const { return gaussians.size(); }
  bool all_finite() const;
};

/// Partials with respect to a splat's screen-space quantities.
/// conic = (A00, A01, A11) of the inverse 2D covariance.
struct ScreenGrad {
  Vec2 mean2d = Vec2::Zero();
  Vec3 conic = Vec3::Zero();
  Rgb color = Rgb::Zero();
  double opacity = 0.0;

  ScreenGrad& operator+=(const ScreenGrad& o) {
    mean2d += o.mean2d;
    conic += o.conic;
    color += o.color;
    opacity += o.opacity;
    return *this;
  }
};

/// Per-pixel dL/dC. L2: 2 (r - t) / P; L1: sign(r - t) / P; P = pixels * 3.
Image loss_grad(const Image& rendered, const Image& target, Loss loss);
double loss_value(const Image& rendered, const Image& target, Loss loss);

/// Partials of one pixel sample with respect to each fragment's opacity and color.
struct FragmentGrad {
  double alpha = 0.0;
  Rgb color = Rgb::Zero();
};

/// Detached estimator for one pixel sample. `selected` indexes `fragments`,
/// or is -1 when the background was kept, in which case `selected_color` is
/// the background color. Adds into `out` (same length as `fragments`):
///   selected i:  dL/dc_i += dL/dC,  dL/dalpha_i += dL/dC . c_i / alpha_i
///   k in front:  dL/dalpha_k += -dL/dC . c_i / (1 - alpha_k)
/// Fragments behind the selection receive nothing.
void backprop_pixel(int selected, const Rgb& selected_color, std::span<const PixelFragment> fragments,
                    const Rgb& dl_dc, std::span<FragmentGrad> out);

/// Screen-space partials of fragment (alpha, color) at pixel position (px, py).
void accumulate_screen_grad(const ProjectedSplat& s, double px, double py, const FragmentGrad& g,
                            ScreenGrad& out);

/// Chains screen-space partials through the EWA projection, the activations
/// and the SH evaluation back to the primitive's raw parameters.
/// `splat` must be the forward projection of `g` under `cam`.
GaussianGrad backward_projection(const Gaussian3D& g, const Camera& cam, int sh_degree, const ProjectedSplat& splat,
                                 const ScreenGrad& grad);

/// Reverse pass over a recorded stochastic frame. Re-draws every sample with
/// the same seed, checks it against `replay`, and accumulates the detached
/// gradient for the per-pixel dL/dC. Deterministic for any thread count.
struct ReplayResult {
  std::vector<ScreenGrad> screen;  // per splat of `frame`
  std::size_t mismatches = 0;      // samples whose replay differed from the record
};
ReplayResult replay_backward(const FrameSetup& frame, const Camera& cam, const RenderConfig& cfg,
                             std::span<const ReplaySample> replay, const Image& dl_dc);

GradientBuffer chain_to_parameters(const Scene& scene, const Camera& cam, const FrameSetup& frame,
                                   std::span<const ScreenGrad> screen);

struct BackwardOptions {
  /// Pass 1 uses a different seed than passes 2-3 (unbiased for L2).
  bool decorrelate = true;
};

struct BackwardResult {
  GradientBuffer grads;
  Image loss_image;      // pass 1 render
  double loss = 0.0;     // loss of the pass 1 render
  std::size_t replay_mismatches = 0;
};

/// Three passes: (1) render with a decorrelated seed and evaluate dL/dC,
/// (2) render with cfg.pass_seed recording each sample's selection,
/// (3) replay pass 2 and backpropagate.
BackwardResult path_replay_backward(const Scene& scene, const Camera& cam, const RenderConfig& cfg,
                                    const Image& target, Loss loss, const BackwardOptions& options = {});

/// Exact gradient of sorted alpha blending (no sampling) for a given dL/dC.
GradientBuffer sorted_backward(const Scene& scene, const Camera& cam, const RenderConfig& cfg, const Image& dl_dc);

/// Per pixel: sum over primitives of d(pixel)/d(position[axis]) for a unit L1
/// loss on that pixel alone (dL/dC = 1 in every channel). Values are stored in
/// all three channels.
Image gradient_image(const Scene& scene, const Camera& cam, const RenderConfig& cfg, int axis);
Image sorted_gradient_image(const Scene& scene, const Camera& cam, const RenderConfig& cfg, int axis);

/// Red for positive, blue for negative, scaled so |v| = scale maps to 1.
Image signed_visualization(const Image& values, double scale);

}  // namespace stochsplat
