#include "stochsplat/backward.hpp"

#include "pixel_sampler.hpp"
#include "stochsplat/parallel.hpp"

#include <tbb/enumerable_thread_specific.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace stochsplat {

std::string_view to_string(Loss loss) { return loss == Loss::kL1 ? "l1" : "l2"; }

Loss parse_loss(std::string_view name) {
  if (name == "l1" || name == "L1") return Loss::kL1;
  if (name == "l2" || name == "L2") return Loss::kL2;
  throw std::invalid_argument("unknown loss '" + std::string(name) + "'");
}

GaussianGrad& GaussianGrad::operator+=(const GaussianGrad& o) {
  position += o.position;
  log_scale += o.log_scale;
  rotation += o.rotation;
  opacity_logit += o.opacity_logit;
  for (int k = 0; k < kShCoeffCount; ++k) sh[k] += o.sh[k];
  return *this;
}

double& grad_component(GaussianGrad& g, int slot) {
  if (slot < 0 || slot >= kParamsPerGaussian) throw std::out_of_range("parameter slot out of range");
  if (slot < 3) return g.position[slot];
  if (slot < 6) return g.log_scale[slot - 3];
  if (slot < 10) return g.rotation[slot - 6];
  if (slot == 10) return g.opacity_logit;
  const int k = slot - 11;
  return g.sh[k / 3][k % 3];
}

double grad_component(const GaussianGrad& g, int slot) { return grad_component(const_cast<GaussianGrad&>(g), slot); }

bool GradientBuffer::all_finite() const {
  for (const auto& g : gaussians) {
    if (!g.position.allFinite() || !g.log_scale.allFinite() || !g.rotation.allFinite() ||
        !std::isfinite(g.opacity_logit)) {
      return false;
    }
    for (const auto& c : g.sh) {
      if (!c.allFinite()) return false;
    }
  }
  return true;
}

Image loss_grad(const Image& rendered, const Image& target, Loss loss) {
  if (!rendered.same_size(target)) throw std::invalid_argument("loss_grad: image sizes differ");
  Image out(rendered.width(), rendered.height());
  const auto& r = rendered.data();
  const auto& t = target.data();
  auto& o = out.data();
  const double inv_p = r.empty() ? 0.0 : 1.0 / static_cast<double>(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double d = r[i] - t[i];
    o[i] = loss == Loss::kL2 ? 2.0 * d * inv_p : static_cast<double>((d > 0.0) - (d < 0.0)) * inv_p;
  }
  return out;
}

double loss_value(const Image& rendered, const Image& target, Loss loss) {
  if (!rendered.same_size(target)) throw std::invalid_argument("loss_value: image sizes differ");
  const auto& r = rendered.data();
  const auto& t = target.data();
  if (r.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double d = r[i] - t[i];
    sum += loss == Loss::kL2 ? d * d : std::abs(d);
  }
  return sum / static_cast<double>(r.size());
}

namespace {

bool in_front(const PixelFragment& k, const PixelFragment& i) {
  return k.depth < i.depth || (k.depth == i.depth && k.id < i.id);
}

}  // namespace

void backprop_pixel(int selected, const Rgb& selected_color, std::span<const PixelFragment> fragments,
                    const Rgb& dl_dc, std::span<FragmentGrad> out) {
  if (out.size() != fragments.size()) throw std::invalid_argument("backprop_pixel: size mismatch");
  const double gc = (dl_dc * selected_color).sum();
  const PixelFragment* sel = nullptr;
  if (selected >= 0) {
    sel = &fragments[static_cast<std::size_t>(selected)];
    out[selected].color += dl_dc;
    if (sel->alpha > 0.0) out[selected].alpha += gc / sel->alpha;
  }
  for (std::size_t k = 0; k < fragments.size(); ++k) {
    if (static_cast<int>(k) == selected) continue;
    const PixelFragment& f = fragments[k];
    if (!(f.alpha > 0.0)) continue;
    if (sel && !in_front(f, *sel)) continue;
    out[k].alpha -= gc / (1.0 - f.alpha);
  }
}

void accumulate_screen_grad(const ProjectedSplat& s, double px, double py, const FragmentGrad& g,
                            ScreenGrad& out) {
  out.color += g.color;
  const FragmentAlpha fa = fragment_alpha(s, px, py);
  if (!(fa.alpha > 0.0) || fa.clamped || g.alpha == 0.0) return;
  const Vec2 d(px - s.mean2d.x(), py - s.mean2d.y());
  out.opacity += g.alpha * fa.falloff;
  out.mean2d += (g.alpha * fa.alpha) * (s.inv_cov2d * d);
  const double k = -0.5 * g.alpha * fa.alpha;
  out.conic += k * Vec3(d.x() * d.x(), 2.0 * d.x() * d.y(), d.y() * d.y());
}

namespace {

std::array<Mat3, 4> rotation_partials(const Vec4& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  std::array<Mat3, 4> d;
  d[0] << 0, -z, y, z, 0, -x, -y, x, 0;
  d[1] << 0, y, z, y, -2 * x, -w, z, w, -2 * x;
  d[2] << -2 * y, x, w, x, 0, z, -w, z, -2 * y;
  d[3] << -2 * z, -w, x, w, -2 * z, y, x, y, 0;
  for (auto& m : d) m *= 2.0;
  return d;
}

}  // namespace

GaussianGrad backward_projection(const Gaussian3D& g, const Camera& cam, int sh_degree, const ProjectedSplat& splat,
                                 const ScreenGrad& grad) {
  GaussianGrad out;
  const double o = g.opacity();
  out.opacity_logit = grad.opacity * o * (1.0 - o);

  // View-dependent color.
  const Vec3 v = g.position - cam.center();
  const double vn = v.norm();
  const Vec3 dir = v / vn;
  const Rgb raw = eval_sh_unclamped(g.sh, dir, sh_degree);
  Vec3 d_raw;
  for (int c = 0; c < 3; ++c) d_raw[c] = raw[c] < 0.0 ? 0.0 : grad.color[c];
  const auto basis = sh_basis(dir);
  const auto basis_grad = sh_basis_gradient(dir);
  const int n = sh_coeff_count(sh_degree);
  Vec3 d_dir = Vec3::Zero();
  for (int k = 0; k < n; ++k) {
    out.sh[k] = basis[k] * d_raw;
    d_dir += basis_grad[k] * g.sh[k].dot(d_raw);
  }
  Vec3 d_pos = (d_dir - dir * dir.dot(d_dir)) / vn;

  // Mean.
  const Vec3 p = cam.to_camera(g.position);
  const double z = p.z(), z2 = z * z, z3 = z2 * z;
  Vec3 d_pc(grad.mean2d.x() * cam.fx / z, grad.mean2d.y() * cam.fy / z,
            -(grad.mean2d.x() * cam.fx * p.x() + grad.mean2d.y() * cam.fy * p.y()) / z2);

  // Conic -> 2D covariance -> (J, Sigma).
  const Mat3& w = cam.rotation;
  const Mat3 sigma = covariance_from(g.log_scale, g.rotation);
  const Eigen::Matrix<double, 2, 3> jac = projection_jacobian(cam, p);
  const Eigen::Matrix<double, 2, 3> m = jac * w;
  const Mat2& a = splat.inv_cov2d;
  Mat2 ga;
  ga << grad.conic[0], 0.5 * grad.conic[1], 0.5 * grad.conic[1], grad.conic[2];
  const Mat2 gc = -a * ga * a;
  const Mat3 g_sigma = m.transpose() * gc * m;
  const Eigen::Matrix<double, 2, 3> g_m = 2.0 * gc * m * sigma;
  const Eigen::Matrix<double, 2, 3> g_j = g_m * w.transpose();
  d_pc.x() += g_j(0, 2) * (-cam.fx / z2);
  d_pc.y() += g_j(1, 2) * (-cam.fy / z2);
  d_pc.z() += g_j(0, 0) * (-cam.fx / z2) + g_j(0, 2) * (2.0 * cam.fx * p.x() / z3) + g_j(1, 1) * (-cam.fy / z2) +
              g_j(1, 2) * (2.0 * cam.fy * p.y() / z3);
  d_pos += w.transpose() * d_pc;
  out.position = d_pos;

  // Sigma = R diag(var) R^T.
  const double qn = g.rotation.norm();
  const Vec4 q = g.rotation / qn;
  const Mat3 r = rotation_from_quaternion(q);
  const Vec3 var = (2.0 * g.log_scale.array()).exp().matrix();
  const Mat3 rt_g_r = r.transpose() * g_sigma * r;
  for (int i = 0; i < 3; ++i) out.log_scale[i] = rt_g_r(i, i) * 2.0 * var[i];
  const Mat3 g_r = 2.0 * g_sigma * r * var.asDiagonal();
  const auto dr = rotation_partials(q);
  Vec4 dq;
  for (int i = 0; i < 4; ++i) dq[i] = g_r.cwiseProduct(dr[i]).sum();
  out.rotation = (dq - q * q.dot(dq)) / qn;
  return out;
}

namespace {

struct PixelScratchAll {
  detail::PixelScratch sampler;
  std::vector<PixelFragment> fragments;
  std::vector<FragmentGrad> grads;
  std::vector<std::size_t> order;
  std::vector<double> trans;
};

template <typename PixelFn>
void for_each_tile(const TileBins& bins, const Camera& cam, const PixelFn& fn) {
  parallel_for(static_cast<std::size_t>(bins.tile_count()), [&](std::size_t t) {
    const int tx = static_cast<int>(t) % bins.tiles_x;
    const int ty = static_cast<int>(t) / bins.tiles_x;
    const int x1 = std::min((tx + 1) * bins.tile_size, cam.width);
    const int y1 = std::min((ty + 1) * bins.tile_size, cam.height);
    fn(t, bins.tile(static_cast<int>(t)), tx * bins.tile_size, x1, ty * bins.tile_size, y1);
  });
}

std::vector<ScreenGrad> reduce_tiles(const FrameSetup& frame, const std::vector<std::vector<ScreenGrad>>& acc) {
  std::vector<ScreenGrad> screen(frame.splats.size());
  for (std::size_t t = 0; t < acc.size(); ++t) {
    const auto list = frame.bins.tile(static_cast<int>(t));
    for (std::size_t k = 0; k < acc[t].size(); ++k) screen[list[k]] += acc[t][k];
  }
  return screen;
}

// Fills ws.fragments / ws.grads for one pixel from stochastic samples.
std::size_t stochastic_pixel_grads(detail::PixelSampler& sampler, const RenderConfig& cfg,
                                   const Rgb& g, const ReplaySample* record, PixelScratchAll& ws) {
  const std::size_t n = sampler.size();
  ws.fragments.resize(n);
  ws.grads.assign(n, FragmentGrad{});
  for (std::size_t k = 0; k < n; ++k) {
    ws.fragments[k] = {sampler.alpha(k), sampler.depth(k), sampler.splat(k).gaussian_id};
  }
  std::size_t mismatches = 0;
  const Rgb gs = g / cfg.spp;
  for (int j = 0; j < cfg.spp; ++j) {
    const detail::Selection sel = sampler.sample(static_cast<std::uint32_t>(j));
    const Rgb c = sel.local >= 0 ? sampler.splat(sel.local).view_color : cfg.background;
    if (record) {
      const ReplaySample& r = record[j];
      const std::int32_t actual = sel.local >= 0 ? static_cast<std::int32_t>(sampler.splat_index(sel.local)) : -1;
      if (r.splat != actual || !(r.depth == sel.depth)) ++mismatches;
    }
    backprop_pixel(sel.local, c, ws.fragments, gs, ws.grads);
  }
  return mismatches;
}

// Analytic gradient of sorted blending at one pixel; ws.fragments / ws.grads
// index the tile list.
void sorted_pixel_grads(const FrameSetup& frame, const RenderConfig& cfg, std::span<const std::uint32_t> list,
                        double px, double py, const Rgb& g, PixelScratchAll& ws) {
  const std::size_t n = list.size();
  ws.fragments.resize(n);
  ws.grads.assign(n, FragmentGrad{});
  ws.order.clear();
  const bool plane = cfg.depth_mode == DepthMode::kPlane;
  for (std::size_t k = 0; k < n; ++k) {
    const ProjectedSplat& s = frame.splats[list[k]];
    const double a = fragment_alpha(s, px, py).alpha;
    ws.fragments[k] = {a, plane ? s.plane_depth(px, py) : s.mean_depth, s.gaussian_id};
    if (a > 0.0) ws.order.push_back(k);
  }
  std::sort(ws.order.begin(), ws.order.end(),
            [&](std::size_t a, std::size_t b) { return in_front(ws.fragments[a], ws.fragments[b]); });
  double trans = 1.0;
  std::size_t used = 0;
  std::vector<double>& t_before = ws.trans;
  t_before.resize(ws.order.size());
  for (std::size_t i = 0; i < ws.order.size(); ++i) {
    t_before[i] = trans;
    trans *= 1.0 - ws.fragments[ws.order[i]].alpha;
    used = i + 1;
    if (trans < cfg.early_stop_transmittance) break;
  }
  Rgb after = trans * cfg.background;
  for (std::size_t i = used; i-- > 0;) {
    const std::size_t k = ws.order[i];
    const double a = ws.fragments[k].alpha;
    const Rgb& c = frame.splats[list[k]].view_color;
    ws.grads[k].alpha = (g * c).sum() * t_before[i] - (g * after).sum() / (1.0 - a);
    ws.grads[k].color = g * (a * t_before[i]);
    after += c * (a * t_before[i]);
  }
}

void check_sortable(const RenderConfig& cfg) {
  if (cfg.depth_mode == DepthMode::kFreeFlight) {
    throw std::invalid_argument("analytic sorted gradient does not support free-flight depth");
  }
}

}  // namespace

ReplayResult replay_backward(const FrameSetup& frame, const Camera& cam, const RenderConfig& cfg,
                             std::span<const ReplaySample> replay, const Image& dl_dc) {
  if (dl_dc.width() != cam.width || dl_dc.height() != cam.height) {
    throw std::invalid_argument("replay_backward: dL/dC size differs from the camera");
  }
  const std::size_t spp = static_cast<std::size_t>(cfg.spp);
  if (replay.size() != dl_dc.pixel_count() * spp) {
    throw std::invalid_argument("replay_backward: record has the wrong number of samples");
  }
  std::vector<std::vector<ScreenGrad>> acc(static_cast<std::size_t>(frame.bins.tile_count()));
  std::vector<std::size_t> tile_mismatch(acc.size(), 0);
  tbb::enumerable_thread_specific<PixelScratchAll> scratch;
  for_each_tile(frame.bins, cam, [&](std::size_t t, std::span<const std::uint32_t> list, int x0, int x1, int y0,
                                     int y1) {
    auto& ws = scratch.local();
    auto& tile_acc = acc[t];
    tile_acc.assign(list.size(), ScreenGrad{});
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        const std::size_t pixel = dl_dc.index(x, y);
        const Rgb g = dl_dc.at(pixel);
        if ((g == 0.0).all()) continue;
        detail::PixelSampler sampler(frame, cam, cfg, list, x, y, ws.sampler);
        tile_mismatch[t] += stochastic_pixel_grads(sampler, cfg, g, replay.data() + pixel * spp, ws);
        for (std::size_t k = 0; k < list.size(); ++k) {
          const FragmentGrad& fg = ws.grads[k];
          if (fg.alpha == 0.0 && (fg.color == 0.0).all()) continue;
          accumulate_screen_grad(frame.splats[list[k]], x + 0.5, y + 0.5, fg, tile_acc[k]);
        }
      }
    }
  });
  ReplayResult result;
  result.screen = reduce_tiles(frame, acc);
  for (std::size_t m : tile_mismatch) result.mismatches += m;
  return result;
}

GradientBuffer chain_to_parameters(const Scene& scene, const Camera& cam, const FrameSetup& frame,
                                   std::span<const ScreenGrad> screen) {
  if (screen.size() != frame.splats.size()) throw std::invalid_argument("chain_to_parameters: size mismatch");
  GradientBuffer out(scene.size());
  parallel_for(frame.splats.size(), [&](std::size_t i) {
    const ProjectedSplat& s = frame.splats[i];
    const ScreenGrad& g = screen[i];
    if (g.opacity == 0.0 && g.mean2d.isZero(0.0) && g.conic.isZero(0.0) && (g.color == 0.0).all()) return;
    out.gaussians[s.index] = backward_projection(scene.gaussians[s.index], cam, scene.sh_degree, s, g);
  });
  return out;
}

BackwardResult path_replay_backward(const Scene& scene, const Camera& cam, const RenderConfig& cfg,
                                    const Image& target, Loss loss, const BackwardOptions& options) {
  if (cfg.depth_mode == DepthMode::kFreeFlight) {
    throw std::invalid_argument("backward pass does not support free-flight depth");
  }
  if (target.width() != cam.width || target.height() != cam.height) {
    throw std::invalid_argument("target size differs from the camera");
  }
  const FrameSetup frame = prepare_frame(scene, cam, cfg);
  StochasticFrame recorded = render_stochastic_frame(frame, cam, cfg, {.record_replay = true});
  BackwardResult result;
  if (options.decorrelate) {
    RenderConfig first = cfg;
    first.pass_seed = cfg.pass_seed ^ kDecorrelationSalt;
    result.loss_image = render_stochastic_frame(frame, cam, first).color;
  } else {
    result.loss_image = recorded.color;
  }
  result.loss = loss_value(result.loss_image, target, loss);
  const Image dl_dc = loss_grad(result.loss_image, target, loss);
  const ReplayResult replay = replay_backward(frame, cam, cfg, recorded.replay, dl_dc);
  result.replay_mismatches = replay.mismatches;
  result.grads = chain_to_parameters(scene, cam, frame, replay.screen);
  return result;
}

GradientBuffer sorted_backward(const Scene& scene, const Camera& cam, const RenderConfig& cfg, const Image& dl_dc) {
  check_sortable(cfg);
  if (dl_dc.width() != cam.width || dl_dc.height() != cam.height) {
    throw std::invalid_argument("sorted_backward: dL/dC size differs from the camera");
  }
  const FrameSetup frame = prepare_frame(scene, cam, cfg);
  std::vector<std::vector<ScreenGrad>> acc(static_cast<std::size_t>(frame.bins.tile_count()));
  tbb::enumerable_thread_specific<PixelScratchAll> scratch;
  for_each_tile(frame.bins, cam, [&](std::size_t t, std::span<const std::uint32_t> list, int x0, int x1, int y0,
                                     int y1) {
    auto& ws = scratch.local();
    auto& tile_acc = acc[t];
    tile_acc.assign(list.size(), ScreenGrad{});
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        const Rgb g = dl_dc.at(x, y);
        if ((g == 0.0).all()) continue;
        sorted_pixel_grads(frame, cfg, list, x + 0.5, y + 0.5, g, ws);
        for (std::size_t k = 0; k < list.size(); ++k) {
          const FragmentGrad& fg = ws.grads[k];
          if (fg.alpha == 0.0 && (fg.color == 0.0).all()) continue;
          accumulate_screen_grad(frame.splats[list[k]], x + 0.5, y + 0.5, fg, tile_acc[k]);
        }
      }
    }
  });
  return chain_to_parameters(scene, cam, frame, reduce_tiles(frame, acc));
}

namespace {

// d(position[axis]) per unit screen-space partial, for each splat.
struct PositionSensitivity {
  Vec2 mean2d;
  Vec3 conic;
  Rgb color;
  double opacity;
};

std::vector<PositionSensitivity> position_sensitivities(const Scene& scene, const Camera& cam,
                                                        const FrameSetup& frame, int axis) {
  std::vector<PositionSensitivity> out(frame.splats.size());
  parallel_for(frame.splats.size(), [&](std::size_t i) {
    const ProjectedSplat& s = frame.splats[i];
    const Gaussian3D& g = scene.gaussians[s.index];
    auto probe = [&](auto&& set) {
      ScreenGrad e;
      set(e);
      return backward_projection(g, cam, scene.sh_degree, s, e).position[axis];
    };
    PositionSensitivity& p = out[i];
    for (int c = 0; c < 2; ++c) p.mean2d[c] = probe([&](ScreenGrad& e) { e.mean2d[c] = 1.0; });
    for (int c = 0; c < 3; ++c) p.conic[c] = probe([&](ScreenGrad& e) { e.conic[c] = 1.0; });
    for (int c = 0; c < 3; ++c) p.color[c] = probe([&](ScreenGrad& e) { e.color[c] = 1.0; });
    p.opacity = probe([&](ScreenGrad& e) { e.opacity = 1.0; });
  });
  return out;
}

template <typename PixelGrads>
Image gradient_image_impl(const Scene& scene, const Camera& cam, const RenderConfig& cfg, int axis,
                          const PixelGrads& pixel_grads) {
  if (axis < 0 || axis > 2) throw std::invalid_argument("axis must be 0, 1 or 2");
  const FrameSetup frame = prepare_frame(scene, cam, cfg);
  const auto sens = position_sensitivities(scene, cam, frame, axis);
  Image img(cam.width, cam.height);
  tbb::enumerable_thread_specific<PixelScratchAll> scratch;
  for_each_tile(frame.bins, cam, [&](std::size_t, std::span<const std::uint32_t> list, int x0, int x1, int y0,
                                     int y1) {
    auto& ws = scratch.local();
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        pixel_grads(frame, list, x, y, ws);
        double value = 0.0;
        for (std::size_t k = 0; k < list.size(); ++k) {
          const FragmentGrad& fg = ws.grads[k];
          if (fg.alpha == 0.0 && (fg.color == 0.0).all()) continue;
          ScreenGrad sg;
          accumulate_screen_grad(frame.splats[list[k]], x + 0.5, y + 0.5, fg, sg);
          const PositionSensitivity& p = sens[list[k]];
          value += sg.mean2d.dot(p.mean2d) + sg.conic.dot(p.conic) + (sg.color * p.color).sum() +
                   sg.opacity * p.opacity;
        }
        img.set(x, y, Rgb::Constant(value));
      }
    }
  });
  return img;
}

}  // namespace

Image gradient_image(const Scene& scene, const Camera& cam, const RenderConfig& cfg, int axis) {
  check_sortable(cfg);
  return gradient_image_impl(scene, cam, cfg, axis,
                             [&](const FrameSetup& frame, std::span<const std::uint32_t> list, int x, int y,
                                 PixelScratchAll& ws) {
                               detail::PixelSampler sampler(frame, cam, cfg, list, x, y, ws.sampler);
                               stochastic_pixel_grads(sampler, cfg, Rgb::Ones(), nullptr, ws);
                             });
}

Image sorted_gradient_image(const Scene& scene, const Camera& cam, const RenderConfig& cfg, int axis) {
  check_sortable(cfg);
  return gradient_image_impl(scene, cam, cfg, axis,
                             [&](const FrameSetup& frame, std::span<const std::uint32_t> list, int x, int y,
                                 PixelScratchAll& ws) {
                               sorted_pixel_grads(frame, cfg, list, x + 0.5, y + 0.5, Rgb::Ones(), ws);
                             });
}

Image signed_visualization(const Image& values, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("scale must be positive");
  Image out(values.width(), values.height());
  for (std::size_t i = 0; i < values.pixel_count(); ++i) {
    const double v = values.channel(i, 0) / scale;
    out.set(i, Rgb(std::clamp(v, 0.0, 1.0), 0.0, std::clamp(-v, 0.0, 1.0)));
  }
  return out;
}

}  // namespace stochsplat
