#include "stochsplat/taa.hpp"

#include "stochsplat/parallel.hpp"

#include <cmath>
#include <stdexcept>

namespace stochsplat {

Reprojection reproject(const TaaState& state, const Camera& cam) {
  if (!state.initialized()) throw std::invalid_argument("reproject: TAA state is empty");
  const std::size_t n = static_cast<std::size_t>(cam.width) * cam.height;
  Reprojection r;
  r.color = Image(cam.width, cam.height);
  r.positions.assign(n, Vec3::Zero());
  r.count.assign(n, 0);
  r.valid.assign(n, 0);
  std::vector<double> zbuf(n, kInf);
  for (std::size_t i = 0; i < state.world_pos.size(); ++i) {
    if (state.accum_count[i] == 0) continue;
    const Vec3 p = cam.to_camera(state.world_pos[i]);
    if (!(p.z() > cam.near_plane)) continue;
    const double u = cam.fx * p.x() / p.z() + cam.cx;
    const double v = cam.fy * p.y() / p.z() + cam.cy;
    if (!(u >= 0.0 && v >= 0.0 && u < cam.width && v < cam.height)) continue;
    const std::size_t j = static_cast<std::size_t>(std::floor(v)) * cam.width + static_cast<std::size_t>(std::floor(u));
    if (!(p.z() < zbuf[j])) continue;
    zbuf[j] = p.z();
    r.color.set(j, state.accum_color.at(i));
    r.positions[j] = state.world_pos[i];
    r.count[j] = state.accum_count[i];
    r.valid[j] = 1;
  }
  return r;
}

void taa_accumulate(TaaState& state, const Image& frame, const std::vector<Vec3>& positions, const Camera& cam) {
  if (frame.width() != cam.width || frame.height() != cam.height) {
    throw std::invalid_argument("taa_accumulate: frame size differs from the camera");
  }
  if (positions.size() != frame.pixel_count()) throw std::invalid_argument("taa_accumulate: position count mismatch");
  if (!state.initialized()) {
    state.accum_color = frame;
    state.world_pos = positions;
    state.accum_count.assign(frame.pixel_count(), 1);
    state.camera = cam;
    return;
  }
  const Reprojection warped = reproject(state, cam);
  Image color(cam.width, cam.height);
  std::vector<std::uint32_t> count(frame.pixel_count());
  std::vector<Vec3> pos(frame.pixel_count());
  parallel_for(frame.pixel_count(), [&](std::size_t i) {
    const bool blend = warped.valid[i] && (warped.positions[i] - positions[i]).norm() < state.tau;
    if (!blend) {
      color.set(i, frame.at(i));
      pos[i] = positions[i];
      count[i] = 1;
      return;
    }
    const double n = warped.count[i];
    const double a = n / (n + 1.0), b = 1.0 / (n + 1.0);
    color.set(i, a * warped.color.at(i) + b * frame.at(i));
    pos[i] = a * warped.positions[i] + b * positions[i];
    count[i] = warped.count[i] + 1;
  });
  state.accum_color = std::move(color);
  state.accum_count = std::move(count);
  state.world_pos = std::move(pos);
  state.camera = cam;
}

double default_tau(const Scene& scene) {
  if (scene.empty()) return 0.0;
  Vec3 lo = scene.gaussians[0].position, hi = lo;
  for (const auto& g : scene.gaussians) {
    lo = lo.cwiseMin(g.position);
    hi = hi.cwiseMax(g.position);
  }
  return 0.005 * (hi - lo).norm();
}

}  // namespace stochsplat
