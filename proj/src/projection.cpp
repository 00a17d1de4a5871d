#include "stochsplat/projection.hpp"

#include "stochsplat/parallel.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>

namespace stochsplat {

namespace {

PlaneDepth plane_from_camera_space(const Mat3& cov_cam, const Vec3& mean_cam, const Camera& cam) {
  const double z = mean_cam.z();
  const Vec3 n = cov_cam.ldlt().solve(mean_cam);
  const double k = n.dot(mean_cam);
  // Plane (nearly) contains the central ray: depth is not a function of the pixel.
  if (std::abs(k) < 1e-8 * n.norm() * mean_cam.norm()) return {z, 0.0, 0.0};
  const double s = z * z / k;
  return {z, -(n.x() / cam.fx) * s, -(n.y() / cam.fy) * s};
}

}  // namespace

Eigen2 eigen_symmetric2(const Mat2& m) {
  const double a = m(0, 0);
  const double b = 0.5 * (m(0, 1) + m(1, 0));
  const double c = m(1, 1);
  const double mid = 0.5 * (a + c);
  const double rad = std::hypot(0.5 * (a - c), b);
  Eigen2 e;
  e.lambda1 = mid + rad;
  e.lambda2 = mid - rad;
  if (std::abs(b) > 1e-300) {
    e.v1 = Vec2(e.lambda1 - c, b).normalized();
  } else {
    e.v1 = a >= c ? Vec2(1.0, 0.0) : Vec2(0.0, 1.0);
  }
  e.v2 = Vec2(-e.v1.y(), e.v1.x());
  return e;
}

Vec2 OrientedBox::aabb_min() const {
  Vec2 lo = corners[0];
  for (const auto& c : corners) lo = lo.cwiseMin(c);
  return lo;
}

Vec2 OrientedBox::aabb_max() const {
  Vec2 hi = corners[0];
  for (const auto& c : corners) hi = hi.cwiseMax(c);
  return hi;
}

bool OrientedBox::overlaps_rect(const Vec2& lo, const Vec2& hi) const {
  const Vec2 bmin = aabb_min();
  const Vec2 bmax = aabb_max();
  if (bmax.x() < lo.x() || bmin.x() > hi.x() || bmax.y() < lo.y() || bmin.y() > hi.y()) return false;
  const Vec2 rect_center = 0.5 * (lo + hi);
  const Vec2 rect_half = 0.5 * (hi - lo);
  const Vec2 d = rect_center - center;
  for (int k = 0; k < 2; ++k) {
    const Vec2& axis = k == 0 ? axis1 : axis2;
    const double rect_radius = rect_half.x() * std::abs(axis.x()) + rect_half.y() * std::abs(axis.y());
    if (std::abs(d.dot(axis)) > half_extent[k] + rect_radius) return false;
  }
  return true;
}

bool OrientedBox::contains(const Vec2& p, double slack) const {
  const Vec2 d = p - center;
  return std::abs(d.dot(axis1)) <= half_extent[0] + slack &&
         std::abs(d.dot(axis2)) <= half_extent[1] + slack;
}

Eigen::Matrix<double, 2, 3> projection_jacobian(const Camera& cam, const Vec3& p) {
  const double inv_z = 1.0 / p.z();
  Eigen::Matrix<double, 2, 3> j;
  j << cam.fx * inv_z, 0.0, -cam.fx * p.x() * inv_z * inv_z,  //
      0.0, cam.fy * inv_z, -cam.fy * p.y() * inv_z * inv_z;
  return j;
}

std::optional<OrientedBox> oriented_bbox(const Mat2& cov2d, const Vec2& mean2d, double alpha,
                                         double cutoff) {
  if (!(alpha > cutoff)) return std::nullopt;
  const Eigen2 e = eigen_symmetric2(cov2d);
  const double t_o = std::sqrt(2.0 * std::log(alpha / cutoff));
  OrientedBox box;
  box.center = mean2d;
  box.axis1 = e.v1;
  box.axis2 = e.v2;
  box.half_extent = {t_o * std::sqrt(std::max(e.lambda1, 0.0)), t_o * std::sqrt(std::max(e.lambda2, 0.0))};
  const Vec2 d1 = box.half_extent[0] * e.v1;
  const Vec2 d2 = box.half_extent[1] * e.v2;
  box.corners = {mean2d + d1 + d2, mean2d + d1 - d2, mean2d - d1 - d2, mean2d - d1 + d2};
  return box;
}

PlaneDepth compute_plane_depth(const Gaussian3D& g, const Camera& cam) {
  const Mat3 sigma = covariance_from(g.log_scale, g.rotation);
  const Mat3 w = cam.rotation;
  return plane_from_camera_space(w * sigma * w.transpose(), cam.to_camera(g.position), cam);
}

std::optional<ProjectedSplat> project_gaussian(const Gaussian3D& g, const Camera& cam, int sh_degree,
                                               const ProjectionSettings& settings) {
  const Vec3 p = cam.to_camera(g.position);
  if (!(p.z() >= cam.near_plane && p.z() <= cam.far_plane)) return std::nullopt;

  const double opacity = g.opacity();
  if (!(opacity > settings.alpha_cutoff)) return std::nullopt;

  const Mat3 sigma = covariance_from(g.log_scale, g.rotation);
  const Mat3& w = cam.rotation;
  const Eigen::Matrix<double, 2, 3> m = projection_jacobian(cam, p) * w;
  Mat2 cov2d = m * sigma * m.transpose();
  cov2d(0, 1) = cov2d(1, 0) = 0.5 * (cov2d(0, 1) + cov2d(1, 0));
  cov2d.diagonal().array() += settings.dilation;

  const Eigen2 eig = eigen_symmetric2(cov2d);
  if (!(eig.lambda2 > 0.0) || eig.lambda1 / eig.lambda2 > settings.max_condition) return std::nullopt;

  ProjectedSplat s;
  s.index = 0;
  s.gaussian_id = g.id;
  s.mean2d = {cam.fx * p.x() / p.z() + cam.cx, cam.fy * p.y() / p.z() + cam.cy};
  s.cov2d = cov2d;
  s.inv_cov2d = cov2d.inverse();
  s.eigen = eig;
  s.opacity = opacity;
  s.mean_depth = p.z();
  s.mean_camera = p;
  s.mean_world = g.position;

  auto box = oriented_bbox(cov2d, s.mean2d, opacity, settings.alpha_cutoff);
  if (!box || !box->overlaps_rect(Vec2::Zero(), Vec2(cam.width, cam.height))) return std::nullopt;
  s.bbox = *box;
  s.max_mahalanobis2 = 2.0 * std::log(opacity / settings.alpha_cutoff);

  const Vec3 view_dir = (g.position - cam.center()).normalized();
  s.view_color = eval_sh(g.sh, view_dir, sh_degree);
  s.plane = plane_from_camera_space(w * sigma * w.transpose(), p, cam);
  s.inv_cov3d = sigma.ldlt().solve(Mat3::Identity());
  return s;
}

std::vector<ProjectedSplat> project_scene(const Scene& scene, const Camera& cam,
                                          const ProjectionSettings& settings) {
  std::vector<std::optional<ProjectedSplat>> tmp(scene.size());
  parallel_for(scene.size(), [&](std::size_t i) {
    tmp[i] = project_gaussian(scene.gaussians[i], cam, scene.sh_degree, settings);
    if (tmp[i]) tmp[i]->index = static_cast<std::uint32_t>(i);
  });
  std::vector<ProjectedSplat> out;
  out.reserve(scene.size());
  for (auto& s : tmp) {
    if (s) out.push_back(std::move(*s));
  }
  return out;
}

TileBins cull_and_bin(std::span<const ProjectedSplat> splats, int width, int height, int tile_size,
                      std::span<const std::uint32_t> order) {
  TileBins bins;
  bins.tile_size = tile_size;
  bins.tiles_x = (width + tile_size - 1) / tile_size;
  bins.tiles_y = (height + tile_size - 1) / tile_size;
  const int tiles = bins.tile_count();
  bins.offsets.assign(tiles + 1, 0);

  auto visit = [&](const ProjectedSplat& s, auto&& emit) {
    const Vec2 lo = s.bbox.aabb_min();
    const Vec2 hi = s.bbox.aabb_max();
    const int tx0 = std::clamp(static_cast<int>(std::floor(lo.x() / tile_size)), 0, bins.tiles_x - 1);
    const int tx1 = std::clamp(static_cast<int>(std::floor(hi.x() / tile_size)), 0, bins.tiles_x - 1);
    const int ty0 = std::clamp(static_cast<int>(std::floor(lo.y() / tile_size)), 0, bins.tiles_y - 1);
    const int ty1 = std::clamp(static_cast<int>(std::floor(hi.y() / tile_size)), 0, bins.tiles_y - 1);
    for (int ty = ty0; ty <= ty1; ++ty) {
      for (int tx = tx0; tx <= tx1; ++tx) {
        const Vec2 rlo(tx * tile_size, ty * tile_size);
        const Vec2 rhi(std::min((tx + 1) * tile_size, width), std::min((ty + 1) * tile_size, height));
        if (s.bbox.overlaps_rect(rlo, rhi)) emit(ty * bins.tiles_x + tx);
      }
    }
  };

  const std::size_t n = order.empty() ? splats.size() : order.size();
  auto splat_at = [&](std::size_t k) -> std::uint32_t {
    return order.empty() ? static_cast<std::uint32_t>(k) : order[k];
  };

  for (std::size_t k = 0; k < n; ++k) {
    visit(splats[splat_at(k)], [&](int t) { ++bins.offsets[t + 1]; });
  }
  for (int t = 0; t < tiles; ++t) bins.offsets[t + 1] += bins.offsets[t];
  bins.entries.resize(bins.offsets[tiles]);
  std::vector<std::uint32_t> cursor(bins.offsets.begin(), bins.offsets.end() - 1);
  for (std::size_t k = 0; k < n; ++k) {
    const std::uint32_t idx = splat_at(k);
    visit(splats[idx], [&](int t) { bins.entries[cursor[t]++] = idx; });
  }
  return bins;
}

}  // namespace stochsplat
