#pragma once

#include "stochsplat/scene.hpp"
#include "stochsplat/types.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace stochsplat {

/// Screen-space depth plane: depth(px, py) = z0 + gx (px - mx) + gy (py - my),
/// anchored at the splat's mean2d (mx, my).
struct PlaneDepth {
  double z0 = 0.0;
  double gx = 0.0;
  double gy = 0.0;
};

/// Eigen-decomposition of a symmetric 2x2 matrix, lambda1 >= lambda2.
struct Eigen2 {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  Vec2 v1 = Vec2::UnitX();
  Vec2 v2 = Vec2::UnitY();
};

Eigen2 eigen_symmetric2(const Mat2& m);

/// Oriented box: corners in order (+,+), (+,-), (-,-), (-,+) along (v1, v2).
struct OrientedBox {
  std::array<Vec2, 4> corners;
  Vec2 center = Vec2::Zero();
  Vec2 half_extent = Vec2::Zero();  // along v1, v2
  Vec2 axis1 = Vec2::UnitX();
  Vec2 axis2 = Vec2::UnitY();

  Vec2 aabb_min() const;
  Vec2 aabb_max() const;
  /// Closed-set overlap with an axis-aligned rectangle (separating axes).
  bool overlaps_rect(const Vec2& lo, const Vec2& hi) const;
  bool contains(const Vec2& p, double slack = 0.0) const;
};

struct ProjectionSettings {
  double alpha_cutoff = kDefaultAlphaCutoff;
  double dilation = kDefaultDilation;
  double max_condition = 1e8;
};

struct ProjectedSplat {
  std::uint32_t index = 0;        // position in Scene::gaussians
  std::uint32_t gaussian_id = 0;  // Gaussian3D::id
  Vec2 mean2d = Vec2::Zero();
  Mat2 cov2d = Mat2::Identity();
  Mat2 inv_cov2d = Mat2::Identity();
  Rgb view_color = Rgb::Zero();
  double opacity = 0.0;
  double mean_depth = 0.0;
  PlaneDepth plane;
  OrientedBox bbox;
  Eigen2 eigen;
  /// Largest Mahalanobis distance^2 at which opacity * exp(-q/2) >= cutoff.
  double max_mahalanobis2 = 0.0;

  Vec3 mean_camera = Vec3::Zero();
  Vec3 mean_world = Vec3::Zero();
  Mat3 inv_cov3d = Mat3::Identity();  // world space

  double mahalanobis2(double px, double py) const {
    const double dx = px - mean2d.x();
    const double dy = py - mean2d.y();
    return inv_cov2d(0, 0) * dx * dx + 2.0 * inv_cov2d(0, 1) * dx * dy + inv_cov2d(1, 1) * dy * dy;
  }

  double plane_depth(double px, double py) const {
    return plane.z0 + plane.gx * (px - mean2d.x()) + plane.gy * (py - mean2d.y());
  }
};

/// Projection Jacobian of (u, v) = (fx x/z + cx, fy y/z + cy) at camera point p.
Eigen::Matrix<double, 2, 3> projection_jacobian(const Camera& cam, const Vec3& p);

/// EWA projection of one activated primitive. Returns nullopt when the mean is
/// outside [near, far], the opacity is below the cutoff, the 2D covariance is
/// degenerate, or the bounding box misses the viewport.
std::optional<ProjectedSplat> project_gaussian(const Gaussian3D& g, const Camera& cam, int sh_degree,
                                               const ProjectionSettings& settings = {});

/// Linearized max-density plane n^T (x - mu) = 0 with n = Sigma^{-1} (mu - o),
/// expressed as camera-z over the image plane.
PlaneDepth compute_plane_depth(const Gaussian3D& g, const Camera& cam);

/// Box m +- t_O sqrt(lambda_1) v1 +- t_O sqrt(lambda_2) v2 with
/// t_O = sqrt(2 ln(alpha / cutoff)); nullopt when alpha <= cutoff.
std::optional<OrientedBox> oriented_bbox(const Mat2& cov2d, const Vec2& mean2d, double alpha,
                                         double cutoff = kDefaultAlphaCutoff);

/// Projects every primitive; output keeps scene order and drops culled ones.
std::vector<ProjectedSplat> project_scene(const Scene& scene, const Camera& cam,
                                          const ProjectionSettings& settings = {});

/// Per-tile splat lists in CSR layout.
struct TileBins {
  int tile_size = 16;
  int tiles_x = 0;
  int tiles_y = 0;
  std::vector<std::uint32_t> offsets;  // tiles_x * tiles_y + 1
  std::vector<std::uint32_t> entries;  // indices into the splat array

  int tile_count() const { return tiles_x * tiles_y; }
  std::span<const std::uint32_t> tile(int t) const {
    return {entries.data() + offsets[t], entries.data() + offsets[t + 1]};
  }
};

/// Bins splats into tiles whose rectangle overlaps the splat box. Within a
/// tile, entries follow `order` (default: ascending splat index).
TileBins cull_and_bin(std::span<const ProjectedSplat> splats, int width, int height, int tile_size,
                      std::span<const std::uint32_t> order = {});

}  // namespace stochsplat
