#pragma once

#include "stochsplat/types.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace stochsplat {

inline constexpr int kMaxShDegree = 3;
inline constexpr int kShCoeffCount = 16;

constexpr int sh_coeff_count(int degree) { return (degree + 1) * (degree + 1); }

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

/// One Gaussian primitive in its raw (pre-activation) parameterization, as
/// stored by the splat PLY format.
///   - log_scale:     log of per-axis standard deviation
///   - rotation:      quaternion (w, x, y, z), normalized on activation
///   - opacity_logit: opacity before the logistic sigmoid
///   - sh:            16 RGB coefficient triplets, sh[0] is the DC term
///
/// `id` is the primitive's identity. Random streams and depth tie-breaks are
/// keyed on it, so it must travel with the primitive when the list is
/// reordered.
struct Gaussian3D {
  Vec3 position = Vec3::Zero();
  Vec3 log_scale = Vec3::Zero();
  Vec4 rotation = Vec4(1.0, 0.0, 0.0, 0.0);
  double opacity_logit = 0.0;
  std::array<Vec3, kShCoeffCount> sh{};
  std::uint32_t id = 0;

  Gaussian3D() { sh.fill(Vec3::Zero()); }

  double opacity() const { return sigmoid(opacity_logit); }
  Vec3 scale() const { return log_scale.array().exp().matrix(); }
  Vec4 unit_rotation() const { return rotation.normalized(); }
};

/// Raw parameters flattened in a fixed order: position(3), log_scale(3),
/// rotation(4), opacity_logit(1), sh(16 x 3, coefficient-major).
inline constexpr int kParamsPerGaussian = 3 + 3 + 4 + 1 + 3 * kShCoeffCount;
double& raw_parameter(Gaussian3D& g, int slot);
double raw_parameter(const Gaussian3D& g, int slot);
/// e.g. "position.x", "opacity_logit", "sh[0].r".
std::string parameter_name(int slot);

struct Scene {
  std::vector<Gaussian3D> gaussians;
  int sh_degree = kMaxShDegree;

  std::size_t size() const { return gaussians.size(); }
  bool empty() const { return gaussians.empty(); }

  /// Assigns id = list position to every primitive.
  void assign_sequential_ids();

  /// Throws std::invalid_argument on duplicate ids or an out-of-range degree.
  void validate() const;
};

/// Pinhole camera. `rotation`/`translation` map world to camera coordinates
/// (x_cam = R x_world + t); the camera looks down +z with +y pointing down the
/// image. Pixel (i, j) is sampled at (i + 0.5, j + 0.5).
struct Camera {
  int width = 0;
  int height = 0;
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  double near_plane = 0.01;
  double far_plane = 1000.0;

  Vec3 to_camera(const Vec3& world) const { return rotation * world + translation; }
  Vec3 to_world(const Vec3& cam) const { return rotation.transpose() * (cam - translation); }
  Vec3 center() const { return -(rotation.transpose() * translation); }

  /// Camera-space direction with unit z through continuous pixel coordinate.
  Vec3 camera_ray(double px, double py) const { return {(px - cx) / fx, (py - cy) / fy, 1.0}; }

  /// Unit world-space direction through continuous pixel coordinate.
  Vec3 world_ray(double px, double py) const {
    return (rotation.transpose() * camera_ray(px, py)).normalized();
  }

  /// Throws std::invalid_argument when intrinsics or pose are invalid.
  void validate() const;

  /// Camera at `eye` looking at `target`; `up` is the world direction that
  /// should appear upward in the image.
  static Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, int width, int height,
                        double focal);
};

Mat3 rotation_from_quaternion(const Vec4& unit_q);

/// Variances are floored at this fraction of the largest one.
inline constexpr double kMinVarianceRatio = 1e-12;

/// Sigma = R S S^T R^T with S = diag(exp(log_scale)).
Mat3 covariance_from(const Vec3& log_scale, const Vec4& rotation);

/// Real SH basis values, in the coefficient order of the splat format.
std::array<double, kShCoeffCount> sh_basis(const Vec3& dir);

/// Gradient of each basis function with respect to the (unnormalized) input
/// direction components, evaluated at `dir`.
std::array<Vec3, kShCoeffCount> sh_basis_gradient(const Vec3& dir);

/// max(0, sum_k Y_k(dir) * coeff_k + 0.5) over the first (degree+1)^2 terms.
Rgb eval_sh(const std::array<Vec3, kShCoeffCount>& coeffs, const Vec3& dir, int degree);

/// Same sum before the zero clamp.
Rgb eval_sh_unclamped(const std::array<Vec3, kShCoeffCount>& coeffs, const Vec3& dir, int degree);

inline constexpr double kShC0 = 0.28209479177387814;

/// DC coefficient that yields `color` in every direction.
inline double sh_dc_for(double color) { return (color - 0.5) / kShC0; }

}  // namespace stochsplat
