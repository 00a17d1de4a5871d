#include "stochsplat/scene.hpp"

#include <Eigen/Geometry>

#include <stdexcept>
#include <string>
#include <unordered_set>

namespace stochsplat {

namespace {

constexpr double kShC1 = 0.4886025119029199;
constexpr double kShC2[5] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                             -1.0925484305920792, 0.5462742152960396};
constexpr double kShC3[7] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
                             0.3731763325901154,  -0.4570457994644658, 1.445305721320277,
                             -0.5900435899266435};

}  // namespace

void Scene::assign_sequential_ids() {
  for (std::size_t i = 0; i < gaussians.size(); ++i) {
    gaussians[i].id = static_cast<std::uint32_t>(i);
  }
}

void Scene::validate() const {
  if (sh_degree < 0 || sh_degree > kMaxShDegree) {
    throw std::invalid_argument("sh_degree must be in [0, 3], got " + std::to_string(sh_degree));
  }
  std::unordered_set<std::uint32_t> seen;
  seen.reserve(gaussians.size());
  for (const auto& g : gaussians) {
    if (!seen.insert(g.id).second) {
      throw std::invalid_argument("duplicate gaussian id " + std::to_string(g.id));
    }
    if (g.rotation.squaredNorm() == 0.0) {
      throw std::invalid_argument("gaussian " + std::to_string(g.id) + " has a zero quaternion");
    }
  }
}

void Camera::validate() const {
  if (width <= 0 || height <= 0) throw std::invalid_argument("camera size must be positive");
  if (!(fx > 0.0) || !(fy > 0.0)) throw std::invalid_argument("camera focal lengths must be positive");
  if (!(near_plane > 0.0) || !(far_plane > near_plane)) {
    throw std::invalid_argument("camera clip range must satisfy 0 < near < far");
  }
  const double ortho_err = (rotation * rotation.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho_err > 1e-4 || rotation.determinant() < 0.0) {
    throw std::invalid_argument("camera rotation is not a proper rotation");
  }
}

Camera Camera::look_at(const Vec3& eye, const Vec3& target, const Vec3& up, int width, int height,
                       double focal) {
  const Vec3 forward = (target - eye).normalized();
  const Vec3 right = forward.cross(up).normalized();
  const Vec3 down = forward.cross(right);
  Camera cam;
  cam.width = width;
  cam.height = height;
  cam.fx = focal;
  cam.fy = focal;
  cam.cx = 0.5 * width;
  cam.cy = 0.5 * height;
  cam.rotation.row(0) = right.transpose();
  cam.rotation.row(1) = down.transpose();
  cam.rotation.row(2) = forward.transpose();
  cam.translation = -(cam.rotation * eye);
  return cam;
}

Mat3 rotation_from_quaternion(const Vec4& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3 r;
  r << 1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
      2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
      2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y);
  return r;
}

Mat3 covariance_from(const Vec3& log_scale, const Vec4& rotation) {
  const Mat3 r = rotation_from_quaternion(rotation.normalized());
  Vec3 var = (2.0 * log_scale.array()).exp().matrix();
  var = var.cwiseMax(kMinVarianceRatio * var.maxCoeff());
  const Mat3 sigma = r * var.asDiagonal() * r.transpose();
  return 0.5 * (sigma + sigma.transpose());
}

std::array<double, kShCoeffCount> sh_basis(const Vec3& dir) {
  const double x = dir.x(), y = dir.y(), z = dir.z();
  const double xx = x * x, yy = y * y, zz = z * z;
  return {kShC0,
          -kShC1 * y,
          kShC1 * z,
          -kShC1 * x,
          kShC2[0] * x * y,
          kShC2[1] * y * z,
          kShC2[2] * (2.0 * zz - xx - yy),
          kShC2[3] * x * z,
          kShC2[4] * (xx - yy),
          kShC3[0] * y * (3.0 * xx - yy),
          kShC3[1] * x * y * z,
          kShC3[2] * y * (4.0 * zz - xx - yy),
          kShC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy),
          kShC3[4] * x * (4.0 * zz - xx - yy),
          kShC3[5] * z * (xx - yy),
          kShC3[6] * x * (xx - 3.0 * yy)};
}

std::array<Vec3, kShCoeffCount> sh_basis_gradient(const Vec3& dir) {
  const double x = dir.x(), y = dir.y(), z = dir.z();
  const double xx = x * x, yy = y * y, zz = z * z;
  std::array<Vec3, kShCoeffCount> g;
  g[0] = Vec3::Zero();
  g[1] = {0.0, -kShC1, 0.0};
  g[2] = {0.0, 0.0, kShC1};
  g[3] = {-kShC1, 0.0, 0.0};
  g[4] = kShC2[0] * Vec3(y, x, 0.0);
  g[5] = kShC2[1] * Vec3(0.0, z, y);
  g[6] = kShC2[2] * Vec3(-2.0 * x, -2.0 * y, 4.0 * z);
  g[7] = kShC2[3] * Vec3(z, 0.0, x);
  g[8] = kShC2[4] * Vec3(2.0 * x, -2.0 * y, 0.0);
  g[9] = kShC3[0] * Vec3(6.0 * x * y, 3.0 * xx - 3.0 * yy, 0.0);
  g[10] = kShC3[1] * Vec3(y * z, x * z, x * y);
  g[11] = kShC3[2] * Vec3(-2.0 * x * y, 4.0 * zz - xx - 3.0 * yy, 8.0 * y * z);
  g[12] = kShC3[3] * Vec3(-6.0 * x * z, -6.0 * y * z, 6.0 * zz - 3.0 * xx - 3.0 * yy);
  g[13] = kShC3[4] * Vec3(4.0 * zz - 3.0 * xx - yy, -2.0 * x * y, 8.0 * x * z);
  g[14] = kShC3[5] * Vec3(2.0 * x * z, -2.0 * y * z, xx - yy);
  g[15] = kShC3[6] * Vec3(3.0 * xx - 3.0 * yy, -6.0 * x * y, 0.0);
  return g;
}

Rgb eval_sh_unclamped(const std::array<Vec3, kShCoeffCount>& coeffs, const Vec3& dir, int degree) {
  const auto basis = sh_basis(dir);
  const int n = sh_coeff_count(degree);
  Vec3 sum = Vec3::Constant(0.5);
  for (int k = 0; k < n; ++k) sum += basis[k] * coeffs[k];
  return sum.array();
}

Rgb eval_sh(const std::array<Vec3, kShCoeffCount>& coeffs, const Vec3& dir, int degree) {
  return eval_sh_unclamped(coeffs, dir, degree).max(0.0);
}

double& raw_parameter(Gaussian3D& g, int slot) {
  if (slot < 0 || slot >= kParamsPerGaussian) throw std::out_of_range("parameter slot out of range");
  if (slot < 3) return g.position[slot];
  if (slot < 6) return g.log_scale[slot - 3];
  if (slot < 10) return g.rotation[slot - 6];
  if (slot == 10) return g.opacity_logit;
  const int k = slot - 11;
  return g.sh[k / 3][k % 3];
}

double raw_parameter(const Gaussian3D& g, int slot) { return raw_parameter(const_cast<Gaussian3D&>(g), slot); }

std::string parameter_name(int slot) {
  static const char* xyz = "xyz";
  static const char* rgb = "rgb";
  if (slot < 0 || slot >= kParamsPerGaussian) throw std::out_of_range("parameter slot out of range");
  if (slot < 3) return std::string("position.") + xyz[slot];
  if (slot < 6) return std::string("log_scale.") + xyz[slot - 3];
  if (slot < 10) return "rotation[" + std::to_string(slot - 6) + "]";
  if (slot == 10) return "opacity_logit";
  const int k = slot - 11;
  return "sh[" + std::to_string(k / 3) + "]." + rgb[k % 3];
}

}  // namespace stochsplat
