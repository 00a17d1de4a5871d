#include "stochsplat/scenes.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <random>

namespace stochsplat {

namespace {

Vec4 quaternion_axis_angle(const Vec3& axis, double angle) {
  const Vec3 a = axis.normalized() * std::sin(0.5 * angle);
  return {std::cos(0.5 * angle), a.x(), a.y(), a.z()};
}

void set_color(Gaussian3D& g, const Vec3& rgb) {
  for (int c = 0; c < 3; ++c) g.sh[0][c] = sh_dc_for(rgb[c]);
}

}  // namespace

Camera orbit_camera(int width, int height, double focal, double distance, double azimuth, double elevation) {
  const Vec3 eye(distance * std::cos(elevation) * std::sin(azimuth), -distance * std::sin(elevation),
                 -distance * std::cos(elevation) * std::cos(azimuth));
  return Camera::look_at(eye, Vec3::Zero(), Vec3::UnitY(), width, height, focal);
}

Scene random_scene(const RandomSceneOptions& o) {
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  Scene scene;
  scene.sh_degree = o.sh_degree;
  scene.gaussians.resize(o.count);
  for (auto& g : scene.gaussians) {
    g.position = Vec3(uniform(-o.extent, o.extent), uniform(-o.extent, o.extent), uniform(-o.extent, o.extent));
    for (int c = 0; c < 3; ++c) g.log_scale[c] = uniform(o.min_log_scale, o.max_log_scale);
    g.rotation = Vec4(normal(rng), normal(rng), normal(rng), normal(rng)).normalized();
    g.opacity_logit = logit(uniform(o.min_opacity, o.max_opacity));
    set_color(g, Vec3(uniform(0.05, 0.95), uniform(0.05, 0.95), uniform(0.05, 0.95)));
    for (int k = 1; k < sh_coeff_count(o.sh_degree); ++k) {
      for (int c = 0; c < 3; ++c) g.sh[k][c] = o.sh_rest_scale * normal(rng);
    }
  }
  scene.assign_sequential_ids();
  return scene;
}

Scene overlap_scene(int count, std::uint64_t seed, double opacity) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Scene scene;
  scene.sh_degree = 0;
  scene.gaussians.resize(count);
  for (int i = 0; i < count; ++i) {
    Gaussian3D& g = scene.gaussians[i];
    const double z = -1.0 + 2.0 * (i + 0.5) / count;
    g.position = Vec3(0.1 * (unit(rng) - 0.5), 0.1 * (unit(rng) - 0.5), z);
    g.log_scale = Vec3(std::log(1.5), std::log(1.5), std::log(0.05));
    g.rotation = quaternion_axis_angle(Vec3::UnitZ(), 2.0 * std::numbers::pi * unit(rng));
    g.opacity_logit = logit(opacity);
    set_color(g, Vec3(unit(rng), unit(rng), unit(rng)));
  }
  scene.assign_sequential_ids();
  return scene;
}

Scene crossing_scene() {
  Scene scene;
  scene.sh_degree = 0;
  scene.gaussians.resize(2);
  const double d = 0.15;
  const double angles[2] = {std::numbers::pi / 4.0, -std::numbers::pi / 4.0};
  const Vec3 colors[2] = {Vec3(0.9, 0.15, 0.1), Vec3(0.1, 0.8, 0.2)};
  for (int i = 0; i < 2; ++i) {
    Gaussian3D& g = scene.gaussians[i];
    g.position = Vec3(i == 0 ? -d : d, 0.0, 0.0);
    // Long in x and y, thin in z, then tilted about y.
    g.log_scale = Vec3(std::log(0.5), std::log(0.35), std::log(0.01));
    g.rotation = quaternion_axis_angle(Vec3::UnitY(), angles[i]);
    g.opacity_logit = logit(0.8);
    set_color(g, colors[i]);
  }
  scene.assign_sequential_ids();
  return scene;
}

Camera crossing_camera(int width, int height, double yaw) {
  Camera cam;
  cam.width = width;
  cam.height = height;
  cam.fx = cam.fy = 0.9 * width;
  cam.cx = 0.5 * width;
  cam.cy = 0.5 * height;
  const Eigen::AngleAxisd r(yaw, Vec3::UnitY());
  cam.rotation = r.toRotationMatrix();
  // World origin sits 2 units in front of the camera for any yaw.
  cam.translation = Vec3(0.0, 0.0, 2.0);
  return cam;
}

Scene planar_scene(int grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Scene scene;
  scene.sh_degree = 0;
  Gaussian3D backdrop;
  backdrop.position = Vec3(0.0, 0.0, 0.02);
  backdrop.log_scale = Vec3(std::log(1000.0), std::log(1000.0), std::log(0.01));
  backdrop.opacity_logit = 12.0;
  set_color(backdrop, Vec3(0.4, 0.4, 0.45));
  scene.gaussians.push_back(backdrop);
  const double span = 1.2;
  for (int j = 0; j < grid; ++j) {
    for (int i = 0; i < grid; ++i) {
      Gaussian3D g;
      g.position = Vec3(span * ((i + 0.5) / grid - 0.5), span * ((j + 0.5) / grid - 0.5), 0.0);
      const double s = span / grid;
      g.log_scale = Vec3(std::log(s * (0.3 + 0.4 * unit(rng))), std::log(s * (0.3 + 0.4 * unit(rng))), std::log(0.01));
      g.rotation = quaternion_axis_angle(Vec3::UnitZ(), std::numbers::pi * unit(rng));
      g.opacity_logit = logit(0.3 + 0.6 * unit(rng));
      set_color(g, Vec3(unit(rng), unit(rng), unit(rng)));
      scene.gaussians.push_back(g);
    }
  }
  scene.assign_sequential_ids();
  return scene;
}

}  // namespace stochsplat
