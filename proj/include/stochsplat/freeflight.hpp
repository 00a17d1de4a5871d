#pragma once

#include "stochsplat/rng.hpp"
#include "stochsplat/scene.hpp"
#include "stochsplat/types.hpp"

#include <optional>
#include <span>

namespace stochsplat {

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();  // unit length
};

/// Closed-form description of one Gaussian's extinction along a ray. With
/// q(t) the Mahalanobis distance^2 of o + t d:
///   q(t) = (a + t cq)^2 + b - a^2
///   cq   = sqrt(d^T S^-1 d),  a = (o - mu)^T S^-1 d / cq,  b = (o - mu)^T S^-1 (o - mu)
struct FreeFlightParams {
  double a = 0.0;
  double b = 0.0;
  double cq = 1.0;
  double sigma_t = 0.0;
};

FreeFlightParams line_integral_params(const Vec3& mean, const Mat3& inv_cov, const Ray& ray,
                                      double sigma_t);
FreeFlightParams line_integral_params(const Gaussian3D& g, const Ray& ray, double sigma_t);

/// tau(t) = integral_0^t sigma(o + s d) ds; t may be +inf.
double optical_depth(const FreeFlightParams& p, double t);

/// Distance t with 1 - exp(-tau(t)) = u, or +inf when u is at or beyond the
/// total interaction probability 1 - exp(-tau(inf)).
double sample_free_flight(const FreeFlightParams& p, double u);

struct FreeFlightHit {
  double t = kInf;
  std::optional<std::size_t> winner;
};

/// Decomposition tracking: one free-flight sample per component (each from
/// its own key), nearest one wins.
FreeFlightHit min_free_flight(std::span<const FreeFlightParams> params, std::span<const SampleKey> keys);

/// Peak extinction giving interaction probability `alpha` along `ray`, the
/// central ray through the mean: sigma_t = -ln(1 - alpha) / tau_unit(inf).
double sigma_t_from_alpha(const Vec3& mean, const Mat3& inv_cov, const Ray& ray, double alpha);
double sigma_t_from_alpha(const Gaussian3D& g, const Ray& ray, double alpha);

}  // namespace stochsplat
