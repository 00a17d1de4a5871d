#include "stochsplat/freeflight.hpp"

#include <Eigen/LU>
#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace stochsplat {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
const double kSqrtHalfPi = std::sqrt(0.5 * std::numbers::pi);

/// erf(x1) - erf(x0) for x1 >= x0 without cancellation in the tails.
double erf_difference(double x0, double x1) {
  if (x0 >= 0.0) return std::erfc(x0) - std::erfc(x1);
  if (x1 <= 0.0) return std::erfc(-x1) - std::erfc(-x0);
  return std::erf(x1) - std::erf(x0);
}

/// tau(t) = erf_scale(p) * (erf((a + t cq)/sqrt2) - erf(a/sqrt2)).
double erf_scale(const FreeFlightParams& p) {
  const double miss = std::max(p.b - p.a * p.a, 0.0);
  return p.sigma_t * kSqrtHalfPi / p.cq * std::exp(-0.5 * miss);
}

double bisect_free_flight(const FreeFlightParams& p, double target_tau) {
  // Bracket then bisect on the monotone optical depth.
  double lo = 0.0;
  double hi = std::max(1.0, (std::abs(p.a) + 1.0) / p.cq);
  while (optical_depth(p, hi) < target_tau) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) return kInf;
  }
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (optical_depth(p, mid) < target_tau ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

FreeFlightParams line_integral_params(const Vec3& mean, const Mat3& inv_cov, const Ray& ray,
                                      double sigma_t) {
  const Vec3 offset = ray.origin - mean;
  const Vec3 sd = inv_cov * ray.direction;
  FreeFlightParams p;
  p.cq = std::sqrt(ray.direction.dot(sd));
  p.a = offset.dot(sd) / p.cq;
  p.b = offset.dot(inv_cov * offset);
  p.sigma_t = sigma_t;
  return p;
}

FreeFlightParams line_integral_params(const Gaussian3D& g, const Ray& ray, double sigma_t) {
  const Mat3 inv_cov = covariance_from(g.log_scale, g.rotation).inverse();
  return line_integral_params(g.position, inv_cov, ray, sigma_t);
}

double optical_depth(const FreeFlightParams& p, double t) {
  if (!(p.sigma_t > 0.0) || !(t > 0.0)) return 0.0;
  const double x0 = p.a / kSqrt2;
  const double x1 = std::isinf(t) ? kInf : (p.a + t * p.cq) / kSqrt2;
  return erf_scale(p) * erf_difference(x0, x1);
}

double sample_free_flight(const FreeFlightParams& p, double u) {
  if (!(p.sigma_t > 0.0)) return kInf;
  if (u <= 0.0) return 0.0;
  const double target_tau = -std::log1p(-u);
  const double scale = erf_scale(p);
  if (!(scale > 0.0)) return kInf;
  const double delta = target_tau / scale;  // required increase of erf
  const double x0 = p.a / kSqrt2;

  double x1;
  if (x0 >= 0.0) {
    // erfc(x1) = erfc(x0) - delta
    const double r = std::erfc(x0) - delta;
    if (!(r > 0.0)) return kInf;
    x1 = boost::math::erfc_inv(r);
  } else {
    // erfc(-x1) = erfc(-x0) + delta
    const double r = std::erfc(-x0) + delta;
    if (!(r < 2.0)) return kInf;
    if (r > 2.0 - 1e-9) return bisect_free_flight(p, target_tau);
    x1 = -boost::math::erfc_inv(r);
  }
  return std::max((kSqrt2 * x1 - p.a) / p.cq, 0.0);
}

FreeFlightHit min_free_flight(std::span<const FreeFlightParams> params, std::span<const SampleKey> keys) {
  FreeFlightHit hit;
  const std::size_t n = std::min(params.size(), keys.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double t = sample_free_flight(params[i], sample_uniform(keys[i]));
    if (t < hit.t) {
      hit.t = t;
      hit.winner = i;
    }
  }
  return hit;
}

double sigma_t_from_alpha(const Vec3& mean, const Mat3& inv_cov, const Ray& ray, double alpha) {
  alpha = std::min(alpha, kMaxAlpha);
  if (!(alpha > 0.0)) return 0.0;
  const double unit = optical_depth(line_integral_params(mean, inv_cov, ray, 1.0), kInf);
  if (!(unit > 0.0)) return 0.0;
  return -std::log1p(-alpha) / unit;
}

double sigma_t_from_alpha(const Gaussian3D& g, const Ray& ray, double alpha) {
  const Mat3 inv_cov = covariance_from(g.log_scale, g.rotation).inverse();
  return sigma_t_from_alpha(g.position, inv_cov, ray, alpha);
}

}  // namespace stochsplat
