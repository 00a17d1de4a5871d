#pragma once

// Per-pixel stochastic selection shared by the forward renderer and the
// replay pass of the backward renderer. Both must draw identical samples.

#include "stochsplat/freeflight.hpp"
#include "stochsplat/render.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace stochsplat::detail {

struct PixelScratch {
  std::vector<double> depth;
  std::vector<double> alpha;
  std::vector<double> opacity;
  std::vector<std::uint32_t> id;
  std::vector<FreeFlightParams> flight;
  std::vector<std::uint8_t> covered;
};

struct Selection {
  int local = -1;  // position in the tile list, -1 = background
  double depth = kInf;
};

class PixelSampler {
 public:
  PixelSampler(const FrameSetup& frame, const Camera& cam, const RenderConfig& cfg,
               std::span<const std::uint32_t> list, int x, int y, PixelScratch& scratch)
      : frame_(frame), cfg_(cfg), list_(list), x_(x), y_(y), px_(x + 0.5), py_(y + 0.5), s_(scratch) {
    const std::size_t n = list.size();
    s_.alpha.assign(n, std::numeric_limits<double>::quiet_NaN());
    s_.depth.resize(n);
    s_.opacity.resize(n);
    s_.id.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const ProjectedSplat& sp = frame.splats[list[k]];
      s_.opacity[k] = sp.opacity;
      s_.id[k] = sp.gaussian_id;
    }
    if (cfg.depth_mode == DepthMode::kFreeFlight) {
      s_.flight.resize(n);
      s_.covered.resize(n);
      Ray ray{cam.center(), cam.world_ray(px_, py_)};
      view_z_ = 1.0 / cam.camera_ray(px_, py_).norm();
      for (std::size_t k = 0; k < n; ++k) {
        const ProjectedSplat& sp = frame.splats[list[k]];
        s_.covered[k] = sp.bbox.contains(Vec2(px_, py_)) ? 1 : 0;
        if (s_.covered[k]) {
          s_.flight[k] = line_integral_params(sp.mean_world, sp.inv_cov3d, ray, frame.sigma_t[list[k]]);
        }
      }
    } else {
      const bool plane = cfg.depth_mode == DepthMode::kPlane;
      for (std::size_t k = 0; k < n; ++k) {
        const ProjectedSplat& sp = frame.splats[list[k]];
        s_.depth[k] = plane ? sp.plane_depth(px_, py_) : sp.mean_depth;
      }
      // With several samples per pixel every alpha is needed anyway.
      if (cfg.spp >= kEagerAlphaSpp) {
        for (std::size_t k = 0; k < n; ++k) alpha(k);
        eager_ = true;
      }
    }
  }

  std::size_t size() const { return list_.size(); }
  const ProjectedSplat& splat(std::size_t k) const { return frame_.splats[list_[k]]; }
  std::uint32_t splat_index(std::size_t k) const { return list_[k]; }
  double px() const { return px_; }
  double py() const { return py_; }

  /// Fragment opacity of entry k, evaluated on first use.
  double alpha(std::size_t k) {
    double& a = s_.alpha[k];
    if (std::isnan(a)) a = fragment_alpha(splat(k), px_, py_).alpha;
    return a;
  }

  /// Deterministic depth of entry k (mean/plane modes).
  double depth(std::size_t k) const { return s_.depth[k]; }

  Selection sample(std::uint32_t spp_index) {
    return cfg_.depth_mode == DepthMode::kFreeFlight ? sample_free_flight_mode(spp_index)
                                                      : sample_opacity(spp_index);
  }

 private:
  // Listing-style loop: accept if u < alpha and nearer than the current winner.
  // Entries that cannot win the depth test are skipped before drawing; each
  // draw depends only on its key.
  Selection sample_opacity(std::uint32_t spp_index) {
    const PixelSampleStream stream(cfg_.pass_seed, x_, y_, spp_index, Stream::kAccept);
    Selection best;
    std::uint32_t best_id = std::numeric_limits<std::uint32_t>::max();
    const std::size_t n = list_.size();
    const double* depth = s_.depth.data();
    const std::uint32_t* id = s_.id.data();
    if (eager_) {
      const double* a = s_.alpha.data();
      int best_k = -1;
      double best_z = kInf;
      for (std::size_t k = 0; k < n; ++k) {
        const double z = depth[k];
        const bool front = z < best_z || (z == best_z && id[k] < best_id);
        const bool accept = front && stream.uniform(id[k]) < a[k];
        best_k = accept ? static_cast<int>(k) : best_k;
        best_z = accept ? z : best_z;
        best_id = accept ? id[k] : best_id;
      }
      best.local = best_k;
      best.depth = best_z;
      return best;
    }
    const double* opacity = s_.opacity.data();
    for (std::size_t k = 0; k < n; ++k) {
      const double z = depth[k];
      if (!(z < best.depth || (z == best.depth && id[k] < best_id))) continue;
      const double u = stream.uniform(id[k]);
      if (u >= opacity[k]) continue;
      if (u < alpha(k)) {
        best.local = static_cast<int>(k);
        best.depth = z;
        best_id = id[k];
      }
    }
    return best;
  }

  // Decomposition tracking: every covering splat draws a free-flight distance
  // and the nearest interaction wins.
  Selection sample_free_flight_mode(std::uint32_t spp_index) {
    const PixelSampleStream stream(cfg_.pass_seed, x_, y_, spp_index, Stream::kFreeFlight);
    Selection best;
    std::uint32_t best_id = std::numeric_limits<std::uint32_t>::max();
    const std::size_t n = list_.size();
    for (std::size_t k = 0; k < n; ++k) {
      if (!s_.covered[k]) continue;
      const ProjectedSplat& sp = frame_.splats[list_[k]];
      const double t = stochsplat::sample_free_flight(s_.flight[k], stream.uniform(sp.gaussian_id));
      if (std::isinf(t)) continue;
      const double z = t * view_z_;
      if (z < best.depth || (z == best.depth && sp.gaussian_id < best_id)) {
        best.local = static_cast<int>(k);
        best.depth = z;
        best_id = sp.gaussian_id;
      }
    }
    return best;
  }

  static constexpr int kEagerAlphaSpp = 4;

  const FrameSetup& frame_;
  const RenderConfig& cfg_;
  std::span<const std::uint32_t> list_;
  std::uint32_t x_;
  std::uint32_t y_;
  double px_;
  double py_;
  double view_z_ = 1.0;
  bool eager_ = false;
  PixelScratch& s_;
};

}  // namespace stochsplat::detail
