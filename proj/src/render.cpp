#include "stochsplat/render.hpp"

#include "pixel_sampler.hpp"
#include "stochsplat/freeflight.hpp"
#include "stochsplat/parallel.hpp"

#include <tbb/enumerable_thread_specific.h>

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace stochsplat {

std::string_view to_string(DepthMode mode) {
  switch (mode) {
    case DepthMode::kMean: return "mean";
    case DepthMode::kPlane: return "plane";
    case DepthMode::kFreeFlight: return "freeflight";
  }
  return "unknown";
}

DepthMode parse_depth_mode(std::string_view name) {
  if (name == "mean") return DepthMode::kMean;
  if (name == "plane") return DepthMode::kPlane;
  if (name == "freeflight" || name == "free_flight") return DepthMode::kFreeFlight;
  throw std::invalid_argument("unknown depth mode '" + std::string(name) + "'");
}

void RenderConfig::validate() const {
  if (spp < 1) throw std::invalid_argument("spp must be >= 1");
  if (tile_size < 1) throw std::invalid_argument("tile_size must be >= 1");
  if ((background < 0.0).any() || (background > 1.0).any()) {
    throw std::invalid_argument("background must lie in [0, 1]^3");
  }
  if (!(alpha_cutoff > 0.0 && alpha_cutoff < 1.0)) throw std::invalid_argument("alpha_cutoff must be in (0, 1)");
  if (!(dilation >= 0.0)) throw std::invalid_argument("dilation must be >= 0");
  if (!(early_stop_transmittance >= 0.0 && early_stop_transmittance < 1.0)) {
    throw std::invalid_argument("early_stop_transmittance must be in [0, 1)");
  }
}

FrameSetup prepare_frame(const Scene& scene, const Camera& cam, const RenderConfig& cfg, bool depth_sorted) {
  cfg.validate();
  cam.validate();
  FrameSetup frame;
  frame.splats = project_scene(scene, cam, cfg.projection());
  std::vector<std::uint32_t> order;
  if (depth_sorted) {
    order.resize(frame.splats.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
      const auto& sa = frame.splats[a];
      const auto& sb = frame.splats[b];
      if (sa.mean_depth != sb.mean_depth) return sa.mean_depth < sb.mean_depth;
      return sa.gaussian_id < sb.gaussian_id;
    });
  }
  frame.bins = cull_and_bin(frame.splats, cam.width, cam.height, cfg.tile_size, order);
  if (cfg.depth_mode == DepthMode::kFreeFlight) {
    frame.sigma_t.resize(frame.splats.size());
    const Vec3 eye = cam.center();
    for (std::size_t i = 0; i < frame.splats.size(); ++i) {
      const auto& s = frame.splats[i];
      const Ray central{eye, (s.mean_world - eye).normalized()};
      frame.sigma_t[i] = sigma_t_from_alpha(s.mean_world, s.inv_cov3d, central, s.opacity);
    }
  }
  return frame;
}

namespace {

template <typename PixelFn>
void for_each_pixel(const TileBins& bins, const Camera& cam, const PixelFn& fn) {
  parallel_for(static_cast<std::size_t>(bins.tile_count()), [&](std::size_t t) {
    const int tx = static_cast<int>(t) % bins.tiles_x;
    const int ty = static_cast<int>(t) / bins.tiles_x;
    const auto list = bins.tile(static_cast<int>(t));
    const int x1 = std::min((tx + 1) * bins.tile_size, cam.width);
    const int y1 = std::min((ty + 1) * bins.tile_size, cam.height);
    for (int y = ty * bins.tile_size; y < y1; ++y) {
      for (int x = tx * bins.tile_size; x < x1; ++x) fn(list, x, y);
    }
  });
}

struct SortedFragment {
  double depth;
  std::uint32_t id;
  std::uint32_t splat;
  double alpha;
};

}  // namespace

Image render_sorted_ab(const Scene& scene, const Camera& cam, const RenderConfig& cfg) {
  if (cfg.depth_mode == DepthMode::kFreeFlight) {
    throw std::invalid_argument("sorted renderer does not support free-flight depth");
  }
  return render_sorted_ab(prepare_frame(scene, cam, cfg, cfg.depth_mode == DepthMode::kMean), cam, cfg);
}

Image render_sorted_ab(const FrameSetup& frame, const Camera& cam, const RenderConfig& cfg) {
  if (cfg.depth_mode == DepthMode::kFreeFlight) {
    throw std::invalid_argument("sorted renderer does not support free-flight depth");
  }
  Image img(cam.width, cam.height, cfg.background);
  const double stop = cfg.early_stop_transmittance;

  if (cfg.depth_mode == DepthMode::kMean) {
    // Tile lists already in (mean depth, id) order.
    for_each_pixel(frame.bins, cam, [&](std::span<const std::uint32_t> list, int x, int y) {
      const double px = x + 0.5, py = y + 0.5;
      Rgb c = Rgb::Zero();
      double trans = 1.0;
      for (std::uint32_t idx : list) {
        const ProjectedSplat& s = frame.splats[idx];
        const double a = fragment_alpha(s, px, py).alpha;
        if (a <= 0.0) continue;
        c += trans * a * s.view_color;
        trans *= 1.0 - a;
        if (trans < stop) break;
      }
      img.set(x, y, c + trans * cfg.background);
    });
    return img;
  }

  tbb::enumerable_thread_specific<std::vector<SortedFragment>> scratch;
  for_each_pixel(frame.bins, cam, [&](std::span<const std::uint32_t> list, int x, int y) {
    const double px = x + 0.5, py = y + 0.5;
    auto& frags = scratch.local();
    frags.clear();
    for (std::uint32_t idx : list) {
      const ProjectedSplat& s = frame.splats[idx];
      const double a = fragment_alpha(s, px, py).alpha;
      if (a > 0.0) frags.push_back({s.plane_depth(px, py), s.gaussian_id, idx, a});
    }
    std::sort(frags.begin(), frags.end(), [](const SortedFragment& a, const SortedFragment& b) {
      return a.depth != b.depth ? a.depth < b.depth : a.id < b.id;
    });
    Rgb c = Rgb::Zero();
    double trans = 1.0;
    for (const auto& f : frags) {
      c += trans * f.alpha * frame.splats[f.splat].view_color;
      trans *= 1.0 - f.alpha;
      if (trans < stop) break;
    }
    img.set(x, y, c + trans * cfg.background);
  });
  return img;
}

Image render_stochastic(const Scene& scene, const Camera& cam, const RenderConfig& cfg) {
  return render_stochastic_frame(scene, cam, cfg).color;
}

StochasticFrame render_stochastic_frame(const Scene& scene, const Camera& cam, const RenderConfig& cfg,
                                        const StochasticOptions& options) {
  return render_stochastic_frame(prepare_frame(scene, cam, cfg), cam, cfg, options);
}

StochasticFrame render_stochastic_frame(const FrameSetup& frame, const Camera& cam, const RenderConfig& cfg,
                                        const StochasticOptions& options) {
  StochasticFrame out;
  out.color = Image(cam.width, cam.height);
  const std::size_t spp = static_cast<std::size_t>(cfg.spp);
  if (options.record_replay) out.replay.resize(out.color.pixel_count() * spp);
  if (options.hit_positions) out.hit_positions.resize(out.color.pixel_count());
  const double inv_spp = 1.0 / cfg.spp;

  tbb::enumerable_thread_specific<detail::PixelScratch> scratch;
  for_each_pixel(frame.bins, cam, [&](std::span<const std::uint32_t> list, int x, int y) {
    detail::PixelSampler sampler(frame, cam, cfg, list, x, y, scratch.local());
    const std::size_t pixel = out.color.index(x, y);
    Rgb sum = Rgb::Zero();
    std::size_t background_samples = 0;
    double depth_sum = 0.0;
    for (std::uint32_t j = 0; j < spp; ++j) {
      const detail::Selection sel = sampler.sample(j);
      const bool hit = sel.local >= 0;
      const Rgb c = hit ? sampler.splat(sel.local).view_color : cfg.background;
      if (hit) {
        sum += c;
      } else {
        ++background_samples;
      }
      if (options.record_replay) {
        ReplaySample& r = out.replay[pixel * spp + j];
        r.splat = hit ? static_cast<std::int32_t>(sampler.splat_index(sel.local)) : -1;
        r.color = c;
        r.depth = sel.depth;
      }
      if (options.hit_positions) depth_sum += hit ? sel.depth : cam.far_plane;
    }
    out.color.set(pixel, background_samples == spp
                             ? cfg.background
                             : Rgb((sum + static_cast<double>(background_samples) * cfg.background) * inv_spp));
    if (options.hit_positions) {
      const Vec3 p_cam = (depth_sum * inv_spp) * cam.camera_ray(sampler.px(), sampler.py());
      out.hit_positions[pixel] = cam.to_world(p_cam);
    }
  });
  return out;
}

double resolve_depth(const ProjectedSplat& splat, double sigma_t, const Camera& cam, int x, int y,
                     const RenderConfig& cfg, SampleKey key) {
  const double px = x + 0.5, py = y + 0.5;
  switch (cfg.depth_mode) {
    case DepthMode::kMean: return splat.mean_depth;
    case DepthMode::kPlane: return splat.plane_depth(px, py);
    case DepthMode::kFreeFlight: {
      key.stream = Stream::kFreeFlight;
      const Ray ray{cam.center(), cam.world_ray(px, py)};
      const double t =
          sample_free_flight(line_integral_params(splat.mean_world, splat.inv_cov3d, ray, sigma_t), sample_uniform(key));
      return std::isinf(t) ? kInf : t / cam.camera_ray(px, py).norm();
    }
  }
  return kInf;
}

PmfResult pmf_exact(std::span<const PixelFragment> fragments) {
  std::vector<std::size_t> order(fragments.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& fa = fragments[a];
    const auto& fb = fragments[b];
    return fa.depth != fb.depth ? fa.depth < fb.depth : fa.id < fb.id;
  });
  PmfResult r;
  r.probability.assign(fragments.size(), 0.0);
  double trans = 1.0;
  for (std::size_t i : order) {
    r.probability[i] = fragments[i].alpha * trans;
    trans *= 1.0 - fragments[i].alpha;
  }
  r.residual = trans;
  return r;
}

std::vector<PixelFragment> pixel_fragments(const FrameSetup& frame, const Camera& cam, const RenderConfig& cfg,
                                           int x, int y, std::vector<std::uint32_t>* splat_indices) {
  if (cfg.depth_mode == DepthMode::kFreeFlight) {
    throw std::invalid_argument("free-flight fragments have no deterministic depth");
  }
  if (x < 0 || y < 0 || x >= cam.width || y >= cam.height) throw std::out_of_range("pixel outside image");
  const int t = (y / frame.bins.tile_size) * frame.bins.tiles_x + x / frame.bins.tile_size;
  const double px = x + 0.5, py = y + 0.5;
  std::vector<PixelFragment> out;
  if (splat_indices) splat_indices->clear();
  for (std::uint32_t idx : frame.bins.tile(t)) {
    const ProjectedSplat& s = frame.splats[idx];
    const double a = fragment_alpha(s, px, py).alpha;
    if (a <= 0.0) continue;
    const double z = cfg.depth_mode == DepthMode::kPlane ? s.plane_depth(px, py) : s.mean_depth;
    out.push_back({a, z, s.gaussian_id});
    if (splat_indices) splat_indices->push_back(idx);
  }
  return out;
}

}  // namespace stochsplat
