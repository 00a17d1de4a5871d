#include "stochsplat/render.hpp"
#include "stochsplat/scenes.hpp"
#include "stochsplat/taa.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace stochsplat;

namespace {

Camera plane_camera(int w, int h, double distance) {
  Camera cam;
  cam.width = w;
  cam.height = h;
  cam.fx = cam.fy = w;
  cam.cx = 0.5 * w;
  cam.cy = 0.5 * h;
  cam.translation = Vec3(0, 0, distance);  // world z = 0 sits at camera depth `distance`
  return cam;
}

// Hit points of every pixel center on the world plane z = 0.
std::vector<Vec3> plane_hits(const Camera& cam) {
  std::vector<Vec3> p;
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const Vec3 o = cam.center();
      const Vec3 d = cam.world_ray(x + 0.5, y + 0.5);
      p.push_back(o + (-o.z() / d.z()) * d);
    }
  }
  return p;
}

Image random_image(int w, int h, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(w, h);
  for (auto& v : img.data()) v = u(rng);
  return img;
}

}  // namespace

TEST(Reproject, IdentityCameraKeepsEverything) {
  const Camera cam = plane_camera(12, 10, 3.0);
  std::mt19937_64 rng(1);
  TaaState st;
  st.tau = 1e-3;
  const Image frame = random_image(12, 10, rng);
  taa_accumulate(st, frame, plane_hits(cam), cam);
  const Reprojection r = reproject(st, cam);
  for (std::size_t i = 0; i < frame.pixel_count(); ++i) {
    EXPECT_TRUE(r.valid[i]);
    EXPECT_TRUE((r.color.at(i) == frame.at(i)).all());
    EXPECT_EQ(r.positions[i], st.world_pos[i]);
    EXPECT_EQ(r.count[i], 1u);
  }
}

TEST(Reproject, AxialTranslationScalesAboutPrincipalPoint) {
  const Camera cam = plane_camera(40, 40, 4.0);
  const auto hits = plane_hits(cam);
  TaaState st;
  Image frame(40, 40);
  for (std::size_t i = 0; i < frame.pixel_count(); ++i) frame.set(i, Rgb::Constant(static_cast<double>(i)));
  taa_accumulate(st, frame, hits, cam);
  // Moving to depth 8/3 scales distances from the principal point by 1.5.
  const Camera closer = plane_camera(40, 40, 8.0 / 3.0);
  const Reprojection r = reproject(st, closer);
  int landed = 0;
  for (int y = 0; y < 40; ++y) {
    for (int x = 0; x < 40; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * 40 + x;
      const double u = 20.0 + 1.5 * (x + 0.5 - 20.0);
      const double v = 20.0 + 1.5 * (y + 0.5 - 20.0);
      if (u < 0 || v < 0 || u >= 40 || v >= 40) continue;
      const std::size_t j = static_cast<std::size_t>(std::floor(v)) * 40 + static_cast<std::size_t>(std::floor(u));
      ASSERT_TRUE(r.valid[j]);
      EXPECT_EQ(r.color.at(j)[0], static_cast<double>(i));
      ++landed;
    }
  }
  EXPECT_EQ(landed, 26 * 26);
  int valid = 0;
  for (auto v : r.valid) valid += v;
  EXPECT_EQ(valid, landed);  // the other pixels are holes
}

TEST(Reproject, PointsBehindCameraAreInvalid) {
  const Camera cam = plane_camera(8, 8, 3.0);
  TaaState st;
  taa_accumulate(st, Image(8, 8, Rgb::Ones()), plane_hits(cam), cam);
  Camera behind = cam;
  behind.translation = Vec3(0, 0, -1.0);  // plane now at camera z = -1
  const Reprojection r = reproject(st, behind);
  for (auto v : r.valid) EXPECT_EQ(v, 0);
}

TEST(TaaAccumulate, BlendsWithHistoryCount) {
  const Camera cam = plane_camera(1, 1, 2.0);
  const auto hits = plane_hits(cam);
  TaaState st;
  st.tau = 0.01;
  taa_accumulate(st, Image(1, 1, Rgb::Zero()), hits, cam);
  taa_accumulate(st, Image(1, 1, Rgb::Ones()), hits, cam);
  EXPECT_DOUBLE_EQ(st.accum_color.at(0)[0], 0.5);
  EXPECT_EQ(st.accum_count[0], 2u);
}

TEST(TaaAccumulate, StaticCameraIsArithmeticMean) {
  const Camera cam = plane_camera(6, 5, 2.0);
  const auto hits = plane_hits(cam);
  std::mt19937_64 rng(3);
  TaaState st;
  st.tau = 1e-3;
  std::vector<double> sum(6 * 5 * 3, 0.0);
  const int k = 37;
  for (int f = 0; f < k; ++f) {
    const Image img = random_image(6, 5, rng);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += img.data()[i];
    taa_accumulate(st, img, hits, cam);
  }
  for (std::size_t i = 0; i < sum.size(); ++i) EXPECT_NEAR(st.accum_color.data()[i], sum[i] / k, 1e-13);
  for (auto c : st.accum_count) EXPECT_EQ(c, static_cast<std::uint32_t>(k));
}

TEST(TaaAccumulate, ZeroTauAlwaysResets) {
  const Camera cam = plane_camera(6, 6, 2.0);
  const auto hits = plane_hits(cam);
  std::mt19937_64 rng(4);
  TaaState st;
  st.tau = 0.0;
  for (int f = 0; f < 5; ++f) {
    const Image img = random_image(6, 6, rng);
    taa_accumulate(st, img, hits, cam);
    EXPECT_TRUE(st.accum_color == img);
    for (auto c : st.accum_count) EXPECT_EQ(c, 1u);
  }
}

TEST(TaaAccumulate, MovedSurfaceResets) {
  const Camera cam = plane_camera(4, 4, 2.0);
  auto hits = plane_hits(cam);
  TaaState st;
  st.tau = 0.05;
  taa_accumulate(st, Image(4, 4, Rgb::Zero()), hits, cam);
  hits[5].z() -= 0.5;  // that pixel now sees a nearer surface
  taa_accumulate(st, Image(4, 4, Rgb::Ones()), hits, cam);
  EXPECT_EQ(st.accum_count[5], 1u);
  EXPECT_EQ(st.accum_color.at(5)[0], 1.0);
  EXPECT_EQ(st.accum_count[6], 2u);
  EXPECT_DOUBLE_EQ(st.accum_color.at(6)[0], 0.5);
}

TEST(TaaAccumulate, StaysInsideFrameEnvelope) {
  const Camera cam = plane_camera(8, 8, 2.0);
  const auto hits = plane_hits(cam);
  std::mt19937_64 rng(6);
  TaaState st;
  st.tau = 1e-3;
  std::vector<double> lo(8 * 8 * 3, 1e9), hi(8 * 8 * 3, -1e9);
  for (int f = 0; f < 20; ++f) {
    const Image img = random_image(8, 8, rng);
    for (std::size_t i = 0; i < lo.size(); ++i) {
      lo[i] = std::min(lo[i], img.data()[i]);
      hi[i] = std::max(hi[i], img.data()[i]);
    }
    taa_accumulate(st, img, hits, cam);
    for (std::size_t i = 0; i < lo.size(); ++i) {
      EXPECT_GE(st.accum_color.data()[i], lo[i] - 1e-15);
      EXPECT_LE(st.accum_color.data()[i], hi[i] + 1e-15);
    }
  }
}

TEST(TaaAccumulate, VarianceDropsWithFrameCount) {
  const Scene scene = planar_scene(4, 7);
  Camera cam = plane_camera(12, 12, 3.0);
  cam.fx = cam.fy = 10.0;
  RenderConfig cfg;
  std::vector<double> sum1(12 * 12 * 3, 0.0), sq1 = sum1, sum64 = sum1, sq64 = sum1;
  const int trials = 60;
  for (int t = 0; t < trials; ++t) {
    TaaState st;
    st.tau = 0.05;
    for (int f = 0; f < 64; ++f) {
      cfg.pass_seed = 100000 * t + f;
      const auto frame = render_stochastic_frame(scene, cam, cfg, {.hit_positions = true});
      taa_accumulate(st, frame.color, frame.hit_positions, cam);
      if (f == 0) {
        for (std::size_t i = 0; i < sum1.size(); ++i) {
          sum1[i] += frame.color.data()[i];
          sq1[i] += frame.color.data()[i] * frame.color.data()[i];
        }
      }
    }
    for (std::size_t i = 0; i < sum64.size(); ++i) {
      sum64[i] += st.accum_color.data()[i];
      sq64[i] += st.accum_color.data()[i] * st.accum_color.data()[i];
    }
  }
  auto total_var = [&](const std::vector<double>& s, const std::vector<double>& q) {
    double v = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) v += (q[i] - s[i] * s[i] / trials) / (trials - 1);
    return v;
  };
  const double ratio = total_var(sum1, sq1) / total_var(sum64, sq64);
  EXPECT_NEAR(ratio / 64.0, 1.0, 0.2) << "ratio " << ratio;
}

TEST(TaaAccumulate, RejectsMismatchedInput) {
  const Camera cam = plane_camera(4, 4, 2.0);
  TaaState st;
  EXPECT_THROW(taa_accumulate(st, Image(3, 4), plane_hits(cam), cam), std::invalid_argument);
  EXPECT_THROW(taa_accumulate(st, Image(4, 4), std::vector<Vec3>(3), cam), std::invalid_argument);
  EXPECT_THROW(reproject(st, cam), std::invalid_argument);
}

TEST(DefaultTau, HalfPercentOfDiagonal) {
  Scene s;
  s.gaussians.resize(2);
  s.gaussians[1].position = Vec3(3, 4, 0);
  EXPECT_DOUBLE_EQ(default_tau(s), 0.025);
  EXPECT_EQ(default_tau(Scene{}), 0.0);
}
