#include "stochsplat/backward.hpp"
#include "stochsplat/io.hpp"
#include "stochsplat/metrics.hpp"
#include "stochsplat/render.hpp"
#include "stochsplat/scenes.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

namespace py = pybind11;
using namespace stochsplat;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_numpy(const Image& img) {
  Array out({img.height(), img.width(), 3});
  std::memcpy(out.mutable_data(), img.data().data(), img.data().size() * sizeof(double));
  return out;
}

Image from_numpy(const Array& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw std::invalid_argument("expected an (H, W, 3) array");
  Image img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::memcpy(img.data().data(), a.data(), img.data().size() * sizeof(double));
  return img;
}

Array gradients_to_numpy(const GradientBuffer& g) {
  Array out({static_cast<py::ssize_t>(g.size()), static_cast<py::ssize_t>(kParamsPerGaussian)});
  auto m = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (int s = 0; s < kParamsPerGaussian; ++s) m(i, s) = grad_component(g.gaussians[i], s);
  }
  return out;
}

Array scene_parameters(const Scene& scene) {
  Array out({static_cast<py::ssize_t>(scene.size()), static_cast<py::ssize_t>(kParamsPerGaussian)});
  auto m = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < scene.size(); ++i) {
    for (int s = 0; s < kParamsPerGaussian; ++s) m(i, s) = raw_parameter(scene.gaussians[i], s);
  }
  return out;
}

void set_scene_parameters(Scene& scene, const Array& a) {
  if (a.ndim() != 2 || a.shape(1) != kParamsPerGaussian) {
    throw std::invalid_argument("expected an (N, " + std::to_string(kParamsPerGaussian) + ") array");
  }
  scene.gaussians.resize(a.shape(0));
  auto m = a.unchecked<2>();
  for (std::size_t i = 0; i < scene.size(); ++i) {
    for (int s = 0; s < kParamsPerGaussian; ++s) raw_parameter(scene.gaussians[i], s) = m(i, s);
  }
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sorting-free stochastic renderer for 3D Gaussian splats";
  m.attr("PARAMS_PER_GAUSSIAN") = kParamsPerGaussian;

  py::enum_<DepthMode>(m, "DepthMode")
      .value("MEAN", DepthMode::kMean)
      .value("PLANE", DepthMode::kPlane)
      .value("FREEFLIGHT", DepthMode::kFreeFlight);
  py::enum_<Loss>(m, "Loss").value("L1", Loss::kL1).value("L2", Loss::kL2);

  py::class_<Gaussian3D>(m, "Gaussian")
      .def(py::init<>())
      .def_readwrite("position", &Gaussian3D::position)
      .def_readwrite("log_scale", &Gaussian3D::log_scale)
      .def_readwrite("rotation", &Gaussian3D::rotation)
      .def_readwrite("opacity_logit", &Gaussian3D::opacity_logit)
      .def_readwrite("id", &Gaussian3D::id)
      .def_property(
          "sh_dc", [](const Gaussian3D& g) { return g.sh[0]; }, [](Gaussian3D& g, const Vec3& v) { g.sh[0] = v; })
      .def_property_readonly("opacity", &Gaussian3D::opacity);

  py::class_<Scene>(m, "Scene")
      .def(py::init<>())
      .def_readwrite("gaussians", &Scene::gaussians)
      .def_readwrite("sh_degree", &Scene::sh_degree)
      .def("__len__", &Scene::size)
      .def("assign_sequential_ids", &Scene::assign_sequential_ids)
      .def("validate", &Scene::validate)
      .def("parameters", &scene_parameters, "(N, 59) raw parameters")
      .def("set_parameters", &set_scene_parameters, py::arg("params"));

  py::class_<Camera>(m, "Camera")
      .def(py::init<>())
      .def_readwrite("width", &Camera::width)
      .def_readwrite("height", &Camera::height)
      .def_readwrite("fx", &Camera::fx)
      .def_readwrite("fy", &Camera::fy)
      .def_readwrite("cx", &Camera::cx)
      .def_readwrite("cy", &Camera::cy)
      .def_readwrite("rotation", &Camera::rotation)
      .def_readwrite("translation", &Camera::translation)
      .def("center", &Camera::center)
      .def("validate", &Camera::validate)
      .def_static("look_at", &Camera::look_at, py::arg("eye"), py::arg("target"), py::arg("up"), py::arg("width"),
                  py::arg("height"), py::arg("focal"));

  py::class_<RenderConfig>(m, "RenderConfig")
      .def(py::init<>())
      .def(py::init([](int spp, DepthMode mode, std::uint64_t seed, const Rgb& background) {
             RenderConfig c;
             c.spp = spp;
             c.depth_mode = mode;
             c.pass_seed = seed;
             c.background = background;
             return c;
           }),
           py::arg("spp") = 1, py::arg("depth_mode") = DepthMode::kMean, py::arg("pass_seed") = 0,
           py::arg("background") = Rgb::Zero())
      .def_readwrite("spp", &RenderConfig::spp)
      .def_readwrite("depth_mode", &RenderConfig::depth_mode)
      .def_readwrite("pass_seed", &RenderConfig::pass_seed)
      .def_readwrite("background", &RenderConfig::background)
      .def_readwrite("tile_size", &RenderConfig::tile_size)
      .def_readwrite("early_stop_transmittance", &RenderConfig::early_stop_transmittance)
      .def_readwrite("alpha_cutoff", &RenderConfig::alpha_cutoff)
      .def_readwrite("dilation", &RenderConfig::dilation)
      .def("validate", &RenderConfig::validate);

  m.def(
      "render_stochastic",
      [](const Scene& s, const Camera& c, const RenderConfig& cfg) {
        Image img;
        {
          py::gil_scoped_release release;
          img = render_stochastic(s, c, cfg);
        }
        return to_numpy(img);
      },
      py::arg("scene"), py::arg("camera"), py::arg("config") = RenderConfig{});
  m.def(
      "render_sorted",
      [](const Scene& s, const Camera& c, const RenderConfig& cfg) {
        Image img;
        {
          py::gil_scoped_release release;
          img = render_sorted_ab(s, c, cfg);
        }
        return to_numpy(img);
      },
      py::arg("scene"), py::arg("camera"), py::arg("config") = RenderConfig{});

  m.def(
      "path_replay_backward",
      [](const Scene& s, const Camera& c, const RenderConfig& cfg, const Array& target, Loss loss) {
        const BackwardResult r = path_replay_backward(s, c, cfg, from_numpy(target), loss);
        return py::make_tuple(gradients_to_numpy(r.grads), r.loss, to_numpy(r.loss_image));
      },
      py::arg("scene"), py::arg("camera"), py::arg("config"), py::arg("target"), py::arg("loss") = Loss::kL2,
      "Returns (gradients (N, 59), loss, rendered image).");
  m.def(
      "sorted_backward",
      [](const Scene& s, const Camera& c, const RenderConfig& cfg, const Array& target, Loss loss) {
        const Image rendered = render_sorted_ab(s, c, cfg);
        const Image dl = loss_grad(rendered, from_numpy(target), loss);
        return gradients_to_numpy(sorted_backward(s, c, cfg, dl));
      },
      py::arg("scene"), py::arg("camera"), py::arg("config"), py::arg("target"), py::arg("loss") = Loss::kL2);

  m.def("mse", [](const Array& a, const Array& b) { return mse(from_numpy(a), from_numpy(b)); });
  m.def("psnr", [](const Array& a, const Array& b) { return psnr(from_numpy(a), from_numpy(b)); });
  m.def("ssim", [](const Array& a, const Array& b) { return ssim(from_numpy(a), from_numpy(b)); });
  m.def("max_abs_diff", [](const Array& a, const Array& b) { return max_abs_diff(from_numpy(a), from_numpy(b)); });

  m.def("load_ply", [](const std::filesystem::path& p) { return load_ply(p); });
  m.def("save_ply", [](const Scene& s, const std::filesystem::path& p) { save_ply(s, p); });
  m.def("read_image", [](const std::filesystem::path& p) { return to_numpy(read_image(p)); });
  m.def("write_image", [](const Array& a, const std::filesystem::path& p) { write_image(from_numpy(a), p); });

  m.def("orbit_camera", &orbit_camera, py::arg("width"), py::arg("height"), py::arg("focal"), py::arg("distance"),
        py::arg("azimuth") = 0.0, py::arg("elevation") = 0.0);
  m.def(
      "random_scene",
      [](int count, std::uint64_t seed, double extent, int sh_degree) {
        RandomSceneOptions o;
        o.count = count;
        o.seed = seed;
        o.extent = extent;
        o.sh_degree = sh_degree;
        return random_scene(o);
      },
      py::arg("count") = 8, py::arg("seed") = 1, py::arg("extent") = 0.5, py::arg("sh_degree") = 0);
  m.def("overlap_scene", &overlap_scene, py::arg("count"), py::arg("seed"), py::arg("opacity") = 0.05);
  m.def("crossing_scene", &crossing_scene);
  m.def("crossing_camera", &crossing_camera, py::arg("width"), py::arg("height"), py::arg("yaw"));
  m.def("planar_scene", &planar_scene, py::arg("grid"), py::arg("seed"));
}
