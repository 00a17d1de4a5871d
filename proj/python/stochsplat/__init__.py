"""Stochastic, sorting-free rendering of 3D Gaussian splats."""

from ._core import (
    Camera,
    DepthMode,
    Gaussian,
    Loss,
    RenderConfig,
    Scene,
    crossing_camera,
    crossing_scene,
    load_ply,
    max_abs_diff,
    mse,
    orbit_camera,
    overlap_scene,
    path_replay_backward,
    planar_scene,
    psnr,
    random_scene,
    read_image,
    render_sorted,
    render_stochastic,
    save_ply,
    sorted_backward,
    ssim,
    write_image,
)

__all__ = [
    "Camera",
    "DepthMode",
    "Gaussian",
    "Loss",
    "RenderConfig",
    "Scene",
    "crossing_camera",
    "crossing_scene",
    "load_ply",
    "max_abs_diff",
    "mse",
    "orbit_camera",
    "overlap_scene",
    "path_replay_backward",
    "planar_scene",
    "psnr",
    "random_scene",
    "read_image",
    "render_sorted",
    "render_stochastic",
    "save_ply",
    "sorted_backward",
    "ssim",
    "write_image",
]
