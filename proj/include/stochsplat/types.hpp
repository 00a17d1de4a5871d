#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <limits>

namespace stochsplat {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Rgb = Eigen::Array3d;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Opacity below which a fragment is treated as empty (1/255).
inline constexpr double kDefaultAlphaCutoff = 1.0 / 255.0;

/// Upper clamp applied to every fragment opacity.
inline constexpr double kMaxAlpha = 0.99999;

/// Low-pass filter added to the projected covariance diagonal, in px^2.
inline constexpr double kDefaultDilation = 0.3;

}  // namespace stochsplat
