#pragma once

#include "stochsplat/image.hpp"

namespace stochsplat {

/// mse, psnr and ssim clamp both inputs to [0, 1] first; the absolute
/// differences do not.
double mse(const Image& a, const Image& b);
double mean_abs_diff(const Image& a, const Image& b);
double max_abs_diff(const Image& a, const Image& b);

/// -10 log10(mse) for signals in [0, 1]; 100 when mse < 1e-10.
double psnr(const Image& a, const Image& b);

/// Structural similarity with an 11x11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03, L = 1, over valid window positions, averaged over
/// channels. Images narrower than the window use a window of their size.
double ssim(const Image& a, const Image& b);

}  // namespace stochsplat
