#pragma once

#include "tensor.hpp"

namespace parallax {

/*
 * Centered, orthonormal 2D DFT over the last two axes, applied independently
 * to every leading index. Equivalent to fftshift(FFT(ifftshift(x))) / sqrt(HW);
 * the DC bin sits at (H/2, W/2) with integer division, also for odd sizes.
 */
template <typename S> Tensor<std::complex<S>> fft2c(Tensor<std::complex<S>> const &x);
template <typename S> Tensor<std::complex<S>> ifft2c(Tensor<std::complex<S>> const &k);

} // namespace parallax
