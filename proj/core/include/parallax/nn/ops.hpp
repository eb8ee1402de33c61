#pragma once

#include "../grappa.hpp"
#include "../metrics.hpp"
#include "../sampling.hpp"
#include "tape.hpp"

namespace parallax::nn {

/*
 * Differentiable primitives. Real tensors are (channels, H, W); multi-coil
 * complex data uses the paired layout (2N, H, W) with channel 2c the real
 * and 2c + 1 the imaginary part of coil c.
 */

template <typename T> Tensor<T> to_paired(ComplexTensor const &k);
template <typename T> ComplexTensor from_paired(Tensor<T> const &x);

// Stride-1 convolution with zero padding; w is (out, in, k, k), bias optional.
template <typename T> Var conv2d(Tape<T> &tape, Var x, Var w, Var bias, Index pad);
template <typename T> Var conv2d(Tape<T> &tape, Var x, Var w, Index pad);

// 2x2 stride-2 transposed convolution; w is (in, out, 2, 2).
template <typename T> Var conv_transpose2x2(Tape<T> &tape, Var x, Var w);

// Per-channel normalization with population variance, no affine terms.
template <typename T> Var instance_norm(Tape<T> &tape, Var x, double eps = 1e-5);
template <typename T> Var leaky_relu(Tape<T> &tape, Var x, double slope = 0.2);
template <typename T> Var avg_pool2(Tape<T> &tape, Var x);
template <typename T> Var concat(Tape<T> &tape, Var a, Var b);
template <typename T> Var add(Tape<T> &tape, Var a, Var b);

// Mirror padding on the bottom/right edges, and the matching top-left crop.
template <typename T> Var reflect_pad(Tape<T> &tape, Var x, Index pad_h, Index pad_w);
template <typename T> Var crop(Tape<T> &tape, Var x, Index h, Index w);
template <typename T> Var center_crop(Tape<T> &tape, Var x, Index h, Index w);

template <typename T> Var fft2c(Tape<T> &tape, Var x);
template <typename T> Var ifft2c(Tape<T> &tape, Var x);

// observed (paired) at sampled columns of m, x elsewhere.
template <typename T> Var data_consistency(Tape<T> &tape, Var x, Tensor<T> const &observed, SamplingMask const &m);

// data_consistency, then zero every column outside keep.
template <typename T>
Var restrict_to(Tape<T> &tape, Var x, Tensor<T> const &observed, SamplingMask const &m, SamplingMask const &keep);

// Fixed-kernel GRAPPA fill of unsampled columns; gradients flow to x only.
template <typename T> Var grappa_apply(Tape<T> &tape, Var x, SamplingMask const &m, grappa::Kernel const &kernel);

// (2N, H, W) paired -> (H, W).
template <typename T> Var rss(Tape<T> &tape, Var x);

// -SSIM(x_hat, target) + lambda * ||x_hat - target||_1 over (H, W) images.
template <typename T>
Var ssim_l1_loss(Tape<T> &tape, Var x_hat, Tensor<T> const &target, double data_range, double lambda,
                 metrics::SsimParams const &p = {});

// sum(weights * x); a scalar probe used by gradient checks.
template <typename T> Var dot(Tape<T> &tape, Var x, Tensor<T> const &weights);

} // namespace parallax::nn
