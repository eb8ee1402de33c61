#pragma once

#include "sampling.hpp"
#include "tensor.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace parallax {

// Root sum-of-squares across the leading coil axis: (N, H, W) -> (H, W).
template <typename V> Tensor<real_of_t<V>> rss(Tensor<V> const &coil_images);

RealImage zero_filled_recon(ComplexTensor const &k_under);

struct SensitivityMaps
{
  ComplexTensor maps; // (N, H, W), zero outside support
  MaskTensor support; // (H, W)
};

SensitivityMaps estimate_sensitivities(ComplexTensor const &k_under, SamplingMask const &m, double threshold = 0.05);

// Huber-smoothed isotropic total variation of a complex image.
double total_variation(ComplexTensor const &x, double eps = 1e-6);

struct CsOptions
{
  std::optional<double> lambda; // unset: 1e-3 * ||k_under|| / sqrt(HW)
  int iterations = 200;
  double step = 1.0;
  double eps = 1e-6;
};

struct CsTraceRow
{
  int iteration;
  double data_term;
  double tv_term;
  double total;
};

struct CsResult
{
  ComplexTensor image; // (H, W)
  std::vector<CsTraceRow> trace;
  double lambda = 0;
};

/*
 * Gradient descent with Armijo backtracking on
 *   1/2 sum_i ||M F(S_i x) - k_i||^2 + lambda * TV_eps(x),
 * starting from the coil-combined adjoint. Iteration 0 of the trace is the start point.
 */
CsResult cs_tv_reconstruct(ComplexTensor const &k_under, SamplingMask const &m, SensitivityMaps const &maps,
                           CsOptions const &options = {});

void write_trace_csv(std::ostream &os, std::vector<CsTraceRow> const &trace);

} // namespace parallax
