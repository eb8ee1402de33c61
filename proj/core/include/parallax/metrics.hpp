#pragma once

#include "tensor.hpp"

#include <iosfwd>
#include <limits>
#include <vector>

namespace parallax::metrics {

struct SsimParams
{
  Index window = 7;
  double k1 = 0.01;
  double k2 = 0.03;
};

template <typename T> double nmse(Tensor<T> const &x_hat, Tensor<T> const &x);

// +infinity when the images are identical.
template <typename T> double psnr(Tensor<T> const &x_hat, Tensor<T> const &x, double data_range);

/*
 * Mean SSIM over every valid window position (no padding) with uniform
 * windows and population (1/n) statistics. Inputs are (H, W) or (1, H, W).
 */
template <typename T> double ssim(Tensor<T> const &x_hat, Tensor<T> const &x, double data_range, SsimParams const &p = {});

template <typename T> struct SsimGradient
{
  double value;
  Tensor<T> d_xhat; // d mean-SSIM / d x_hat
};

// Same statistics as ssim(), plus the gradient with respect to x_hat.
template <typename T>
SsimGradient<T> ssim_with_gradient(Tensor<T> const &x_hat, Tensor<T> const &x, double data_range, SsimParams const &p = {});

struct MetricReport
{
  std::vector<double> nmse, psnr, ssim; // per slice
  double mean_nmse = 0, mean_psnr = 0, mean_ssim = 0;
  int psnr_excluded = 0; // identical slices (infinite PSNR) left out of mean_psnr
};

/*
 * Per-slice metrics and volume means. data_range <= 0 selects the maximum of
 * the reference volume.
 */
MetricReport evaluate(std::vector<RealImage> const &pred, std::vector<RealImage> const &target, double data_range = 0);

void write_report_csv(std::ostream &os, MetricReport const &r);
void write_report_json(std::ostream &os, MetricReport const &r);

} // namespace parallax::metrics
