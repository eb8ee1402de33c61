#include "parallax/postprocess.hpp"
#include "parallax/parallel.hpp"
#include "parallax/rng.hpp"

#include <iostream>

namespace parallax::postprocess {

RealImage median_filter(RealImage const &img, Index patch)
{
  if (patch < 1 || patch % 2 == 0) { fail(ErrorCategory::InvalidInput, "median patch size must be odd"); }
  if (img.rank() != 2) { fail(ErrorCategory::ShapeMismatch, "median_filter expects an (H, W) image"); }
  Index const H = img.dim(0), W = img.dim(1), r = patch / 2;
  RealImage out(img.shape());
  parallel_for(H, [&](Index y) {
    std::vector<double> window(static_cast<std::size_t>(patch * patch));
    for (Index x = 0; x < W; x++) {
      std::size_t n = 0;
      for (Index dy = -r; dy <= r; dy++) {
        Index const yy = std::clamp<Index>(y + dy, 0, H - 1);
        for (Index dx = -r; dx <= r; dx++) { window[n++] = img(yy, std::clamp<Index>(x + dx, 0, W - 1)); }
      }
      auto mid = window.begin() + static_cast<std::ptrdiff_t>(window.size() / 2);
      std::nth_element(window.begin(), mid, window.end());
      out(y, x) = *mid;
    }
  });
  return out;
}

RealImage dither(RealImage const &img, double sigma, std::uint64_t seed, Index patch)
{
  if (sigma < 0) { fail(ErrorCategory::InvalidInput, "dither sigma must be >= 0"); }
  if (img.rank() != 2) { fail(ErrorCategory::ShapeMismatch, "dither expects an (H, W) image"); }
  if (sigma == 0) { return img; }
  double const peak = *std::max_element(img.data().begin(), img.data().end());
  if (!(peak > 0)) {
    std::cerr << "warning: dither input has no positive pixels; returned unchanged\n";
    return img;
  }
  auto const blurred = median_filter(scale(img, 1.0 / peak), patch);
  Index const H = img.dim(0), W = img.dim(1);
  RealImage out(img.shape());
  parallel_for(H, [&](Index y) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(y)));
    for (Index x = 0; x < W; x++) {
      double const level = std::sqrt(std::max(blurred(y, x), 0.0));
      out(y, x) = img(y, x) + sigma * level * rng.normal();
    }
  });
  return out;
}

} // namespace parallax::postprocess
