#pragma once

#include "tensor.hpp"

#include <cstdint>

namespace parallax::postprocess {

inline constexpr double kSigmaNonFatSuppressed = 0.025;
inline constexpr double kSigmaFatSuppressed = 0.05;

// Median over a patch x patch neighbourhood; indices clamp at the borders.
RealImage median_filter(RealImage const &img, Index patch = 11);

/*
 * Brightness-adaptive dither: normalize by the maximum, median filter (11x11),
 * square root, then add zero-mean Gaussian noise whose std is sigma times that
 * value. Rows draw from independent counter-seeded streams.
 */
RealImage dither(RealImage const &img, double sigma, std::uint64_t seed, Index patch = 11);

} // namespace parallax::postprocess
