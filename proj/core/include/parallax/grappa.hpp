#pragma once

#include "sampling.hpp"
#include "tensor.hpp"

#include <optional>

namespace parallax::grappa {

/*
 * Kernel geometry. Lines are phase-encode columns (the mask axis); taps run
 * along the readout rows. A missing column at offset d (1 <= d < accel) from
 * its lattice column a is predicted from columns a + (j - (source_lines/2 - 1)) * accel,
 * j = 0 .. source_lines-1, i.e. source_lines/2 lattice lines on each side.
 */
struct Geometry
{
  int accel = 2;
  int source_lines = 4;
  int readout_taps = 5;
  bool operator==(Geometry const &) const = default;
};

struct CalibrationOptions
{
  Geometry geometry;
  // Absolute ridge weight. Unset: 1e-6 * ||A||_F^2 / columns(A), per offset.
  std::optional<double> ridge;
};

// Complex convolution weights, shape (accel - 1, coils_out, coils_in, source_lines, readout_taps).
struct Kernel
{
  Geometry geometry;
  Index coils = 0;
  ComplexTensor weights;
  double ridge = 0; // largest ridge weight actually used

  Cx weight(Index offset, Index out, Index in, Index line, Index tap) const
  {
    auto const L = geometry.source_lines, T = geometry.readout_taps;
    return weights[(((offset - 1) * coils + out) * coils + in) * L * T + line * T + tap];
  }
};

// Fully sampled central block (coils, H, acs columns).
struct AcsRegion
{
  ComplexTensor data;
};

AcsRegion extract_acs(ComplexTensor const &k, SamplingMask const &m);

Kernel calibrate(AcsRegion const &acs, CalibrationOptions const &options);

// Fills every unsampled column from the stride lattice; sampled columns pass through.
ComplexTensor apply(ComplexTensor const &k_under, SamplingMask const &m, Kernel const &g);

// Adjoint of apply() for fixed (m, g), used for back-propagation.
ComplexTensor apply_adjoint(ComplexTensor const &grad_out, SamplingMask const &m, Kernel const &g);

// extract_acs -> calibrate -> apply. accel == 1 returns the input unchanged.
ComplexTensor reconstruct(ComplexTensor const &k_under, SamplingMask const &m, CalibrationOptions const &options);

} // namespace parallax::grappa
