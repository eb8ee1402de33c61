#pragma once

#include "recon.hpp"
#include "sampling.hpp"
#include "tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace parallax::phantom {

enum class Contrast
{
  Pd,   // proton density: broad intensity range
  Pdfs, // fat suppressed: lower signal, hence lower SNR at equal noise
};

std::string contrast_name(Contrast c);
Contrast parse_contrast(std::string const &s);

struct PhantomSpec
{
  Index height = 128;
  Index width = 160;
  Index coils = 15;
  Index ellipses = 10;
  std::uint64_t seed = 0;
  double noise_std = 0.0;
  Contrast contrast = Contrast::Pd;
  std::optional<std::uint64_t> coil_seed; // unset: derived from seed
};

struct Phantom
{
  ComplexTensor image; // (H, W): piecewise-constant magnitude, linear phase
  SensitivityMaps maps; // (N, H, W): RSS == 1 and coil 0 real on the object support
};

Phantom make_phantom(PhantomSpec const &spec);

// k_i = M (F(S_i x) + e_i); real and imaginary parts of e_i each have std noise_std.
ComplexTensor simulate_acquisition(ComplexTensor const &image, SensitivityMaps const &maps, SamplingMask const &m,
                                   double noise_std, std::uint64_t seed);

struct Sample
{
  std::string id;
  Index volume = 0;
  Index slice = 0;
  std::uint64_t seed = 0;
  Contrast contrast = Contrast::Pd;
  std::string split;
  ComplexTensor kspace; // fully sampled, noisy (N, H, W)
  RealImage target;     // RSS of the fully sampled coil images
  SensitivityMaps maps;
};

/*
 * Deterministic in-memory dataset: coil geometry per volume, object per
 * slice, 70/15/15 train/val/test split over a seeded permutation of samples.
 */
std::vector<Sample> generate_samples(Index volumes, Index slices, PhantomSpec const &spec, std::uint64_t seed);

// generate_samples() persisted as CFL pairs plus manifest.json under dir.
std::vector<Sample> make_dataset(std::filesystem::path const &dir, Index volumes, Index slices, PhantomSpec const &spec,
                                 std::uint64_t seed);

} // namespace parallax::phantom
