#pragma once

#include "tensor.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace parallax {

// Half-open column interval [begin, end).
struct AcsRange
{
  Index begin = 0;
  Index end = 0;
  Index size() const { return end - begin; }
  bool contains(Index c) const { return c >= begin && c < end; }
  bool operator==(AcsRange const &) const = default;
};

/*
 * Cartesian line mask over the last (phase-encode) axis. Every coil and every
 * readout row shares the same column pattern.
 */
class SamplingMask
{
public:
  SamplingMask() = default;
  SamplingMask(std::vector<std::uint8_t> sampled, AcsRange acs, int acceleration, double center_fraction,
               std::uint64_t seed);

  Index width() const { return static_cast<Index>(sampled_.size()); }
  bool sampled(Index column) const { return sampled_[static_cast<std::size_t>(column)] != 0; }
  std::vector<std::uint8_t> const &columns() const { return sampled_; }
  AcsRange acs() const { return acs_; }
  int acceleration() const { return acceleration_; }
  double center_fraction() const { return center_fraction_; }
  std::uint64_t seed() const { return seed_; }

  std::vector<Index> sampled_indices() const;
  Index sampled_count() const;
  double sampled_fraction() const;
  bool fully_sampled() const { return sampled_count() == width(); }

  // Columns sampled in either mask; ACS and metadata come from *this.
  SamplingMask united(SamplingMask const &other) const;

  // One-line record: {"width","acceleration","center_fraction","seed","sampled"}.
  std::string to_json() const;
  static SamplingMask from_json(std::string const &text);

  bool operator==(SamplingMask const &) const = default;

private:
  std::vector<std::uint8_t> sampled_;
  AcsRange acs_;
  int acceleration_ = 1;
  double center_fraction_ = 0;
  std::uint64_t seed_ = 0;
};

// ceil(width * center_fraction), tolerant of round-off (0.15 * 160 is 24).
Index acs_count(Index width, double center_fraction);

// ACS of n columns centered on width / 2.
AcsRange centered_acs(Index width, Index n);

SamplingMask make_random_mask(Index width, int acceleration, double center_fraction, std::uint64_t seed);
SamplingMask make_equispaced_mask(Index width, int acceleration, double center_fraction, std::uint64_t seed);
SamplingMask equispaced_mask_with_offset(Index width, int acceleration, double center_fraction, Index offset,
                                         std::uint64_t seed = 0);
SamplingMask full_mask(Index width);

// Offset phi in [0, stride) such that every column phi + j * stride is sampled.
std::optional<Index> lattice_offset(SamplingMask const &m, int stride);

// Stride-`stride` lattice whose phase best overlaps the sampled columns of m.
SamplingMask aligned_lattice(SamplingMask const &m, int stride);

template <typename V> Tensor<V> apply_mask(Tensor<V> const &k, SamplingMask const &m);

// Observed data at sampled columns, prediction elsewhere.
template <typename V> Tensor<V> data_consistency(Tensor<V> const &k_pred, Tensor<V> const &k_obs, SamplingMask const &m);

} // namespace parallax
