#include "parallax/sampling.hpp"
#include "parallax/rng.hpp"

#include <nlohmann/json.hpp>

namespace parallax {

SamplingMask::SamplingMask(std::vector<std::uint8_t> sampled, AcsRange acs, int acceleration,
                           double center_fraction, std::uint64_t seed)
  : sampled_{std::move(sampled)}
  , acs_{acs}
  , acceleration_{acceleration}
  , center_fraction_{center_fraction}
  , seed_{seed}
{
  if (acs_.begin < 0 || acs_.end > width() || acs_.begin > acs_.end) {
    fail(ErrorCategory::Config, "ACS range outside mask width");
  }
  for (Index c = acs_.begin; c < acs_.end; c++) { sampled_[static_cast<std::size_t>(c)] = 1; }
}

std::vector<Index> SamplingMask::sampled_indices() const
{
  std::vector<Index> out;
  for (Index c = 0; c < width(); c++) {
    if (sampled(c)) { out.push_back(c); }
  }
  return out;
}

Index SamplingMask::sampled_count() const
{
  return static_cast<Index>(std::count_if(sampled_.begin(), sampled_.end(), [](auto v) { return v != 0; }));
}

double SamplingMask::sampled_fraction() const
{
  return width() ? static_cast<double>(sampled_count()) / static_cast<double>(width()) : 0.0;
}

SamplingMask SamplingMask::united(SamplingMask const &other) const
{
  if (other.width() != width()) { fail(ErrorCategory::ShapeMismatch, "mask width mismatch in union"); }
  auto cols = sampled_;
  for (std::size_t i = 0; i < cols.size(); i++) { cols[i] = cols[i] || other.sampled_[i]; }
  return SamplingMask(std::move(cols), acs_, acceleration_, center_fraction_, seed_);
}

std::string SamplingMask::to_json() const
{
  nlohmann::ordered_json j;
  j["width"] = width();
  j["acceleration"] = acceleration_;
  j["center_fraction"] = center_fraction_;
  j["seed"] = seed_;
  j["sampled"] = sampled_indices();
  return j.dump();
}

SamplingMask SamplingMask::from_json(std::string const &text)
{
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (nlohmann::json::exception const &e) {
    fail(ErrorCategory::MalformedHeader, std::string("mask JSON: ") + e.what());
  }
  for (auto const *key : {"width", "acceleration", "center_fraction", "seed", "sampled"}) {
    if (!j.contains(key)) { fail(ErrorCategory::MalformedHeader, std::string("mask JSON missing ") + key); }
  }
  Index const width = j["width"].get<Index>();
  double const cf = j["center_fraction"].get<double>();
  std::vector<std::uint8_t> cols(static_cast<std::size_t>(width), 0);
  for (auto const c : j["sampled"].get<std::vector<Index>>()) {
    if (c < 0 || c >= width) { fail(ErrorCategory::MalformedHeader, "mask JSON column out of range"); }
    cols[static_cast<std::size_t>(c)] = 1;
  }
  auto const acs = centered_acs(width, acs_count(width, cf));
  for (Index c = acs.begin; c < acs.end; c++) {
    if (!cols[static_cast<std::size_t>(c)]) { fail(ErrorCategory::MalformedHeader, "mask JSON ACS column not sampled"); }
  }
  return SamplingMask(std::move(cols), acs, j["acceleration"].get<int>(), cf, j["seed"].get<std::uint64_t>());
}

Index acs_count(Index width, double center_fraction)
{
  auto const n = static_cast<Index>(std::ceil(static_cast<double>(width) * center_fraction - 1e-9));
  return std::clamp<Index>(n, 0, width);
}

AcsRange centered_acs(Index width, Index n)
{
  Index const pad = (width - n + 1) / 2;
  return {pad, pad + n};
}

namespace {

void check_mask_args(Index width, int acceleration, double center_fraction)
{
  if (width < 1) { fail(ErrorCategory::Config, "mask width must be positive"); }
  if (acceleration < 1) { fail(ErrorCategory::Config, "acceleration must be >= 1"); }
  if (center_fraction < 0 || center_fraction >= 1) { fail(ErrorCategory::Config, "center fraction must lie in [0, 1)"); }
}

} // namespace

SamplingMask make_random_mask(Index width, int acceleration, double center_fraction, std::uint64_t seed)
{
  check_mask_args(width, acceleration, center_fraction);
  if (center_fraction <= 0) { fail(ErrorCategory::Config, "random masks need a positive center fraction"); }
  double const w = static_cast<double>(width);
  double const center = w * center_fraction;
  double const p = (w / acceleration - center) / (w - center);
  if (p < 0) {
    fail(ErrorCategory::Config, "ACS alone exceeds the sampling budget for acceleration " + std::to_string(acceleration));
  }
  auto const acs = centered_acs(width, acs_count(width, center_fraction));
  Rng rng(seed);
  std::vector<std::uint8_t> cols(static_cast<std::size_t>(width), 0);
  // One draw per column, ACS included, so the draw order is independent of the ACS.
  for (Index c = 0; c < width; c++) { cols[static_cast<std::size_t>(c)] = rng.uniform() < std::min(p, 1.0); }
  return SamplingMask(std::move(cols), acs, acceleration, center_fraction, seed);
}

SamplingMask equispaced_mask_with_offset(Index width, int acceleration, double center_fraction, Index offset,
                                         std::uint64_t seed)
{
  check_mask_args(width, acceleration, center_fraction);
  if (offset < 0 || offset >= acceleration) { fail(ErrorCategory::Config, "lattice offset must lie in [0, R)"); }
  auto const acs = centered_acs(width, acs_count(width, center_fraction));
  if (acs.size() > 0 && width / static_cast<double>(acceleration) < center_fraction * static_cast<double>(width)) {
    fail(ErrorCategory::Config, "ACS alone exceeds the sampling budget for acceleration " + std::to_string(acceleration));
  }
  std::vector<std::uint8_t> cols(static_cast<std::size_t>(width), 0);
  for (Index c = offset; c < width; c += acceleration) { cols[static_cast<std::size_t>(c)] = 1; }
  return SamplingMask(std::move(cols), acs, acceleration, center_fraction, seed);
}

SamplingMask make_equispaced_mask(Index width, int acceleration, double center_fraction, std::uint64_t seed)
{
  check_mask_args(width, acceleration, center_fraction);
  Rng rng(seed);
  auto const offset = static_cast<Index>(rng.below(static_cast<std::uint64_t>(acceleration)));
  return equispaced_mask_with_offset(width, acceleration, center_fraction, offset, seed);
}

SamplingMask full_mask(Index width)
{
  return SamplingMask(std::vector<std::uint8_t>(static_cast<std::size_t>(width), 1), {0, width}, 1, 1.0, 0);
}

std::optional<Index> lattice_offset(SamplingMask const &m, int stride)
{
  for (Index phi = 0; phi < stride; phi++) {
    bool ok = true;
    for (Index c = phi; c < m.width() && ok; c += stride) { ok = m.sampled(c); }
    if (ok) { return phi; }
  }
  return std::nullopt;
}

SamplingMask aligned_lattice(SamplingMask const &m, int stride)
{
  Index best = 0, best_count = -1;
  for (Index phi = 0; phi < stride; phi++) {
    Index count = 0;
    for (Index c = phi; c < m.width(); c += stride) { count += m.sampled(c); }
    if (count > best_count) {
      best = phi;
      best_count = count;
    }
  }
  std::vector<std::uint8_t> cols(static_cast<std::size_t>(m.width()), 0);
  for (Index c = best; c < m.width(); c += stride) { cols[static_cast<std::size_t>(c)] = 1; }
  return SamplingMask(std::move(cols), {0, 0}, stride, 0.0, 0);
}

template <typename V> Tensor<V> apply_mask(Tensor<V> const &k, SamplingMask const &m)
{
  if (k.rank() < 1 || k.dim(-1) != m.width()) {
    fail(ErrorCategory::ShapeMismatch, "mask width " + std::to_string(m.width()) + " vs k-space " + shape_string(k.shape()));
  }
  Tensor<V> out(k.shape());
  Index const W = m.width();
  for (Index i = 0; i < k.size(); i++) {
    if (m.sampled(i % W)) { out[i] = k[i]; }
  }
  return out;
}

template <typename V> Tensor<V> data_consistency(Tensor<V> const &k_pred, Tensor<V> const &k_obs, SamplingMask const &m)
{
  require_same_shape(k_pred.shape(), k_obs.shape(), "data_consistency");
  if (k_pred.dim(-1) != m.width()) { fail(ErrorCategory::ShapeMismatch, "data_consistency: mask width mismatch"); }
  Tensor<V> out(k_pred.shape());
  Index const W = m.width();
  for (Index i = 0; i < k_pred.size(); i++) { out[i] = m.sampled(i % W) ? k_obs[i] : k_pred[i]; }
  return out;
}

template Tensor<Cx> apply_mask(Tensor<Cx> const &, SamplingMask const &);
template Tensor<Cxf> apply_mask(Tensor<Cxf> const &, SamplingMask const &);
template Tensor<Cx> data_consistency(Tensor<Cx> const &, Tensor<Cx> const &, SamplingMask const &);
template Tensor<Cxf> data_consistency(Tensor<Cxf> const &, Tensor<Cxf> const &, SamplingMask const &);

} // namespace parallax
