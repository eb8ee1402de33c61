#include "parallax/phantom.hpp"
#include "parallax/fft.hpp"
#include "parallax/io.hpp"
#include "parallax/rng.hpp"

#include <numbers>

namespace parallax::phantom {

namespace {

constexpr double kPi = std::numbers::pi;

struct Ellipse
{
  double cu, cv, a, b, angle, value;

  bool contains(double u, double v) const
  {
    double const c = std::cos(angle), s = std::sin(angle);
    double const du = u - cu, dv = v - cv;
    double const ru = (c * du + s * dv) / a, rv = (-s * du + c * dv) / b;
    return ru * ru + rv * rv <= 1.0;
  }
};

// Normalized coordinates in [-1, 1) with the origin at (H/2, W/2).
double coord(Index i, Index n) { return (static_cast<double>(i) - static_cast<double>(n / 2)) / (0.5 * static_cast<double>(n)); }

} // namespace

std::string contrast_name(Contrast c) { return c == Contrast::Pd ? "pd" : "pdfs"; }

Contrast parse_contrast(std::string const &s)
{
  if (s == "pd") { return Contrast::Pd; }
  if (s == "pdfs") { return Contrast::Pdfs; }
  fail(ErrorCategory::Config, "unknown contrast '" + s + "' (expected pd or pdfs)");
}

Phantom make_phantom(PhantomSpec const &spec)
{
  if (spec.coils < 1) { fail(ErrorCategory::Config, "phantom needs at least one coil"); }
  if (spec.height < 32 || spec.width < 32) { fail(ErrorCategory::Config, "phantom images must be at least 32x32"); }
  Index const H = spec.height, W = spec.width, N = spec.coils;

  Rng rng(derive_seed(spec.seed, 1));
  bool const pd = spec.contrast == Contrast::Pd;
  double const base = pd ? rng.uniform(0.6, 1.0) : rng.uniform(0.25, 0.45);
  double const step = pd ? 0.4 : 0.2;
  Ellipse const body{rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), rng.uniform(0.6, 0.8),
                     rng.uniform(0.65, 0.85),  rng.uniform(-0.3, 0.3),   base};
  std::vector<Ellipse> inner;
  for (Index e = 1; e < spec.ellipses; e++) {
    double const r = 0.6 * std::sqrt(rng.uniform()), t = rng.uniform(0, 2 * kPi);
    inner.push_back({body.cu + r * body.a * std::cos(t), body.cv + r * body.b * std::sin(t), rng.uniform(0.05, 0.3),
                     rng.uniform(0.05, 0.3), rng.uniform(0, kPi), rng.uniform(-0.75 * step, step)});
  }
  double const phase0 = rng.uniform(-kPi, kPi);
  double const ramp_u = rng.uniform(-0.5 * kPi, 0.5 * kPi), ramp_v = rng.uniform(-0.5 * kPi, 0.5 * kPi);

  Phantom out{ComplexTensor({H, W}), {ComplexTensor({N, H, W}), MaskTensor({H, W}, 0)}};
  for (Index y = 0; y < H; y++) {
    double const v = coord(y, H);
    for (Index x = 0; x < W; x++) {
      double const u = coord(x, W);
      if (!body.contains(u, v)) { continue; }
      double mag = body.value;
      for (auto const &e : inner) {
        if (e.contains(u, v)) { mag += e.value; }
      }
      mag = std::max(mag, 0.05 * body.value);
      out.image(y, x) = std::polar(mag, phase0 + ramp_u * u + ramp_v * v);
      out.maps.support(y, x) = 1;
    }
  }

  // Gaussian lobes at equiangular positions just outside the field of view.
  Rng coil_rng(derive_seed(spec.coil_seed ? *spec.coil_seed : spec.seed, 2));
  double const rotation = coil_rng.uniform(0, 2 * kPi);
  struct Lobe
  {
    double cu, cv, width, phase, slope_u, slope_v;
  };
  std::vector<Lobe> lobes;
  for (Index i = 0; i < N; i++) {
    double const t = rotation + 2 * kPi * static_cast<double>(i) / static_cast<double>(N);
    double const rho = coil_rng.uniform(1.0, 1.2);
    lobes.push_back({rho * std::cos(t), rho * std::sin(t), coil_rng.uniform(0.7, 0.9), coil_rng.uniform(-kPi, kPi),
                     coil_rng.uniform(-0.5, 0.5), coil_rng.uniform(-0.5, 0.5)});
  }
  std::vector<Cx> s(static_cast<std::size_t>(N));
  for (Index y = 0; y < H; y++) {
    double const v = coord(y, H);
    for (Index x = 0; x < W; x++) {
      if (!out.maps.support(y, x)) { continue; }
      double const u = coord(x, W);
      double norm = 0;
      for (Index i = 0; i < N; i++) {
        auto const &l = lobes[static_cast<std::size_t>(i)];
        double const d2 = (u - l.cu) * (u - l.cu) + (v - l.cv) * (v - l.cv);
        s[static_cast<std::size_t>(i)] =
          std::polar(std::exp(-d2 / (2 * l.width * l.width)), l.phase + l.slope_u * u + l.slope_v * v);
        norm += std::norm(s[static_cast<std::size_t>(i)]);
      }
      Cx const rot = std::conj(s[0]) / std::abs(s[0]);
      double const inv = 1.0 / std::sqrt(norm);
      for (Index i = 0; i < N; i++) { out.maps.maps(i, y, x) = s[static_cast<std::size_t>(i)] * rot * inv; }
      out.maps.maps(0, y, x) = Cx(std::abs(s[0]) * inv, 0);
    }
  }
  return out;
}

ComplexTensor simulate_acquisition(ComplexTensor const &image, SensitivityMaps const &maps, SamplingMask const &m,
                                   double noise_std, std::uint64_t seed)
{
  if (image.rank() != 2) { fail(ErrorCategory::ShapeMismatch, "simulate_acquisition expects an (H, W) image"); }
  Index const N = maps.maps.dim(0), H = image.dim(0), W = image.dim(1);
  require_same_shape(maps.maps.shape(), Shape{N, H, W}, "simulate_acquisition maps");
  ComplexTensor coils({N, H, W});
  for (Index i = 0; i < N; i++) {
    for (Index p = 0; p < H * W; p++) { coils[i * H * W + p] = maps.maps[i * H * W + p] * image[p]; }
  }
  auto k = fft2c(coils);
  if (noise_std > 0) {
    Rng rng(seed);
    for (auto &v : k.data()) {
      double const re = rng.normal(), im = rng.normal();
      v += Cx(noise_std * re, noise_std * im);
    }
  }
  return apply_mask(k, m);
}

std::vector<Sample> generate_samples(Index volumes, Index slices, PhantomSpec const &spec, std::uint64_t seed)
{
  if (volumes < 1 || slices < 1) { fail(ErrorCategory::Config, "dataset needs at least one volume and one slice"); }
  Index const n = volumes * slices;
  std::vector<Sample> samples;
  samples.reserve(static_cast<std::size_t>(n));
  for (Index v = 0; v < volumes; v++) {
    for (Index s = 0; s < slices; s++) {
      PhantomSpec ps = spec;
      ps.seed = derive_seed(seed, static_cast<std::uint64_t>(v * slices + s));
      ps.coil_seed = derive_seed(seed ^ 0x5851F42D4C957F2DULL, static_cast<std::uint64_t>(v));
      auto ph = make_phantom(ps);
      Sample smp;
      char id[64];
      std::snprintf(id, sizeof(id), "vol%03td_slice%02td", v, s);
      smp.id = id;
      smp.volume = v;
      smp.slice = s;
      smp.seed = ps.seed;
      smp.contrast = ps.contrast;
      smp.kspace = simulate_acquisition(ph.image, ph.maps, full_mask(spec.width), spec.noise_std, derive_seed(ps.seed, 3));
      smp.target = rss(ifft2c(smp.kspace));
      smp.maps = std::move(ph.maps);
      samples.push_back(std::move(smp));
    }
  }
  // Seeded Fisher-Yates permutation decides the split.
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, 0xC0FFEE));
  for (Index i = n - 1; i > 0; i--) {
    auto const j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  auto const n_train = static_cast<Index>(std::llround(0.70 * static_cast<double>(n)));
  auto const n_val = static_cast<Index>(std::llround(0.15 * static_cast<double>(n)));
  for (Index r = 0; r < n; r++) {
    auto &smp = samples[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])];
    smp.split = r < n_train ? "train" : (r < n_train + n_val ? "val" : "test");
  }
  return samples;
}

std::vector<Sample> make_dataset(std::filesystem::path const &dir, Index volumes, Index slices, PhantomSpec const &spec,
                                 std::uint64_t seed)
{
  auto samples = generate_samples(volumes, slices, spec, seed);
  std::filesystem::create_directories(dir);
  io::Manifest manifest;
  for (auto const &s : samples) {
    io::ManifestEntry e;
    e.id = s.id;
    e.kspace_path = s.id + "_kspace";
    e.image_path = s.id + "_image";
    e.maps_path = s.id + "_maps";
    e.seed = s.seed;
    e.contrast = contrast_name(s.contrast);
    e.split = s.split;
    e.volume = s.volume;
    io::write_cfl(dir / e.kspace_path, s.kspace);
    io::write_cfl(dir / e.image_path, cast<Cx>(s.target));
    io::write_cfl(dir / e.maps_path, s.maps.maps);
    manifest.samples.push_back(std::move(e));
  }
  io::write_manifest(dir / "manifest.json", manifest);
  return samples;
}

} // namespace parallax::phantom
