#pragma once

#include "oracles.hpp"

#include <parallax/grappa.hpp>

#include <numbers>

namespace oracle {

using namespace parallax;

/*
 * k-space that obeys one GRAPPA relation at every column position: a sum of
 * plane waves alpha_m v_m w_m^y z_m^c. Each wave contributes one equation
 * z_m v_m[o] = g_o . s_m per output coil, so exactly `unknowns` waves fix the
 * kernel g, which is then solved for directly.
 */
struct Synthetic
{
  ComplexTensor k;
  std::vector<std::vector<Cx>> g; // per output coil, (coil, line, tap) order
};

inline Synthetic synthetic_kernel_data(Index N, Index H, Index W, grappa::Geometry geo, std::uint64_t seed)
{
  Rng rng(seed);
  Index const L = geo.source_lines, T = geo.readout_taps, half = T / 2, R = geo.accel;
  Index const n = N * L * T;
  std::vector<Cx> w(n), z(n);
  std::vector<std::vector<Cx>> v(n, std::vector<Cx>(N));
  std::vector<Cx> S(n * n);
  for (Index m = 0; m < n; m++) {
    w[m] = std::polar(1.0, rng.uniform(-std::numbers::pi, std::numbers::pi));
    z[m] = std::polar(1.0, rng.uniform(-std::numbers::pi, std::numbers::pi));
    for (auto &c : v[m]) { c = Cx(rng.normal(), rng.normal()); }
    for (Index i = 0; i < N; i++) {
      for (Index j = 0; j < L; j++) {
        for (Index t = 0; t < T; t++) {
          S[m * n + (i * L + j) * T + t] =
            v[m][i] * std::pow(z[m], static_cast<double>((j - (L / 2 - 1)) * R)) * std::pow(w[m], static_cast<double>(t - half));
        }
      }
    }
  }
  Synthetic out{ComplexTensor({N, H, W}), {}};
  for (Index o = 0; o < N; o++) {
    std::vector<Cx> rhs(n);
    for (Index m = 0; m < n; m++) { rhs[m] = z[m] * v[m][o]; }
    out.g.push_back(oracle::solve(S, rhs, n));
  }
  for (Index m = 0; m < n; m++) {
    Cx const alpha(rng.normal(), rng.normal());
    for (Index i = 0; i < N; i++) {
      for (Index y = 0; y < H; y++) {
        for (Index c = 0; c < W; c++) {
          out.k(i, y, c) += alpha * v[m][i] * std::pow(w[m], static_cast<double>(y)) * std::pow(z[m], static_cast<double>(c));
        }
      }
    }
  }
  return out;
}

// Even lattice plus a centered ACS of `acs` columns.
inline SamplingMask stride2_mask(Index W, Index acs)
{
  std::vector<std::uint8_t> cols(static_cast<std::size_t>(W), 0);
  for (Index c = 0; c < W; c += 2) { cols[static_cast<std::size_t>(c)] = 1; }
  auto const r = centered_acs(W, acs);
  return SamplingMask(cols, r, 2, static_cast<double>(acs) / static_cast<double>(W), 0);
}

// Dense system for one offset, built from the geometry definition.
inline void oracle_system(ComplexTensor const &acs, grappa::Geometry geo, Index d, Index out_coil, std::vector<Cx> &A,
                   std::vector<Cx> &b, Index &rows)
{
  Index const N = acs.dim(0), H = acs.dim(1), W = acs.dim(2);
  Index const L = geo.source_lines, T = geo.readout_taps, half = T / 2, R = geo.accel;
  A.clear();
  b.clear();
  rows = 0;
  for (Index a = 0; a < W; a++) {
    bool inside = true;
    for (Index j = 0; j < L; j++) {
      Index const c = a + (j - (L / 2 - 1)) * R;
      inside = inside && c >= 0 && c < W;
    }
    if (!inside || a + d >= W) { continue; }
    for (Index y = half; y < H - half; y++) {
      for (Index i = 0; i < N; i++) {
        for (Index j = 0; j < L; j++) {
          for (Index t = 0; t < T; t++) { A.push_back(acs(i, y + t - half, a + (j - (L / 2 - 1)) * R)); }
        }
      }
      b.push_back(acs(out_coil, y, a + d));
      rows++;
    }
  }
}

inline double rel(std::vector<Cx> const &a, std::vector<Cx> const &b)
{
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); i++) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return std::sqrt(num / den);
}

inline std::vector<Cx> kernel_column(grappa::Kernel const &k, Index d, Index o)
{
  std::vector<Cx> out;
  for (Index i = 0; i < k.coils; i++) {
    for (Index j = 0; j < k.geometry.source_lines; j++) {
      for (Index t = 0; t < k.geometry.readout_taps; t++) { out.push_back(k.weight(d, o, i, j, t)); }
    }
  }
  return out;
}

} // namespace oracle
