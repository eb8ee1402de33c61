#include "parallax/grappa.hpp"
#include "parallax/parallel.hpp"

#include <Eigen/Dense>

namespace parallax::grappa {

namespace {

using CxMatrix = Eigen::Matrix<Cx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void check_geometry(Geometry const &g)
{
  if (g.accel < 2) { fail(ErrorCategory::Config, "GRAPPA stride must be >= 2"); }
  if (g.source_lines < 2 || g.source_lines % 2) { fail(ErrorCategory::Config, "source line count must be even and >= 2"); }
  if (g.readout_taps < 1 || g.readout_taps % 2 == 0) { fail(ErrorCategory::Config, "readout taps must be odd"); }
}

// Column offset of source line j relative to the lattice column preceding the target.
Index line_offset(Geometry const &g, Index j) { return (j - (g.source_lines / 2 - 1)) * g.accel; }

// Gathers the (coil, line, tap) source vector for target row y, lattice column a.
void gather(ComplexTensor const &k, Geometry const &g, Index a, Index y, Cx *dst)
{
  Index const N = k.dim(0), H = k.dim(1), W = k.dim(2);
  Index const half = g.readout_taps / 2;
  for (Index i = 0; i < N; i++) {
    for (Index j = 0; j < g.source_lines; j++) {
      Index const col = a + line_offset(g, j);
      for (Index t = 0; t < g.readout_taps; t++) {
        Index const row = y + t - half;
        *dst++ = (col >= 0 && col < W && row >= 0 && row < H) ? k(i, row, col) : Cx{};
      }
    }
  }
}

// Weights for one offset as an (unknowns x coils) matrix, matching gather() order.
CxMatrix offset_matrix(Kernel const &g, Index offset)
{
  Index const N = g.coils, L = g.geometry.source_lines, T = g.geometry.readout_taps;
  CxMatrix X(N * L * T, N);
  for (Index o = 0; o < N; o++) {
    for (Index i = 0; i < N; i++) {
      for (Index j = 0; j < L; j++) {
        for (Index t = 0; t < T; t++) { X((i * L + j) * T + t, o) = g.weight(offset, o, i, j, t); }
      }
    }
  }
  return X;
}

Index checked_lattice(ComplexTensor const &k, SamplingMask const &m, Kernel const &g)
{
  if (k.rank() != 3) { fail(ErrorCategory::ShapeMismatch, "GRAPPA expects (coils, H, W), got " + shape_string(k.shape())); }
  if (k.dim(2) != m.width()) { fail(ErrorCategory::ShapeMismatch, "mask width does not match k-space"); }
  if (k.dim(0) != g.coils) {
    fail(ErrorCategory::ShapeMismatch,
         "kernel calibrated for " + std::to_string(g.coils) + " coils, data has " + std::to_string(k.dim(0)));
  }
  auto const phi = lattice_offset(m, g.geometry.accel);
  if (!phi) {
    fail(ErrorCategory::InvalidInput,
         "stride mismatch: mask contains no complete stride-" + std::to_string(g.geometry.accel) + " lattice");
  }
  return *phi;
}

} // namespace

AcsRegion extract_acs(ComplexTensor const &k, SamplingMask const &m)
{
  if (k.rank() != 3 || k.dim(2) != m.width()) { fail(ErrorCategory::ShapeMismatch, "extract_acs: mask width mismatch"); }
  auto const acs = m.acs();
  if (acs.size() == 0) { fail(ErrorCategory::Config, "mask has an empty ACS"); }
  Index const N = k.dim(0), H = k.dim(1);
  ComplexTensor out({N, H, acs.size()});
  for (Index i = 0; i < N; i++) {
    for (Index y = 0; y < H; y++) {
      for (Index c = 0; c < acs.size(); c++) { out(i, y, c) = k(i, y, acs.begin + c); }
    }
  }
  return {std::move(out)};
}

Kernel calibrate(AcsRegion const &acs, CalibrationOptions const &options)
{
  auto const &g = options.geometry;
  check_geometry(g);
  auto const &k = acs.data;
  if (k.rank() != 3) { fail(ErrorCategory::ShapeMismatch, "ACS must be (coils, H, columns)"); }
  Index const N = k.dim(0), H = k.dim(1), W = k.dim(2);
  Index const L = g.source_lines, T = g.readout_taps, half = T / 2;
  Index const unknowns = N * L * T;
  Index const lo = -line_offset(g, 0), hi = line_offset(g, L - 1);

  Kernel kernel{g, N, ComplexTensor({g.accel - 1, N, N, L, T}), 0.0};
  for (Index d = 1; d < g.accel; d++) {
    // Interior windows only: every source line and tap inside the ACS block.
    Index const a_begin = lo, a_end = W - hi; // a in [a_begin, a_end)
    Index const rows = H - 2 * half;
    Index const positions = std::max<Index>(0, a_end - a_begin);
    Index const equations = positions * std::max<Index>(0, rows);
    if (equations < unknowns) {
      fail(ErrorCategory::Calibration, "under-determined calibration: " + std::to_string(equations) + " equations for " +
                                         std::to_string(unknowns) + " unknowns (ACS " + std::to_string(H) + "x" +
                                         std::to_string(W) + ")");
    }
    CxMatrix A(equations, unknowns);
    CxMatrix B(equations, N);
    Index e = 0;
    for (Index a = a_begin; a < a_end; a++) {
      for (Index y = half; y < H - half; y++, e++) {
        gather(k, g, a, y, A.row(e).data());
        for (Index o = 0; o < N; o++) { B(e, o) = k(o, y, a + d); }
      }
    }
    double const ridge = options.ridge ? *options.ridge : 1e-6 * A.squaredNorm() / static_cast<double>(unknowns);
    if (ridge < 0) { fail(ErrorCategory::Config, "ridge weight must be >= 0"); }
    kernel.ridge = std::max(kernel.ridge, ridge);

    CxMatrix X;
    if (ridge == 0) {
      Eigen::ColPivHouseholderQR<CxMatrix> qr(A);
      if (qr.rank() < unknowns) {
        fail(ErrorCategory::Solver, "normal matrix is rank deficient: rank " + std::to_string(qr.rank()) + " of " +
                                      std::to_string(unknowns) + " unknowns with zero ridge");
      }
      X = qr.solve(B);
    } else {
      CxMatrix Aa = CxMatrix::Zero(equations + unknowns, unknowns);
      CxMatrix Ba = CxMatrix::Zero(equations + unknowns, N);
      Aa.topRows(equations) = A;
      Aa.bottomRows(unknowns).diagonal().setConstant(Cx(std::sqrt(ridge), 0));
      Ba.topRows(equations) = B;
      X = Eigen::HouseholderQR<CxMatrix>(Aa).solve(Ba);
    }
    for (Index o = 0; o < N; o++) {
      for (Index u = 0; u < unknowns; u++) {
        kernel.weights[(((d - 1) * N + o) * N) * L * T + u] = X(u, o);
      }
    }
  }
  if (!all_finite(kernel.weights)) { fail(ErrorCategory::Numerical, "calibration produced non-finite weights"); }
  return kernel;
}

ComplexTensor apply(ComplexTensor const &k_under, SamplingMask const &m, Kernel const &g)
{
  Index const phi = checked_lattice(k_under, m, g);
  Index const N = k_under.dim(0), H = k_under.dim(1), W = k_under.dim(2);
  Index const R = g.geometry.accel;
  Index const unknowns = N * g.geometry.source_lines * g.geometry.readout_taps;

  std::vector<CxMatrix> X;
  for (Index d = 1; d < R; d++) { X.push_back(offset_matrix(g, d)); }

  std::vector<Index> missing;
  for (Index p = 0; p < W; p++) {
    if (!m.sampled(p)) { missing.push_back(p); }
  }

  ComplexTensor out = k_under;
  parallel_for(static_cast<Index>(missing.size()), [&](Index idx) {
    Index const p = missing[static_cast<std::size_t>(idx)];
    Index const d = ((p - phi) % R + R) % R;
    CxMatrix S(H, unknowns);
    for (Index y = 0; y < H; y++) { gather(k_under, g.geometry, p - d, y, S.row(y).data()); }
    CxMatrix const Y = S * X[static_cast<std::size_t>(d - 1)];
    for (Index o = 0; o < N; o++) {
      for (Index y = 0; y < H; y++) { out(o, y, p) = Y(y, o); }
    }
  });
  return out;
}

ComplexTensor apply_adjoint(ComplexTensor const &grad_out, SamplingMask const &m, Kernel const &g)
{
  Index const phi = checked_lattice(grad_out, m, g);
  Index const N = grad_out.dim(0), H = grad_out.dim(1), W = grad_out.dim(2);
  auto const &geom = g.geometry;
  Index const R = geom.accel, L = geom.source_lines, T = geom.readout_taps, half = T / 2;

  std::vector<CxMatrix> XH;
  for (Index d = 1; d < R; d++) { XH.push_back(offset_matrix(g, d).adjoint()); }

  ComplexTensor grad_in(grad_out.shape());
  for (Index i = 0; i < N; i++) {
    for (Index y = 0; y < H; y++) {
      for (Index c = 0; c < W; c++) {
        if (m.sampled(c)) { grad_in(i, y, c) = grad_out(i, y, c); }
      }
    }
  }
  // Serial scatter: several targets share source columns.
  CxMatrix G(H, N);
  for (Index p = 0; p < W; p++) {
    if (m.sampled(p)) { continue; }
    Index const d = ((p - phi) % R + R) % R;
    for (Index o = 0; o < N; o++) {
      for (Index y = 0; y < H; y++) { G(y, o) = grad_out(o, y, p); }
    }
    CxMatrix const dS = G * XH[static_cast<std::size_t>(d - 1)];
    Index const a = p - d;
    for (Index y = 0; y < H; y++) {
      Index u = 0;
      for (Index i = 0; i < N; i++) {
        for (Index j = 0; j < L; j++) {
          Index const col = a + line_offset(geom, j);
          for (Index t = 0; t < T; t++, u++) {
            Index const row = y + t - half;
            if (col >= 0 && col < W && row >= 0 && row < H) { grad_in(i, row, col) += dS(y, u); }
          }
        }
      }
    }
  }
  return grad_in;
}

ComplexTensor reconstruct(ComplexTensor const &k_under, SamplingMask const &m, CalibrationOptions const &options)
{
  if (options.geometry.accel == 1 || m.fully_sampled()) { return k_under; }
  auto const kernel = calibrate(extract_acs(k_under, m), options);
  return apply(k_under, m, kernel);
}

} // namespace parallax::grappa
