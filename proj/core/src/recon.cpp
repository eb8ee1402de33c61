#include "parallax/recon.hpp"
#include "parallax/fft.hpp"

#include <numbers>
#include <ostream>

namespace parallax {

template <typename V> Tensor<real_of_t<V>> rss(Tensor<V> const &coil_images)
{
  using S = real_of_t<V>;
  if (coil_images.rank() != 3 || coil_images.dim(0) < 1) {
    fail(ErrorCategory::ShapeMismatch, "rss expects (coils, H, W), got " + shape_string(coil_images.shape()));
  }
  Index const N = coil_images.dim(0), H = coil_images.dim(1), W = coil_images.dim(2);
  Tensor<S> out({H, W});
  for (Index p = 0; p < H * W; p++) {
    S acc = 0;
    for (Index c = 0; c < N; c++) { acc += std::norm(coil_images[c * H * W + p]); }
    out[p] = std::sqrt(acc);
  }
  return out;
}

template Tensor<double> rss(Tensor<Cx> const &);
template Tensor<float> rss(Tensor<Cxf> const &);

RealImage zero_filled_recon(ComplexTensor const &k_under) { return rss(ifft2c(as_coils(k_under))); }

SensitivityMaps estimate_sensitivities(ComplexTensor const &k_under, SamplingMask const &m, double threshold)
{
  auto const k = as_coils(k_under);
  if (k.dim(2) != m.width()) { fail(ErrorCategory::ShapeMismatch, "estimate_sensitivities: mask width mismatch"); }
  auto const acs = m.acs();
  if (acs.size() == 0) { fail(ErrorCategory::Config, "sensitivity estimation needs a non-empty ACS"); }
  Index const N = k.dim(0), H = k.dim(1), W = k.dim(2);

  ComplexTensor low(k.shape());
  double const n = static_cast<double>(acs.size());
  for (Index c = acs.begin; c < acs.end; c++) {
    double const window = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(c - acs.begin + 1) / (n + 1)));
    for (Index i = 0; i < N; i++) {
      for (Index y = 0; y < H; y++) { low(i, y, c) = k(i, y, c) * window; }
    }
  }
  auto const images = ifft2c(low);
  auto const combined = rss(images);
  double const peak = *std::max_element(combined.data().begin(), combined.data().end());

  SensitivityMaps out{ComplexTensor(k.shape()), MaskTensor({H, W}, 0)};
  for (Index p = 0; p < H * W; p++) {
    if (peak <= 0 || combined[p] <= threshold * peak) { continue; }
    out.support[p] = 1;
    // Phase referenced to coil 0, which removes the object phase from the maps.
    Cx const ref = images[p];
    Cx const rot = std::abs(ref) > 0 ? std::conj(ref) / std::abs(ref) : Cx{1, 0};
    for (Index i = 0; i < N; i++) { out.maps[i * H * W + p] = images[i * H * W + p] * rot / combined[p]; }
    out.maps[p] = Cx(std::abs(out.maps[p]), 0);
  }
  return out;
}

namespace {

struct TvTerms
{
  double value = 0;
  ComplexTensor grad;
};

TvTerms tv_with_gradient(ComplexTensor const &x, double eps, bool want_grad)
{
  Index const H = x.dim(0), W = x.dim(1);
  TvTerms out;
  if (want_grad) { out.grad = ComplexTensor(x.shape()); }
  for (Index y = 0; y < H; y++) {
    for (Index xx = 0; xx < W; xx++) {
      Cx const v = x(y, xx);
      Cx const dx = xx + 1 < W ? x(y, xx + 1) - v : Cx{};
      Cx const dy = y + 1 < H ? x(y + 1, xx) - v : Cx{};
      double const r = std::sqrt(std::norm(dx) + std::norm(dy));
      out.value += r <= eps ? r * r / (2 * eps) : r - eps / 2;
      if (!want_grad) { continue; }
      double const w = 1.0 / std::max(r, eps);
      if (xx + 1 < W) {
        out.grad(y, xx + 1) += w * dx;
        out.grad(y, xx) -= w * dx;
      }
      if (y + 1 < H) {
        out.grad(y + 1, xx) += w * dy;
        out.grad(y, xx) -= w * dy;
      }
    }
  }
  return out;
}

class SenseOperator
{
public:
  SenseOperator(SensitivityMaps const &maps, SamplingMask const &m)
    : maps_{maps.maps}
    , mask_{m}
  {
  }

  ComplexTensor forward(ComplexTensor const &x) const
  {
    Index const N = maps_.dim(0), HW = x.size();
    ComplexTensor coils(maps_.shape());
    for (Index i = 0; i < N; i++) {
      for (Index p = 0; p < HW; p++) { coils[i * HW + p] = maps_[i * HW + p] * x[p]; }
    }
    return apply_mask(fft2c(coils), mask_);
  }

  ComplexTensor adjoint(ComplexTensor const &k) const
  {
    auto const coils = ifft2c(apply_mask(k, mask_));
    Index const N = maps_.dim(0), H = maps_.dim(1), W = maps_.dim(2), HW = H * W;
    ComplexTensor x({H, W});
    for (Index p = 0; p < HW; p++) {
      Cx acc{};
      for (Index i = 0; i < N; i++) { acc += std::conj(maps_[i * HW + p]) * coils[i * HW + p]; }
      x[p] = acc;
    }
    return x;
  }

private:
  ComplexTensor const &maps_;
  SamplingMask const &mask_;
};

} // namespace

double total_variation(ComplexTensor const &x, double eps)
{
  if (x.rank() != 2) { fail(ErrorCategory::ShapeMismatch, "total_variation expects an (H, W) image"); }
  return tv_with_gradient(x, eps, false).value;
}

CsResult cs_tv_reconstruct(ComplexTensor const &k_under, SamplingMask const &m, SensitivityMaps const &maps,
                           CsOptions const &options)
{
  auto const k = as_coils(k_under);
  require_same_shape(k.shape(), maps.maps.shape(), "cs_tv_reconstruct maps");
  if (options.iterations < 1) { fail(ErrorCategory::Config, "iterations must be >= 1"); }
  Index const H = k.dim(1), W = k.dim(2);
  double const lambda = options.lambda ? *options.lambda : 1e-3 * norm2(k) / std::sqrt(static_cast<double>(H * W));
  if (lambda < 0) { fail(ErrorCategory::Config, "lambda_tv must be >= 0"); }

  SenseOperator const A(maps, m);
  auto objective = [&](ComplexTensor const &x, double &data, double &tv) {
    double const r = norm2(sub(A.forward(x), k));
    data = 0.5 * r * r;
    tv = lambda > 0 ? lambda * tv_with_gradient(x, options.eps, false).value : 0.0;
    return data + tv;
  };

  CsResult result;
  result.lambda = lambda;
  result.image = A.adjoint(k);
  double data = 0, tv = 0;
  double f = objective(result.image, data, tv);
  result.trace.push_back({0, data, tv, f});

  double t = options.step;
  for (int it = 1; it <= options.iterations; it++) {
    auto grad = A.adjoint(sub(A.forward(result.image), k));
    if (lambda > 0) {
      auto const tvg = tv_with_gradient(result.image, options.eps, true);
      for (Index p = 0; p < grad.size(); p++) { grad[p] += lambda * tvg.grad[p]; }
    }
    double const g2 = std::pow(norm2(grad), 2);
    if (g2 == 0) { break; }

    t *= 2;
    bool accepted = false;
    ComplexTensor candidate;
    double cdata = 0, ctv = 0, fc = 0;
    for (int halving = 0; halving <= 30; halving++) {
      candidate = sub(result.image, scale(grad, t));
      fc = objective(candidate, cdata, ctv);
      if (fc <= f - 1e-4 * t * g2) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      if (fc > f * (1 + 1e-12) + 1e-300) {
        fail(ErrorCategory::Numerical, "objective increased after 30 backtracking halvings at iteration " +
                                         std::to_string(it) + " (" + std::to_string(f) + " -> " + std::to_string(fc) + ")");
      }
      if (fc > f) { break; } // stalled at round-off level
    }
    result.image = std::move(candidate);
    f = fc;
    result.trace.push_back({it, cdata, ctv, fc});
  }
  if (!all_finite(result.image)) { fail(ErrorCategory::Numerical, "TV reconstruction produced non-finite values"); }
  return result;
}

void write_trace_csv(std::ostream &os, std::vector<CsTraceRow> const &trace)
{
  os << "iteration,data_term,tv_term,total\n";
  os.precision(17);
  for (auto const &r : trace) { os << r.iteration << ',' << r.data_term << ',' << r.tv_term << ',' << r.total << '\n'; }
}

} // namespace parallax
