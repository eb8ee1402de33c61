#include "parallax/metrics.hpp"

#include <nlohmann/json.hpp>

#include <iostream>

namespace parallax::metrics {

namespace {

template <typename T> std::pair<Index, Index> image_dims(Tensor<T> const &a, Tensor<T> const &b, char const *what)
{
  require_same_shape(a.shape(), b.shape(), what);
  if (a.rank() == 2) { return {a.dim(0), a.dim(1)}; }
  if (a.rank() == 3 && a.dim(0) == 1) { return {a.dim(1), a.dim(2)}; }
  fail(ErrorCategory::ShapeMismatch, std::string(what) + " expects a single (H, W) image, got " + shape_string(a.shape()));
}

// Box sums over every valid win x win window, via a summed-area table.
std::vector<double> box_sums(std::vector<double> const &v, Index H, Index W, Index win)
{
  std::vector<double> sat(static_cast<std::size_t>((H + 1) * (W + 1)), 0.0);
  for (Index y = 0; y < H; y++) {
    double row = 0;
    for (Index x = 0; x < W; x++) {
      row += v[static_cast<std::size_t>(y * W + x)];
      sat[static_cast<std::size_t>((y + 1) * (W + 1) + x + 1)] = sat[static_cast<std::size_t>(y * (W + 1) + x + 1)] + row;
    }
  }
  Index const oh = H - win + 1, ow = W - win + 1;
  std::vector<double> out(static_cast<std::size_t>(oh * ow));
  auto at = [&](Index y, Index x) { return sat[static_cast<std::size_t>(y * (W + 1) + x)]; };
  for (Index y = 0; y < oh; y++) {
    for (Index x = 0; x < ow; x++) {
      out[static_cast<std::size_t>(y * ow + x)] = at(y + win, x + win) - at(y, x + win) - at(y + win, x) + at(y, x);
    }
  }
  return out;
}

template <typename T> double ssim_impl(Tensor<T> const &x_hat, Tensor<T> const &x, double L, SsimParams const &p, Tensor<T> *grad)
{
  auto const [H, W] = image_dims(x_hat, x, "ssim");
  Index const win = p.window;
  if (win < 1 || win > H || win > W) {
    fail(ErrorCategory::InvalidInput, "SSIM window " + std::to_string(win) + " larger than image " + shape_string(x.shape()));
  }
  if (!(L > 0)) { fail(ErrorCategory::InvalidInput, "SSIM data range must be positive"); }
  double const c1 = std::pow(p.k1 * L, 2), c2 = std::pow(p.k2 * L, 2);
  double const n = static_cast<double>(win * win);
  Index const HW = H * W;

  std::vector<double> a(static_cast<std::size_t>(HW)), b(a.size()), aa(a.size()), bb(a.size()), ab(a.size());
  for (Index i = 0; i < HW; i++) {
    double const u = static_cast<double>(x_hat[i]), v = static_cast<double>(x[i]);
    a[static_cast<std::size_t>(i)] = u;
    b[static_cast<std::size_t>(i)] = v;
    aa[static_cast<std::size_t>(i)] = u * u;
    bb[static_cast<std::size_t>(i)] = v * v;
    ab[static_cast<std::size_t>(i)] = u * v;
  }
  auto const sa = box_sums(a, H, W, win), sb = box_sums(b, H, W, win), saa = box_sums(aa, H, W, win),
             sbb = box_sums(bb, H, W, win), sab = box_sums(ab, H, W, win);

  Index const oh = H - win + 1, ow = W - win + 1;
  double const positions = static_cast<double>(oh * ow);
  // Per-window coefficients of d S / d (mean a), d (mean a^2), d (mean a b).
  std::vector<double> g1, g11, g12;
  if (grad) {
    g1.resize(sa.size());
    g11.resize(sa.size());
    g12.resize(sa.size());
  }
  double total = 0;
  for (std::size_t w = 0; w < sa.size(); w++) {
    double const mu1 = sa[w] / n, mu2 = sb[w] / n;
    double const s11 = saa[w] / n - mu1 * mu1, s22 = sbb[w] / n - mu2 * mu2, s12 = sab[w] / n - mu1 * mu2;
    double const A1 = 2 * mu1 * mu2 + c1, A2 = 2 * s12 + c2;
    double const B1 = mu1 * mu1 + mu2 * mu2 + c1, B2 = s11 + s22 + c2;
    double const S = (A1 * A2) / (B1 * B2);
    total += S;
    if (!grad) { continue; }
    double const dmu1 = 2 * mu2 * A2 / (B1 * B2) - S * 2 * mu1 / B1;
    double const ds11 = -S / B2;
    double const ds12 = 2 * A1 / (B1 * B2);
    g1[w] = dmu1 - 2 * mu1 * ds11 - mu2 * ds12;
    g11[w] = ds11;
    g12[w] = ds12;
  }
  double const value = total / positions;
  if (grad) {
    // Scatter each window's coefficients back onto its pixels: a box "full"
    // correlation, again via summed areas of zero-padded coefficient maps.
    Index const PH = oh + 2 * (win - 1), PW = ow + 2 * (win - 1);
    auto scatter = [&](std::vector<double> const &coef) {
      std::vector<double> padded(static_cast<std::size_t>(PH * PW), 0.0);
      for (Index y = 0; y < oh; y++) {
        for (Index x = 0; x < ow; x++) {
          padded[static_cast<std::size_t>((y + win - 1) * PW + x + win - 1)] = coef[static_cast<std::size_t>(y * ow + x)];
        }
      }
      return box_sums(padded, PH, PW, win); // (H, W)
    };
    auto const G1 = scatter(g1), G11 = scatter(g11), G12 = scatter(g12);
    *grad = Tensor<T>(x_hat.shape());
    double const k = 1.0 / (n * positions);
    for (Index i = 0; i < HW; i++) {
      auto const s = static_cast<std::size_t>(i);
      (*grad)[i] = static_cast<T>(k * (G1[s] + 2 * a[s] * G11[s] + b[s] * G12[s]));
    }
  }
  return value;
}

} // namespace

template <typename T> double nmse(Tensor<T> const &x_hat, Tensor<T> const &x)
{
  require_same_shape(x_hat.shape(), x.shape(), "nmse");
  double num = 0, den = 0;
  for (Index i = 0; i < x.size(); i++) {
    double const d = static_cast<double>(x_hat[i]) - static_cast<double>(x[i]);
    num += d * d;
    den += static_cast<double>(x[i]) * static_cast<double>(x[i]);
  }
  if (den == 0) { fail(ErrorCategory::InvalidInput, "nmse reference is identically zero"); }
  return num / den;
}

template <typename T> double psnr(Tensor<T> const &x_hat, Tensor<T> const &x, double data_range)
{
  require_same_shape(x_hat.shape(), x.shape(), "psnr");
  if (!(data_range > 0)) { fail(ErrorCategory::InvalidInput, "psnr data range must be positive"); }
  double mse = 0;
  for (Index i = 0; i < x.size(); i++) {
    double const d = static_cast<double>(x_hat[i]) - static_cast<double>(x[i]);
    mse += d * d;
  }
  mse /= static_cast<double>(x.size());
  if (mse == 0) { return std::numeric_limits<double>::infinity(); }
  return 10.0 * std::log10(data_range * data_range / mse);
}

template <typename T> double ssim(Tensor<T> const &x_hat, Tensor<T> const &x, double data_range, SsimParams const &p)
{
  return ssim_impl<T>(x_hat, x, data_range, p, nullptr);
}

template <typename T>
SsimGradient<T> ssim_with_gradient(Tensor<T> const &x_hat, Tensor<T> const &x, double data_range, SsimParams const &p)
{
  SsimGradient<T> out{0.0, {}};
  out.value = ssim_impl<T>(x_hat, x, data_range, p, &out.d_xhat);
  return out;
}

template double nmse(Tensor<double> const &, Tensor<double> const &);
template double nmse(Tensor<float> const &, Tensor<float> const &);
template double psnr(Tensor<double> const &, Tensor<double> const &, double);
template double psnr(Tensor<float> const &, Tensor<float> const &, double);
template double ssim(Tensor<double> const &, Tensor<double> const &, double, SsimParams const &);
template double ssim(Tensor<float> const &, Tensor<float> const &, double, SsimParams const &);
template SsimGradient<double> ssim_with_gradient(Tensor<double> const &, Tensor<double> const &, double, SsimParams const &);
template SsimGradient<float> ssim_with_gradient(Tensor<float> const &, Tensor<float> const &, double, SsimParams const &);

MetricReport evaluate(std::vector<RealImage> const &pred, std::vector<RealImage> const &target, double data_range)
{
  if (pred.size() != target.size() || pred.empty()) {
    fail(ErrorCategory::ShapeMismatch, "evaluate needs equal, non-empty prediction and target lists");
  }
  if (data_range <= 0) {
    for (auto const &t : target) {
      for (auto v : t.data()) { data_range = std::max(data_range, v); }
    }
  }
  MetricReport r;
  double psnr_sum = 0;
  for (std::size_t s = 0; s < pred.size(); s++) {
    r.nmse.push_back(nmse(pred[s], target[s]));
    r.psnr.push_back(psnr(pred[s], target[s], data_range));
    r.ssim.push_back(ssim(pred[s], target[s], data_range));
    if (std::isinf(r.psnr.back())) {
      r.psnr_excluded++;
    } else {
      psnr_sum += r.psnr.back();
    }
  }
  auto mean = [](std::vector<double> const &v) {
    double s = 0;
    for (auto x : v) { s += x; }
    return s / static_cast<double>(v.size());
  };
  r.mean_nmse = mean(r.nmse);
  r.mean_ssim = mean(r.ssim);
  auto const counted = static_cast<int>(pred.size()) - r.psnr_excluded;
  if (r.psnr_excluded > 0) {
    std::cerr << "warning: " << r.psnr_excluded << " slice(s) identical to the reference; PSNR excluded from the mean\n";
  }
  r.mean_psnr = counted > 0 ? psnr_sum / counted : std::numeric_limits<double>::infinity();
  return r;
}

void write_report_csv(std::ostream &os, MetricReport const &r)
{
  os.precision(17);
  os << "slice,nmse,psnr,ssim\n";
  for (std::size_t s = 0; s < r.nmse.size(); s++) {
    os << s << ',' << r.nmse[s] << ',' << r.psnr[s] << ',' << r.ssim[s] << '\n';
  }
  os << "mean," << r.mean_nmse << ',' << r.mean_psnr << ',' << r.mean_ssim << '\n';
}

void write_report_json(std::ostream &os, MetricReport const &r)
{
  auto finite_or_null = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::ordered_json j;
  j["nmse"] = r.mean_nmse;
  j["psnr"] = finite_or_null(r.mean_psnr);
  j["ssim"] = r.mean_ssim;
  j["psnr_excluded"] = r.psnr_excluded;
  nlohmann::json slices = nlohmann::json::array();
  for (std::size_t s = 0; s < r.nmse.size(); s++) {
    slices.push_back({{"nmse", r.nmse[s]}, {"psnr", finite_or_null(r.psnr[s])}, {"ssim", r.ssim[s]}});
  }
  j["slices"] = slices;
  os << j.dump(2) << '\n';
}

} // namespace parallax::metrics
