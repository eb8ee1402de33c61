#include "parallax/nn/ops.hpp"
#include "parallax/fft.hpp"

#include <Eigen/Dense>

namespace parallax::nn {

namespace {

template <typename T> using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T> using MapC = Eigen::Map<Mat<T> const>;
template <typename T> using MapM = Eigen::Map<Mat<T>>;

struct Chw
{
  Index c, h, w;
};

// Rank-2 tensors are treated as one channel.
template <typename T> Chw chw(Tensor<T> const &t, char const *op)
{
  if (t.rank() == 3) { return {t.dim(0), t.dim(1), t.dim(2)}; }
  if (t.rank() == 2) { return {1, t.dim(0), t.dim(1)}; }
  fail(ErrorCategory::ShapeMismatch, std::string(op) + " expects (C, H, W), got " + shape_string(t.shape()));
}

template <typename T> void accumulate(Tensor<T> &dst, Tensor<T> const &src)
{
  for (Index i = 0; i < dst.size(); i++) { dst[i] += src[i]; }
}

template <typename T> Mat<T> im2col(Tensor<T> const &x, Index K, Index pad, Index Ho, Index Wo)
{
  auto const [C, H, W] = chw(x, "conv2d");
  Mat<T> cols(C * K * K, Ho * Wo);
  for (Index c = 0; c < C; c++) {
    for (Index ky = 0; ky < K; ky++) {
      for (Index kx = 0; kx < K; kx++) {
        T *row = cols.row((c * K + ky) * K + kx).data();
        for (Index y = 0; y < Ho; y++) {
          Index const sy = y + ky - pad;
          for (Index xx = 0; xx < Wo; xx++) {
            Index const sx = xx + kx - pad;
            row[y * Wo + xx] = (sy >= 0 && sy < H && sx >= 0 && sx < W) ? x[(c * H + sy) * W + sx] : T{0};
          }
        }
      }
    }
  }
  return cols;
}

template <typename T> void col2im_add(Mat<T> const &cols, Tensor<T> &dx, Index K, Index pad, Index Ho, Index Wo)
{
  auto const [C, H, W] = chw(dx, "conv2d");
  for (Index c = 0; c < C; c++) {
    for (Index ky = 0; ky < K; ky++) {
      for (Index kx = 0; kx < K; kx++) {
        T const *row = cols.row((c * K + ky) * K + kx).data();
        for (Index y = 0; y < Ho; y++) {
          Index const sy = y + ky - pad;
          if (sy < 0 || sy >= H) { continue; }
          for (Index xx = 0; xx < Wo; xx++) {
            Index const sx = xx + kx - pad;
            if (sx >= 0 && sx < W) { dx[(c * H + sy) * W + sx] += row[y * Wo + xx]; }
          }
        }
      }
    }
  }
}

// Column masks for the paired layout.
template <typename T, typename F> Tensor<T> per_column(Tensor<T> const &like, F &&fn)
{
  Tensor<T> out(like.shape());
  Index const W = like.dim(-1);
  for (Index i = 0; i < like.size(); i++) { out[i] = fn(i, i % W); }
  return out;
}

} // namespace

template <typename T> Tensor<T> to_paired(ComplexTensor const &k)
{
  auto const kc = as_coils(k);
  Index const N = kc.dim(0), HW = kc.dim(1) * kc.dim(2);
  Tensor<T> out({2 * N, kc.dim(1), kc.dim(2)});
  for (Index c = 0; c < N; c++) {
    for (Index p = 0; p < HW; p++) {
      out[(2 * c) * HW + p] = static_cast<T>(kc[c * HW + p].real());
      out[(2 * c + 1) * HW + p] = static_cast<T>(kc[c * HW + p].imag());
    }
  }
  return out;
}

template <typename T> ComplexTensor from_paired(Tensor<T> const &x)
{
  if (x.rank() != 3 || x.dim(0) % 2) { fail(ErrorCategory::ShapeMismatch, "paired layout needs (2N, H, W), got " + shape_string(x.shape())); }
  Index const N = x.dim(0) / 2, HW = x.dim(1) * x.dim(2);
  ComplexTensor out({N, x.dim(1), x.dim(2)});
  for (Index c = 0; c < N; c++) {
    for (Index p = 0; p < HW; p++) { out[c * HW + p] = Cx(x[(2 * c) * HW + p], x[(2 * c + 1) * HW + p]); }
  }
  return out;
}

template <typename T> Var conv2d(Tape<T> &tape, Var x, Var w, Var bias, Index pad)
{
  auto const &xv = tape.value(x);
  auto const &wv = tape.value(w);
  auto const [C, H, W] = chw(xv, "conv2d");
  if (wv.rank() != 4 || wv.dim(1) != C || wv.dim(2) != wv.dim(3)) {
    fail(ErrorCategory::Config, "conv2d weight " + shape_string(wv.shape()) + " does not match input " + shape_string(xv.shape()));
  }
  Index const O = wv.dim(0), K = wv.dim(2);
  Index const Ho = H + 2 * pad - K + 1, Wo = W + 2 * pad - K + 1;
  bool const has_bias = bias.id >= 0;
  if (has_bias && tape.value(bias).size() != O) { fail(ErrorCategory::Config, "conv2d bias size mismatch"); }

  auto const cols = im2col(xv, K, pad, Ho, Wo);
  Tensor<T> out({O, Ho, Wo});
  MapM<T>(out.raw(), O, Ho * Wo).noalias() = MapC<T>(wv.raw(), O, C * K * K) * cols;
  if (has_bias) {
    auto const &bv = tape.value(bias);
    for (Index o = 0; o < O; o++) {
      for (Index p = 0; p < Ho * Wo; p++) { out[o * Ho * Wo + p] += bv[o]; }
    }
  }
  auto fn = [x, w, bias, has_bias, K, pad, O, C, Ho, Wo](Tape<T> &t, Var self) {
    auto const &g = t.grad(self);
    MapC<T> G(g.raw(), O, Ho * Wo);
    auto const &xin = t.value(x);
    if (t.requires_grad(w) || t.requires_grad(x)) {
      auto const cols = im2col(xin, K, pad, Ho, Wo);
      if (t.requires_grad(w)) { MapM<T>(t.grad(w).raw(), O, C * K * K).noalias() += G * cols.transpose(); }
      if (t.requires_grad(x)) {
        Mat<T> const dcols = MapC<T>(t.value(w).raw(), O, C * K * K).transpose() * G;
        col2im_add(dcols, t.grad(x), K, pad, Ho, Wo);
      }
    }
    if (has_bias && t.requires_grad(bias)) {
      auto &gb = t.grad(bias);
      for (Index o = 0; o < O; o++) { gb[o] += G.row(o).sum(); }
    }
  };
  return has_bias ? tape.record(std::move(out), {x, w, bias}, fn) : tape.record(std::move(out), {x, w}, fn);
}

template <typename T> Var conv2d(Tape<T> &tape, Var x, Var w, Index pad) { return conv2d(tape, x, w, Var{}, pad); }

template <typename T> Var conv_transpose2x2(Tape<T> &tape, Var x, Var w)
{
  auto const &xv = tape.value(x);
  auto const &wv = tape.value(w);
  auto const [C, H, W] = chw(xv, "conv_transpose2x2");
  if (wv.rank() != 4 || wv.dim(0) != C || wv.dim(2) != 2 || wv.dim(3) != 2) {
    fail(ErrorCategory::Config, "transposed conv weight " + shape_string(wv.shape()) + " does not match input");
  }
  Index const O = wv.dim(1), HW = H * W;
  // Rows (o, a, b) of Wt are w[:, o, a, b].
  auto weight_t = [C, O](Tensor<T> const &wt) {
    Mat<T> Wt(O * 4, C);
    for (Index c = 0; c < C; c++) {
      for (Index r = 0; r < O * 4; r++) { Wt(r, c) = wt[c * O * 4 + r]; }
    }
    return Wt;
  };
  Mat<T> const Z = weight_t(wv) * MapC<T>(xv.raw(), C, HW);
  Tensor<T> out({O, 2 * H, 2 * W});
  for (Index o = 0; o < O; o++) {
    for (Index a = 0; a < 2; a++) {
      for (Index b = 0; b < 2; b++) {
        T const *z = Z.row((o * 2 + a) * 2 + b).data();
        for (Index y = 0; y < H; y++) {
          for (Index xx = 0; xx < W; xx++) { out[(o * 2 * H + 2 * y + a) * 2 * W + 2 * xx + b] = z[y * W + xx]; }
        }
      }
    }
  }
  return tape.record(std::move(out), {x, w}, [x, w, C, O, H, W, HW, weight_t](Tape<T> &t, Var self) {
    auto const &g = t.grad(self);
    Mat<T> dZ(O * 4, HW);
    for (Index o = 0; o < O; o++) {
      for (Index a = 0; a < 2; a++) {
        for (Index b = 0; b < 2; b++) {
          T *z = dZ.row((o * 2 + a) * 2 + b).data();
          for (Index y = 0; y < H; y++) {
            for (Index xx = 0; xx < W; xx++) { z[y * W + xx] = g[(o * 2 * H + 2 * y + a) * 2 * W + 2 * xx + b]; }
          }
        }
      }
    }
    if (t.requires_grad(x)) { MapM<T>(t.grad(x).raw(), C, HW).noalias() += weight_t(t.value(w)).transpose() * dZ; }
    if (t.requires_grad(w)) {
      Mat<T> const dWt = dZ * MapC<T>(t.value(x).raw(), C, HW).transpose();
      auto &gw = t.grad(w);
      for (Index c = 0; c < C; c++) {
        for (Index r = 0; r < O * 4; r++) { gw[c * O * 4 + r] += dWt(r, c); }
      }
    }
  });
}

template <typename T> Var instance_norm(Tape<T> &tape, Var x, double eps)
{
  auto const &xv = tape.value(x);
  auto const [C, H, W] = chw(xv, "instance_norm");
  Index const HW = H * W;
  Tensor<T> out(xv.shape());
  std::vector<T> inv(static_cast<std::size_t>(C));
  for (Index c = 0; c < C; c++) {
    T const *src = xv.raw() + c * HW;
    double mean = 0;
    for (Index p = 0; p < HW; p++) { mean += src[p]; }
    mean /= static_cast<double>(HW);
    double var = 0;
    for (Index p = 0; p < HW; p++) { var += (src[p] - mean) * (src[p] - mean); }
    var /= static_cast<double>(HW);
    double const s = 1.0 / std::sqrt(var + eps);
    inv[static_cast<std::size_t>(c)] = static_cast<T>(s);
    for (Index p = 0; p < HW; p++) { out[c * HW + p] = static_cast<T>((src[p] - mean) * s); }
  }
  return tape.record(std::move(out), {x}, [x, C, HW, inv](Tape<T> &t, Var self) {
    auto const &g = t.grad(self);
    auto const &yv = t.value(self);
    auto &dx = t.grad(x);
    for (Index c = 0; c < C; c++) {
      double mg = 0, mgy = 0;
      for (Index p = 0; p < HW; p++) {
        mg += g[c * HW + p];
        mgy += g[c * HW + p] * yv[c * HW + p];
      }
      mg /= static_cast<double>(HW);
      mgy /= static_cast<double>(HW);
      double const s = inv[static_cast<std::size_t>(c)];
      for (Index p = 0; p < HW; p++) {
        dx[c * HW + p] += static_cast<T>(s * (g[c * HW + p] - mg - yv[c * HW + p] * mgy));
      }
    }
  });
}

template <typename T> Var leaky_relu(Tape<T> &tape, Var x, double slope)
{
  auto const &xv = tape.value(x);
  auto const s = static_cast<T>(slope);
  Tensor<T> out(xv.shape());
  for (Index i = 0; i < xv.size(); i++) { out[i] = xv[i] > 0 ? xv[i] : s * xv[i]; }
  tape.mark_kink(x);
  return tape.record(std::move(out), {x}, [x, s](Tape<T> &t, Var self) {
    auto const &g = t.grad(self);
    auto const &xin = t.value(x);
    auto &dx = t.grad(x);
    for (Index i = 0; i < g.size(); i++) { dx[i] += xin[i] > 0 ? g[i] : s * g[i]; }
  });
}

template <typename T> Var avg_pool2(Tape<T> &tape, Var x)
{
  auto const &xv = tape.value(x);
  auto const [C, H, W] = chw(xv, "avg_pool2");
  if (H % 2 || W % 2) { fail(ErrorCategory::Config, "avg_pool2 needs even spatial extents, got " + shape_string(xv.shape())); }
  Index const h = H / 2, w = W / 2;
  Tensor<T> out({C, h, w});
  for (Index c = 0; c < C; c++) {
    for (Index y = 0; y < h; y++) {
      for (Index xx = 0; xx < w; xx++) {
        Index const b = (c * H + 2 * y) * W + 2 * xx;
        out[(c * h + y) * w + xx] = T(0.25) * (xv[b] + xv[b + 1] + xv[b + W] + xv[b + W + 1]);
      }
    }
  }
  return tape.record(std::move(out), {x}, [x, C, H, W, h, w](Tape<T> &t, Var self) {
    auto const &g = t.grad(self);
    auto &dx = t.grad(x);
    for (Index c = 0; c < C; c++) {
      for (Index y = 0; y < h; y++) {
        for (Index xx = 0; xx < w; xx++) {
          T const v = T(0.25) * g[(c * h + y) * w + xx];
          Index const b = (c * H + 2 * y) * W + 2 * xx;
          dx[b] += v;
          dx[b + 1] += v;
          dx[b + W] += v;
          dx[b + W + 1] += v;
        }
      }
    }
  });
}

template <typename T> Var concat(Tape<T> &tape, Var a, Var b)
{
  auto const &av = tape.value(a);
  auto const &bv = tape.value(b);
  auto const da = chw(av, "concat"), db = chw(bv, "concat");
  if (da.h != db.h || da.w != db.w) { fail(ErrorCategory::ShapeMismatch, "concat spatial mismatch"); }
  Tensor<T> out({da.c + db.c, da.h, da.w});
  std::copy(av.data().begin(), av.data().end(), out.data().begin());
  std::copy(bv.data().begin(), bv.data().end(), out.data().begin() + av.size());
  Index const na = av.size();
  return tape.record(std::move(out), {a, b}, [a, b, na](Tape<T> &t, Var self) {
    auto const &g = t.grad(self);
    if (t.requires_grad(a)) {
      auto &ga = t.grad(a);
      for (Index i = 0; i < na; i++) { ga[i] += g[i]; }
    }
    if (t.requires_grad(b)) {
      auto &gb = t.grad(b);
      for (Index i = 0; i < gb.size(); i++) { gb[i] += g[na + i]; }
    }
  });
}

template <typename T> Var add(Tape<T> &tape, Var a, Var b)
{
  auto out = parallax::add(tape.value(a), tape.value(b));
  return tape.record(std::move(out), {a, b}, [a, b](Tape<T> &t, Var self) {
    auto const &g = t.grad(self);
    if (t.requires_grad(a)) { accumulate(t.grad(a), g); }
    if (t.requires_grad(b)) { accumulate(t.grad(b), g); }
  });
}

template <typename T> Var reflect_pad(Tape<T> &tape, Var x, Index pad_h, Index pad_w)
{
  if (pad_h == 0 && pad_w == 0) { return x; }
  auto const &xv = tape.value(x);
  auto const [C, H, W] = chw(xv, "reflect_pad");
  if (pad_h >= H || pad_w >= W) { fail(ErrorCategory::Config, "reflect padding must be smaller than the image"); }
  Index const Hp = H + pad_h, Wp = W + pad_w;
  auto src_index = [H, W](Index y, Index xx) {
    Index const sy = y < H ? y : 2 * (H - 1) - y;
    Index const sx = xx < W ? xx : 2 * (W - 1) - xx;
    return sy * W + sx;
  };
  Tensor<T> out({C, Hp, Wp});
  for (Index c = 0; c < C; c++) {
    for (Index y = 0; y < Hp; y++) {
      for (Index xx = 0; xx < Wp; xx++) { out[(c * Hp + y) * Wp + xx] = xv[c * H * W + src_index(y, xx)]; }
    }
  }
  return tape.record(std::move(out), {x}, [x, C, H, W, Hp, Wp, src_index](Tape<T> &t, Var self) {
    auto const &g = t.grad(self);
    auto &dx = t.grad(x);
    for (Index c = 0; c < C; c++) {
      for (Index y = 0; y < Hp; y++) {
        for (Index xx = 0; xx < Wp; xx++) { dx[c * H * W + src_index(y, xx)] += g[(c * Hp + y) * Wp + xx]; }
      }
    }
  });
}

namespace {

template <typename T> Var crop_at(Tape<T> &tape, Var x, Index h, Index w, bool centered)
{
  auto const &xv = tape.value(x);
  auto const [C, H, W] = chw(xv, "crop");
  if (h == H && w == W) { return x; }
  if (h > H || w > W) { fail(ErrorCategory::ShapeMismatch, "crop larger than input"); }
  Index const y0 = centered ? (H - h) / 2 : 0, x0 = centered ? (W - w) / 2 : 0;
  Shape shape = xv.rank() == 2 ? Shape{h, w} : Shape{C, h, w};
  Tensor<T> out(shape);
  for (Index c = 0; c < C; c++) {
    for (Index y = 0; y < h; y++) {
      for (Index xx = 0; xx < w; xx++) { out[(c * h + y) * w + xx] = xv[(c * H + y + y0) * W + xx + x0]; }
    }
  }
  return tape.record(std::move(out), {x}, [x, C, H, W, h, w, y0, x0](Tape<T> &t, Var self) {
    auto const &g = t.grad(self);
    auto &dx = t.grad(x);
    for (Index c = 0; c < C; c++) {
      for (Index y = 0; y < h; y++) {
        for (Index xx = 0; xx < w; xx++) { dx[(c * H + y + y0) * W + xx + x0] += g[(c * h + y) * w + xx]; }
      }
    }
  });
}

} // namespace

template <typename T> Var crop(Tape<T> &tape, Var x, Index h, Index w) { return crop_at(tape, x, h, w, false); }
template <typename T> Var center_crop(Tape<T> &tape, Var x, Index h, Index w) { return crop_at(tape, x, h, w, true); }

namespace {

template <typename T> Var fourier(Tape<T> &tape, Var x, bool forward)
{
  auto const k = from_paired(tape.value(x));
  auto out = to_paired<T>(forward ? parallax::fft2c(k) : parallax::ifft2c(k));
  return tape.record(std::move(out), {x}, [x, forward](Tape<T> &t, Var self) {
    // Unitary transform: the adjoint is the inverse.
    auto const g = from_paired(t.grad(self));
    accumulate(t.grad(x), to_paired<T>(forward ? parallax::ifft2c(g) : parallax::fft2c(g)));
  });
}

} // namespace

template <typename T> Var fft2c(Tape<T> &tape, Var x) { return fourier(tape, x, true); }
template <typename T> Var ifft2c(Tape<T> &tape, Var x) { return fourier(tape, x, false); }

template <typename T>
Var restrict_to(Tape<T> &tape, Var x, Tensor<T> const &observed, SamplingMask const &m, SamplingMask const &keep)
{
  auto const &xv = tape.value(x);
  require_same_shape(xv.shape(), observed.shape(), "data_consistency");
  if (xv.dim(-1) != m.width() || keep.width() != m.width()) { fail(ErrorCategory::ShapeMismatch, "data_consistency mask width"); }
  auto out = per_column(xv, [&](Index i, Index col) {
    if (m.sampled(col)) { return observed[i]; }
    return keep.sampled(col) ? xv[i] : T{0};
  });
  return tape.record(std::move(out), {x}, [x, m, keep](Tape<T> &t, Var self) {
    auto const &g = t.grad(self);
    auto &dx = t.grad(x);
    Index const W = m.width();
    for (Index i = 0; i < g.size(); i++) {
      Index const col = i % W;
      if (!m.sampled(col) && keep.sampled(col)) { dx[i] += g[i]; }
    }
  });
}

template <typename T> Var data_consistency(Tape<T> &tape, Var x, Tensor<T> const &observed, SamplingMask const &m)
{
  return restrict_to(tape, x, observed, m, full_mask(m.width()));
}

template <typename T> Var grappa_apply(Tape<T> &tape, Var x, SamplingMask const &m, grappa::Kernel const &kernel)
{
  auto out = to_paired<T>(grappa::apply(from_paired(tape.value(x)), m, kernel));
  return tape.record(std::move(out), {x}, [x, m, kernel](Tape<T> &t, Var self) {
    auto const g = from_paired(t.grad(self));
    accumulate(t.grad(x), to_paired<T>(grappa::apply_adjoint(g, m, kernel)));
  });
}

template <typename T> Var rss(Tape<T> &tape, Var x)
{
  auto const &xv = tape.value(x);
  if (xv.rank() != 3 || xv.dim(0) % 2) { fail(ErrorCategory::ShapeMismatch, "rss expects paired (2N, H, W)"); }
  Index const C = xv.dim(0), H = xv.dim(1), W = xv.dim(2), HW = H * W;
  Tensor<T> out({H, W});
  for (Index p = 0; p < HW; p++) {
    T acc = 0;
    for (Index c = 0; c < C; c++) { acc += xv[c * HW + p] * xv[c * HW + p]; }
    out[p] = std::sqrt(acc);
  }
  return tape.record(std::move(out), {x}, [x, C, HW](Tape<T> &t, Var self) {
    auto const &g = t.grad(self);
    auto const &yv = t.value(self);
    auto const &xin = t.value(x);
    auto &dx = t.grad(x);
    for (Index p = 0; p < HW; p++) {
      if (yv[p] == T{0}) { continue; }
      T const s = g[p] / yv[p];
      for (Index c = 0; c < C; c++) { dx[c * HW + p] += s * xin[c * HW + p]; }
    }
  });
}

template <typename T>
Var ssim_l1_loss(Tape<T> &tape, Var x_hat, Tensor<T> const &target, double data_range, double lambda,
                 metrics::SsimParams const &p)
{
  auto const &xv = tape.value(x_hat);
  require_same_shape(xv.shape(), target.shape(), "loss");
  auto sg = metrics::ssim_with_gradient(xv, target, data_range, p);
  double l1 = 0;
  for (Index i = 0; i < xv.size(); i++) { l1 += std::abs(static_cast<double>(xv[i]) - static_cast<double>(target[i])); }
  Tensor<T> out({1}, static_cast<T>(-sg.value + lambda * l1));
  auto const lam = static_cast<T>(lambda);
  return tape.record(std::move(out), {x_hat}, [x_hat, target, lam, d = std::move(sg.d_xhat)](Tape<T> &t, Var self) {
    T const g = t.grad(self)[0];
    auto const &xin = t.value(x_hat);
    auto &dx = t.grad(x_hat);
    for (Index i = 0; i < dx.size(); i++) {
      T const diff = xin[i] - target[i];
      T const sign = diff > 0 ? T{1} : (diff < 0 ? T{-1} : T{0});
      dx[i] += g * (-d[i] + lam * sign);
    }
  });
}

template <typename T> Var dot(Tape<T> &tape, Var x, Tensor<T> const &weights)
{
  auto const &xv = tape.value(x);
  require_same_shape(xv.shape(), weights.shape(), "dot");
  double s = 0;
  for (Index i = 0; i < xv.size(); i++) { s += static_cast<double>(xv[i]) * static_cast<double>(weights[i]); }
  return tape.record(Tensor<T>({1}, static_cast<T>(s)), {x}, [x, weights](Tape<T> &t, Var self) {
    T const g = t.grad(self)[0];
    auto &dx = t.grad(x);
    for (Index i = 0; i < dx.size(); i++) { dx[i] += g * weights[i]; }
  });
}

#define PARALLAX_INSTANTIATE_OPS(T)                                                                                   \
  template Tensor<T> to_paired<T>(ComplexTensor const &);                                                              \
  template ComplexTensor from_paired<T>(Tensor<T> const &);                                                            \
  template Var conv2d<T>(Tape<T> &, Var, Var, Var, Index);                                                             \
  template Var conv2d<T>(Tape<T> &, Var, Var, Index);                                                                  \
  template Var conv_transpose2x2<T>(Tape<T> &, Var, Var);                                                              \
  template Var instance_norm<T>(Tape<T> &, Var, double);                                                               \
  template Var leaky_relu<T>(Tape<T> &, Var, double);                                                                  \
  template Var avg_pool2<T>(Tape<T> &, Var);                                                                           \
  template Var concat<T>(Tape<T> &, Var, Var);                                                                         \
  template Var add<T>(Tape<T> &, Var, Var);                                                                            \
  template Var reflect_pad<T>(Tape<T> &, Var, Index, Index);                                                           \
  template Var crop<T>(Tape<T> &, Var, Index, Index);                                                                  \
  template Var center_crop<T>(Tape<T> &, Var, Index, Index);                                                           \
  template Var fft2c<T>(Tape<T> &, Var);                                                                               \
  template Var ifft2c<T>(Tape<T> &, Var);                                                                              \
  template Var data_consistency<T>(Tape<T> &, Var, Tensor<T> const &, SamplingMask const &);                           \
  template Var restrict_to<T>(Tape<T> &, Var, Tensor<T> const &, SamplingMask const &, SamplingMask const &);          \
  template Var grappa_apply<T>(Tape<T> &, Var, SamplingMask const &, grappa::Kernel const &);                          \
  template Var rss<T>(Tape<T> &, Var);                                                                                 \
  template Var ssim_l1_loss<T>(Tape<T> &, Var, Tensor<T> const &, double, double, metrics::SsimParams const &);        \
  template Var dot<T>(Tape<T> &, Var, Tensor<T> const &);

PARALLAX_INSTANTIATE_OPS(float)
PARALLAX_INSTANTIATE_OPS(double)

} // namespace parallax::nn
