#include "gradcheck.hpp"
#include "oracles.hpp"

#include <parallax/fft.hpp>
#include <parallax/nn/ops.hpp>
#include <parallax/recon.hpp>

#include <doctest.h>

using namespace parallax;
using nn::Tape;
using nn::Var;
using gradcheck::random_tensor;
using RealT = Tensor<double>;

namespace {

constexpr double kTol = 1e-4;

// Scalar probe: sum(w * f(leaves)) with fixed random w.
gradcheck::Builder probed(std::function<Var(Tape<double> &, std::vector<Var> const &)> f, Shape out, std::uint64_t seed)
{
  auto const w = random_tensor(std::move(out), seed);
  return [f = std::move(f), w](Tape<double> &t, std::vector<Var> const &v) { return nn::dot(t, f(t, v), w); };
}

grappa::Kernel random_kernel(Index coils, grappa::Geometry g, std::uint64_t seed)
{
  grappa::Kernel k;
  k.geometry = g;
  k.coils = coils;
  k.weights = oracle::random_complex({g.accel - 1, coils, coils, g.source_lines, g.readout_taps}, seed);
  k.weights = scale(k.weights, Cx(0.2, 0));
  return k;
}

} // namespace

TEST_CASE("conv2d gradients, with and without bias")
{
  auto const x = random_tensor({3, 7, 6}, 1);
  auto const w = random_tensor({4, 3, 3, 3}, 2);
  auto const b = random_tensor({4}, 3);
  auto r = gradcheck::check({x, w, b}, probed([](auto &t, auto const &v) { return nn::conv2d(t, v[0], v[1], v[2], 1); },
                                               {4, 7, 6}, 4));
  CHECK(r.max_rel < kTol);
  r = gradcheck::check({x, w}, probed([](auto &t, auto const &v) { return nn::conv2d(t, v[0], v[1], 1); }, {4, 7, 6}, 5));
  CHECK(r.max_rel < kTol);
  auto const w1 = random_tensor({2, 3, 1, 1}, 6);
  r = gradcheck::check({x, w1, random_tensor({2}, 7)},
                       probed([](auto &t, auto const &v) { return nn::conv2d(t, v[0], v[1], v[2], 0); }, {2, 7, 6}, 8));
  CHECK(r.max_rel < kTol);
}

TEST_CASE("conv2d forward matches a direct loop")
{
  auto const x = random_tensor({2, 5, 4}, 11);
  auto const w = random_tensor({3, 2, 3, 3}, 12);
  Tape<double> t;
  auto const y = t.value(nn::conv2d(t, t.constant(x), t.constant(w), 1));
  REQUIRE(y.shape() == Shape{3, 5, 4});
  for (Index o = 0; o < 3; o++) {
    for (Index r = 0; r < 5; r++) {
      for (Index c = 0; c < 4; c++) {
        double s = 0;
        for (Index i = 0; i < 2; i++) {
          for (Index dy = 0; dy < 3; dy++) {
            for (Index dx = 0; dx < 3; dx++) {
              Index const yy = r + dy - 1, xx = c + dx - 1;
              if (yy < 0 || yy >= 5 || xx < 0 || xx >= 4) { continue; }
              s += w[((o * 2 + i) * 3 + dy) * 3 + dx] * x[(i * 5 + yy) * 4 + xx];
            }
          }
        }
        CHECK(std::abs(y[(o * 5 + r) * 4 + c] - s) < 1e-12);
      }
    }
  }
}

TEST_CASE("transposed conv, instance norm, leaky ReLU, pooling")
{
  auto const x = random_tensor({3, 4, 6}, 21);
  auto r = gradcheck::check({x, random_tensor({3, 2, 2, 2}, 22)},
                            probed([](auto &t, auto const &v) { return nn::conv_transpose2x2(t, v[0], v[1]); }, {2, 8, 12}, 23));
  CHECK(r.max_rel < kTol);
  r = gradcheck::check({x}, probed([](auto &t, auto const &v) { return nn::instance_norm(t, v[0]); }, {3, 4, 6}, 24));
  CHECK(r.max_rel < kTol);
  r = gradcheck::check({x}, probed([](auto &t, auto const &v) { return nn::leaky_relu(t, v[0]); }, {3, 4, 6}, 25));
  CHECK(r.max_rel < kTol);
  r = gradcheck::check({x}, probed([](auto &t, auto const &v) { return nn::avg_pool2(t, v[0]); }, {3, 2, 3}, 26));
  CHECK(r.max_rel < kTol);
}

TEST_CASE("instance norm output statistics")
{
  Tape<double> t;
  auto const y = t.value(nn::instance_norm(t, t.constant(random_tensor({2, 6, 5}, 31, 3.0))));
  for (Index c = 0; c < 2; c++) {
    double m = 0, v = 0;
    for (Index p = 0; p < 30; p++) { m += y[c * 30 + p]; }
    m /= 30;
    for (Index p = 0; p < 30; p++) { v += (y[c * 30 + p] - m) * (y[c * 30 + p] - m); }
    CHECK(std::abs(m) < 1e-12);
    CHECK(v / 30 == doctest::Approx(1.0).epsilon(1e-5));
  }
}

TEST_CASE("concat, add, padding and cropping")
{
  auto const a = random_tensor({2, 5, 6}, 41), b = random_tensor({3, 5, 6}, 42);
  auto r = gradcheck::check({a, b}, probed([](auto &t, auto const &v) { return nn::concat(t, v[0], v[1]); }, {5, 5, 6}, 43));
  CHECK(r.max_rel < kTol);
  r = gradcheck::check({a, random_tensor({2, 5, 6}, 44)},
                       probed([](auto &t, auto const &v) { return nn::add(t, v[0], v[1]); }, {2, 5, 6}, 45));
  CHECK(r.max_rel < kTol);
  r = gradcheck::check({a}, probed([](auto &t, auto const &v) { return nn::reflect_pad(t, v[0], 3, 2); }, {2, 8, 8}, 46));
  CHECK(r.max_rel < kTol);
  r = gradcheck::check({a}, probed([](auto &t, auto const &v) { return nn::crop(t, v[0], 3, 4); }, {2, 3, 4}, 47));
  CHECK(r.max_rel < kTol);
  r = gradcheck::check({a}, probed([](auto &t, auto const &v) { return nn::center_crop(t, v[0], 3, 3); }, {2, 3, 3}, 48));
  CHECK(r.max_rel < kTol);

  Tape<double> t;
  auto const p = t.value(nn::reflect_pad(t, t.constant(a), 3, 2));
  // Row H-1+k mirrors row H-1-k.
  for (Index c = 0; c < 2; c++) {
    for (Index k = 1; k <= 3; k++) {
      for (Index x = 0; x < 6; x++) { CHECK(p[(c * 8 + 4 + k) * 8 + x] == a[(c * 5 + 4 - k) * 6 + x]); }
    }
  }
}

TEST_CASE("fft2c and ifft2c nodes")
{
  auto const x = random_tensor({4, 6, 5}, 51);
  auto r = gradcheck::check({x}, probed([](auto &t, auto const &v) { return nn::fft2c(t, v[0]); }, {4, 6, 5}, 52));
  CHECK(r.max_rel < kTol);
  r = gradcheck::check({x}, probed([](auto &t, auto const &v) { return nn::ifft2c(t, v[0]); }, {4, 6, 5}, 53));
  CHECK(r.max_rel < kTol);

  auto const k = oracle::random_complex({2, 6, 5}, 54);
  Tape<double> t;
  auto const y = nn::from_paired(t.value(nn::fft2c(t, t.constant(nn::to_paired<double>(k)))));
  CHECK(norm2(sub(y, parallax::fft2c(k))) < 1e-12 * norm2(k));
}

TEST_CASE("data consistency gradient is exactly zero at observed columns")
{
  Index const H = 6, W = 16;
  auto const m = make_random_mask(W, 4, 0.125, 3);
  auto const observed = nn::to_paired<double>(apply_mask(oracle::random_complex({2, H, W}, 61), m));
  auto const x = random_tensor({4, H, W}, 62);
  auto build = probed([&](auto &t, auto const &v) { return nn::data_consistency(t, v[0], observed, m); }, {4, H, W}, 63);
  auto const r = gradcheck::check({x}, build);
  CHECK(r.max_rel < kTol);
  bool exact = true, passes = true;
  auto const probe = random_tensor({4, H, W}, 63);
  for (Index c = 0; c < 4; c++) {
    for (Index y = 0; y < H; y++) {
      for (Index col = 0; col < W; col++) {
        auto const i = (c * H + y) * W + col;
        if (m.sampled(col)) {
          exact = exact && r.analytic[0][i] == 0.0;
        } else {
          passes = passes && r.analytic[0][i] == probe[i];
        }
      }
    }
  }
  CHECK(exact);
  CHECK(passes);

  auto const keep = m.united(aligned_lattice(m, 2));
  auto const r2 = gradcheck::check(
    {x}, probed([&](auto &t, auto const &v) { return nn::restrict_to(t, v[0], observed, m, keep); }, {4, H, W}, 64));
  CHECK(r2.max_rel < kTol);
  for (Index c = 0; c < 4; c++) {
    for (Index y = 0; y < H; y++) {
      for (Index col = 0; col < W; col++) {
        if (!keep.sampled(col) || m.sampled(col)) { CHECK(r2.analytic[0][(c * H + y) * W + col] == 0.0); }
      }
    }
  }
}

TEST_CASE("GRAPPA layer gradient equals the adjoint convolution")
{
  Index const N = 2, H = 8, W = 16;
  grappa::Geometry const g{2, 2, 3};
  auto const kernel = random_kernel(N, g, 71);
  auto const m = equispaced_mask_with_offset(W, 2, 0.25, 0);
  auto const x = nn::to_paired<double>(apply_mask(oracle::random_complex({N, H, W}, 72), m));
  auto const wts = random_tensor({2 * N, H, W}, 73);
  auto const r = gradcheck::check(
    {x}, [&](auto &t, auto const &v) { return nn::dot(t, nn::grappa_apply(t, v[0], m, kernel), wts); });
  CHECK(r.max_rel < kTol);
  auto const adj = nn::to_paired<double>(grappa::apply_adjoint(nn::from_paired(wts), m, kernel));
  double num = 0, den = 0;
  for (Index i = 0; i < adj.size(); i++) {
    num += (adj[i] - r.analytic[0][i]) * (adj[i] - r.analytic[0][i]);
    den += adj[i] * adj[i];
  }
  CHECK(std::sqrt(num / den) < 1e-12);

  grappa::Geometry const g3{3, 2, 3};
  auto const m3 = equispaced_mask_with_offset(18, 3, 0.0, 0);
  auto const x3 = nn::to_paired<double>(apply_mask(oracle::random_complex({N, H, 18}, 74), m3));
  auto const k3 = random_kernel(N, g3, 75);
  auto const r3 = gradcheck::check(
    {x3}, probed([&](auto &t, auto const &v) { return nn::grappa_apply(t, v[0], m3, k3); }, {2 * N, H, 18}, 76));
  CHECK(r3.max_rel < kTol);
}

TEST_CASE("rss node")
{
  auto const x = random_tensor({6, 5, 7}, 81);
  auto const r = gradcheck::check({x}, probed([](auto &t, auto const &v) { return nn::rss(t, v[0]); }, {5, 7}, 82));
  CHECK(r.max_rel < kTol);
  Tape<double> t;
  auto const y = t.value(nn::rss(t, t.constant(x)));
  auto const ref = parallax::rss(nn::from_paired(x));
  for (Index p = 0; p < 35; p++) { CHECK(std::abs(y[p] - ref[p]) < 1e-14); }

  // Zero input: the gradient is defined as zero rather than NaN.
  Tape<double> z;
  auto const leaf = z.parameter(RealT({2, 3, 3}), "zero");
  z.backward(nn::dot(z, nn::rss(z, leaf), random_tensor({3, 3}, 83)));
  CHECK(all_finite(z.grad(leaf)));
}

TEST_CASE("loss node")
{
  for (std::uint64_t s = 0; s < 3; s++) {
    auto const a = oracle::random_real({8, 8}, 90 + s, 0, 1);
    auto const b = oracle::random_real({8, 8}, 95 + s, 0, 1);
    metrics::SsimParams p;
    p.window = 3;
    auto const r = gradcheck::check(
      {a}, [&](auto &t, auto const &v) { return nn::ssim_l1_loss(t, v[0], b, 1.0, 1e-3, p); });
    CHECK(r.max_rel < kTol);
    Tape<double> t;
    double const j = t.value(nn::ssim_l1_loss(t, t.constant(a), b, 1.0, 1e-3, p))[0];
    double l1 = 0;
    for (Index i = 0; i < 64; i++) { l1 += std::abs(a[i] - b[i]); }
    CHECK(std::abs(j - (-oracle::ssim(a, b, 1.0, 3, 0.01, 0.03) + 1e-3 * l1)) < 1e-12);
  }
  auto const x = oracle::random_real({8, 8}, 99, 0, 1);
  Tape<double> t;
  CHECK(t.value(nn::ssim_l1_loss(t, t.constant(x), x, 1.0, 1e-3, {3, 0.01, 0.03}))[0] == -1.0);
}

TEST_CASE("tape visits each node once and gradients match leaf shapes")
{
  Tape<double> t;
  auto const a = t.parameter(random_tensor({2, 4, 4}, 101), "a");
  auto const w = t.parameter(random_tensor({2, 2, 3, 3}, 102), "w");
  auto const unused = t.parameter(random_tensor({3}, 103), "unused");
  auto const y = nn::conv2d(t, a, w, 1);
  auto const z = nn::add(t, y, a); // a reused: gradients accumulate
  auto const out = nn::dot(t, nn::leaky_relu(t, z), random_tensor({2, 4, 4}, 104));
  t.backward(out);
  CHECK(t.visits() == 4);
  CHECK(t.grad(a).shape() == t.value(a).shape());
  CHECK(t.grad(w).shape() == t.value(w).shape());
  CHECK_FALSE(t.has_grad(unused));
  CHECK_THROWS_AS(t.backward(y), Error);
}

TEST_CASE("float instantiations agree with double")
{
  auto const xd = random_tensor({2, 8, 8}, 111);
  auto const wd = random_tensor({2, 2, 3, 3}, 112);
  Tape<double> td;
  auto const yd = td.value(nn::instance_norm(td, nn::conv2d(td, td.constant(xd), td.constant(wd), 1)));
  Tape<float> tf;
  auto const yf = tf.value(nn::instance_norm(tf, nn::conv2d(tf, tf.constant(cast<float>(xd)), tf.constant(cast<float>(wd)), 1)));
  double worst = 0;
  for (Index i = 0; i < yd.size(); i++) { worst = std::max(worst, std::abs(yd[i] - static_cast<double>(yf[i]))); }
  CHECK(worst < 1e-4);
}
