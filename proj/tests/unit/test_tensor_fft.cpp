#include "oracles.hpp"

#include <parallax/fft.hpp>
#include <parallax/parallel.hpp>
#include <parallax/tensor.hpp>

#include <doctest.h>

using namespace parallax;

namespace {

double max_abs_diff(ComplexTensor const &a, ComplexTensor const &b)
{
  double m = 0;
  for (Index i = 0; i < a.size(); i++) { m = std::max(m, std::abs(a[i] - b[i])); }
  return m;
}

double rel_diff(ComplexTensor const &a, ComplexTensor const &b) { return norm2(sub(a, b)) / norm2(b); }

} // namespace

TEST_CASE("elementwise basics")
{
  ComplexTensor a({1, 1}, Cx(3, 4));
  CHECK(abs(a)[0] == 5.0);
  auto const x = oracle::random_complex({3, 5}, 1);
  CHECK(conj(conj(x)) == x);
  auto const z = scale(x, Cx(0, 0));
  for (auto v : z.data()) { CHECK(v == Cx{}); }
  CHECK_THROWS_AS(add(x, oracle::random_complex({5, 3}, 2)), Error);
  try {
    sub(x, oracle::random_complex({5, 3}, 2));
  } catch (Error const &e) {
    CHECK(e.category() == ErrorCategory::ShapeMismatch);
  }
  MaskTensor m({3, 5});
  m[0] = 1;
  auto const w = where(m, x, z);
  CHECK(w[0] == x[0]);
  CHECK(w[1] == Cx{});
}

TEST_CASE("tensor shape contract")
{
  CHECK_THROWS_AS(ComplexTensor({2, 2}, std::vector<Cx>(3)), Error);
  ComplexTensor t({2, 3, 4});
  CHECK(t.size() == 24);
  CHECK(t.dim(-1) == 4);
  CHECK_THROWS_AS(t.dim(3), Error);
}

TEST_CASE("fft2c impulse and constant")
{
  ComplexTensor imp({1, 4, 4});
  imp(0, 2, 2) = 1;
  auto const k = fft2c(imp);
  for (auto v : k.data()) {
    CHECK(std::abs(v.real() - 0.25) < 1e-15);
    CHECK(std::abs(v.imag()) < 1e-15);
  }
  ComplexTensor ones({4, 4}, Cx(1, 0));
  auto const f = fft2c(ones);
  auto const g = ifft2c(ones);
  for (Index y = 0; y < 4; y++) {
    for (Index x = 0; x < 4; x++) {
      Cx const want = (y == 2 && x == 2) ? Cx(4, 0) : Cx{};
      CHECK(std::abs(f(y, x) - want) < 1e-14);
      CHECK(std::abs(g(y, x) - want) < 1e-14);
    }
  }
}

TEST_CASE("fft2c matches the DFT-sum oracle for all sizes up to 16")
{
  double worst = 0;
  for (Index H = 1; H <= 16; H++) {
    for (Index W = 1; W <= 16; W++) {
      auto const x = oracle::random_complex({2, H, W}, static_cast<std::uint64_t>(H * 100 + W));
      worst = std::max(worst, max_abs_diff(fft2c(x), oracle::dft2c(x, -1)));
      worst = std::max(worst, max_abs_diff(ifft2c(x), oracle::dft2c(x, +1)));
    }
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("odd sizes place DC at floor(n/2)")
{
  ComplexTensor x({5, 7}, Cx(1, 0));
  auto const k = fft2c(x);
  CHECK(std::abs(k(2, 3) - Cx(std::sqrt(35.0), 0)) < 1e-12);
}

TEST_CASE("Parseval, round trip and linearity")
{
  for (Index H = 1; H <= 16; H++) {
    for (Index W = 1; W <= 16; W++) {
      auto const x = oracle::random_complex({H, W}, static_cast<std::uint64_t>(7 + H * 31 + W));
      auto const k = fft2c(x);
      double const nx = norm2(x), nk = norm2(k);
      CHECK(std::abs(nk - nx) / nx < 1e-12);
      CHECK(rel_diff(ifft2c(k), x) < 1e-12);
    }
  }
  auto const x = oracle::random_complex({3, 8, 8}, 11), y = oracle::random_complex({3, 8, 8}, 12);
  Cx const a(0.3, -1.2), b(2.0, 0.5);
  auto const lhs = fft2c(add(scale(x, a), scale(y, b)));
  auto const rhs = add(scale(fft2c(x), a), scale(fft2c(y), b));
  CHECK(rel_diff(lhs, rhs) < 1e-12);
}

TEST_CASE("6x10 matches oracle at 1e-12")
{
  auto const x = oracle::random_complex({6, 10}, 99);
  CHECK(max_abs_diff(ifft2c(x), oracle::dft2c(x, +1)) < 1e-12);
  CHECK(max_abs_diff(fft2c(x), oracle::dft2c(x, -1)) < 1e-12);
}

TEST_CASE("float path agrees with double")
{
  auto const x = oracle::random_complex({2, 8, 12}, 5);
  auto const kf = cast<Cx>(fft2c(cast<Cxf>(x)));
  CHECK(rel_diff(kf, fft2c(x)) < 1e-6);
}

TEST_CASE("fft2c rejects rank < 2")
{
  ComplexTensor v({8});
  try {
    fft2c(v);
    FAIL("expected an error");
  } catch (Error const &e) {
    CHECK(e.category() == ErrorCategory::InvalidInput);
  }
}

TEST_CASE("per-coil transforms are independent of the thread schedule")
{
  auto const x = oracle::random_complex({6, 16, 12}, 21);
  auto const parallel = fft2c(x);
  set_deterministic(true);
  auto const serial = fft2c(x);
  set_deterministic(false);
  CHECK(parallel == serial);
}
