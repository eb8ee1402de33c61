#include "parallax/fft.hpp"
#include "parallax/parallel.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <tuple>

namespace parallax {

namespace {

// FFTW planning is not thread-safe; execution with new-array calls is.
std::mutex g_plan_mutex;

template <typename S> struct Fftw;

template <> struct Fftw<double>
{
  using plan_t = fftw_plan;
  using cx_t = fftw_complex;
  static plan_t plan(int h, int w, int sign)
  {
    auto *buf = static_cast<cx_t *>(fftw_malloc(sizeof(cx_t) * static_cast<std::size_t>(h * w)));
    auto p = fftw_plan_dft_2d(h, w, buf, buf, sign, FFTW_ESTIMATE);
    fftw_free(buf);
    return p;
  }
  static void execute(plan_t p, std::complex<double> *data)
  {
    fftw_execute_dft(p, reinterpret_cast<cx_t *>(data), reinterpret_cast<cx_t *>(data));
  }
  static void *alloc(std::size_t n) { return fftw_malloc(sizeof(cx_t) * n); }
  static void release(void *p) { fftw_free(p); }
};

template <> struct Fftw<float>
{
  using plan_t = fftwf_plan;
  using cx_t = fftwf_complex;
  static plan_t plan(int h, int w, int sign)
  {
    auto *buf = static_cast<cx_t *>(fftwf_malloc(sizeof(cx_t) * static_cast<std::size_t>(h * w)));
    auto p = fftwf_plan_dft_2d(h, w, buf, buf, sign, FFTW_ESTIMATE);
    fftwf_free(buf);
    return p;
  }
  static void execute(plan_t p, std::complex<float> *data)
  {
    fftwf_execute_dft(p, reinterpret_cast<cx_t *>(data), reinterpret_cast<cx_t *>(data));
  }
  static void *alloc(std::size_t n) { return fftwf_malloc(sizeof(cx_t) * n); }
  static void release(void *p) { fftwf_free(p); }
};

template <typename S> typename Fftw<S>::plan_t cached_plan(int h, int w, int sign)
{
  static std::map<std::tuple<int, int, int>, typename Fftw<S>::plan_t> plans;
  std::lock_guard lock(g_plan_mutex);
  auto key = std::make_tuple(h, w, sign);
  auto it = plans.find(key);
  if (it == plans.end()) { it = plans.emplace(key, Fftw<S>::plan(h, w, sign)).first; }
  return it->second;
}

template <typename S> Tensor<std::complex<S>> transform(Tensor<std::complex<S>> const &x, int sign)
{
  if (x.rank() < 2) {
    fail(ErrorCategory::InvalidInput, "fft2c needs at least 2 axes, got " + shape_string(x.shape()));
  }
  Index const H = x.dim(-2), W = x.dim(-1);
  if (H < 1 || W < 1) { fail(ErrorCategory::InvalidInput, "fft2c needs non-empty spatial axes"); }
  Index const plane = H * W;
  Index const lead = x.size() / plane;
  Tensor<std::complex<S>> out(x.shape());
  auto plan = cached_plan<S>(static_cast<int>(H), static_cast<int>(W), sign);
  S const norm = static_cast<S>(1.0 / std::sqrt(static_cast<double>(plane)));
  // ifftshift: slot j reads x[(j + n/2) mod n]. fftshift writes slot j to (j + n/2) mod n.
  Index const hs = H / 2, ws = W / 2;
  parallel_for(lead, [&](Index c) {
    auto *buf = static_cast<std::complex<S> *>(Fftw<S>::alloc(static_cast<std::size_t>(plane)));
    std::unique_ptr<void, void (*)(void *)> guard(buf, Fftw<S>::release);
    auto const *src = x.raw() + c * plane;
    for (Index y = 0; y < H; y++) {
      Index const sy = (y + hs) % H;
      for (Index xx = 0; xx < W; xx++) { buf[y * W + xx] = src[sy * W + (xx + ws) % W]; }
    }
    Fftw<S>::execute(plan, buf);
    auto *dst = out.raw() + c * plane;
    for (Index y = 0; y < H; y++) {
      Index const dy = (y + hs) % H;
      for (Index xx = 0; xx < W; xx++) { dst[dy * W + (xx + ws) % W] = buf[y * W + xx] * norm; }
    }
  });
  return out;
}

} // namespace

template <typename S> Tensor<std::complex<S>> fft2c(Tensor<std::complex<S>> const &x)
{
  return transform<S>(x, FFTW_FORWARD);
}

template <typename S> Tensor<std::complex<S>> ifft2c(Tensor<std::complex<S>> const &k)
{
  return transform<S>(k, FFTW_BACKWARD);
}

template Tensor<Cx> fft2c(Tensor<Cx> const &);
template Tensor<Cx> ifft2c(Tensor<Cx> const &);
template Tensor<Cxf> fft2c(Tensor<Cxf> const &);
template Tensor<Cxf> ifft2c(Tensor<Cxf> const &);

} // namespace parallax
