#pragma once

#include "error.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <new>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

namespace parallax {

using Index = std::ptrdiff_t;
using Shape = std::vector<Index>;
using Cx = std::complex<double>;
using Cxf = std::complex<float>;

template <typename V> struct is_complex : std::false_type {};
template <typename S> struct is_complex<std::complex<S>> : std::true_type {};
template <typename V> inline constexpr bool is_complex_v = is_complex<V>::value;

template <typename V> struct real_of { using type = V; };
template <typename S> struct real_of<std::complex<S>> { using type = S; };
template <typename V> using real_of_t = typename real_of<V>::type;

inline Index shape_size(Shape const &s)
{
  return std::accumulate(s.begin(), s.end(), Index{1}, std::multiplies<>());
}

std::string shape_string(Shape const &s);

/*
 * Cache-line aligned storage. Vectorized kernels peel scalar iterations up to
 * an aligned address, so a fixed base alignment keeps results independent of
 * where the allocator happens to place a tensor.
 */
template <typename V> struct AlignedAllocator
{
  using value_type = V;
  static constexpr std::align_val_t alignment{64};

  AlignedAllocator() = default;
  template <typename U> AlignedAllocator(AlignedAllocator<U> const &) noexcept {}

  V *allocate(std::size_t n) { return static_cast<V *>(::operator new(n * sizeof(V), alignment)); }
  void deallocate(V *p, std::size_t) noexcept { ::operator delete(p, alignment); }

  template <typename U> bool operator==(AlignedAllocator<U> const &) const noexcept { return true; }
};

/*
 * Dense n-d array, row-major with the last axis fastest. Multi-coil data is
 * (coils, height, width); single images are (height, width).
 */
template <typename V> class Tensor
{
public:
  using value_type = V;

  Tensor() = default;

  explicit Tensor(Shape shape, V fill = V{})
    : shape_{std::move(shape)}
    , data_(static_cast<std::size_t>(shape_size(shape_)), fill)
  {
    for (auto e : shape_) {
      if (e < 0) { fail(ErrorCategory::InvalidInput, "negative extent in " + shape_string(shape_)); }
    }
  }

  Tensor(Shape shape, std::vector<V> const &data)
    : shape_{std::move(shape)}
    , data_(data.begin(), data.end())
  {
    if (static_cast<Index>(data_.size()) != shape_size(shape_)) {
      fail(ErrorCategory::ShapeMismatch,
           "data length " + std::to_string(data_.size()) + " does not match shape " + shape_string(shape_));
    }
  }

  Shape const &shape() const noexcept { return shape_; }
  Index rank() const noexcept { return static_cast<Index>(shape_.size()); }
  Index size() const noexcept { return static_cast<Index>(data_.size()); }
  bool empty() const noexcept { return data_.empty(); }

  // Negative axes count from the back.
  Index dim(Index axis) const
  {
    auto const a = axis < 0 ? rank() + axis : axis;
    if (a < 0 || a >= rank()) { fail(ErrorCategory::InvalidInput, "axis out of range for " + shape_string(shape_)); }
    return shape_[static_cast<std::size_t>(a)];
  }

  std::span<V> data() noexcept { return data_; }
  std::span<V const> data() const noexcept { return data_; }
  V *raw() noexcept { return data_.data(); }
  V const *raw() const noexcept { return data_.data(); }

  V &operator[](Index i) { return data_[static_cast<std::size_t>(i)]; }
  V const &operator[](Index i) const { return data_[static_cast<std::size_t>(i)]; }

  V &operator()(Index y, Index x) { return data_[static_cast<std::size_t>(y * shape_.back() + x)]; }
  V const &operator()(Index y, Index x) const { return data_[static_cast<std::size_t>(y * shape_.back() + x)]; }

  V &operator()(Index c, Index y, Index x)
  {
    auto const h = shape_[shape_.size() - 2], w = shape_.back();
    return data_[static_cast<std::size_t>((c * h + y) * w + x)];
  }
  V const &operator()(Index c, Index y, Index x) const
  {
    auto const h = shape_[shape_.size() - 2], w = shape_.back();
    return data_[static_cast<std::size_t>((c * h + y) * w + x)];
  }

  Tensor reshaped(Shape s) const
  {
    if (shape_size(s) != size()) {
      fail(ErrorCategory::ShapeMismatch, "cannot reshape " + shape_string(shape_) + " to " + shape_string(s));
    }
    Tensor out;
    out.shape_ = std::move(s);
    out.data_ = data_;
    return out;
  }

  bool operator==(Tensor const &) const = default;

private:
  Shape shape_;
  std::vector<V, AlignedAllocator<V>> data_;
};

using ComplexTensor = Tensor<Cx>;
using ComplexTensorF = Tensor<Cxf>;
using RealImage = Tensor<double>;
using MaskTensor = Tensor<std::uint8_t>;

inline void require_same_shape(Shape const &a, Shape const &b, char const *what)
{
  if (a != b) { fail(ErrorCategory::ShapeMismatch, std::string(what) + ": " + shape_string(a) + " vs " + shape_string(b)); }
}

// Views a rank-2 (H, W) tensor as (1, H, W); rank-3 passes through.
template <typename V> Tensor<V> as_coils(Tensor<V> const &t)
{
  if (t.rank() == 3) { return t; }
  if (t.rank() == 2) { return t.reshaped({1, t.dim(0), t.dim(1)}); }
  fail(ErrorCategory::ShapeMismatch, "expected (coils, H, W) or (H, W), got " + shape_string(t.shape()));
}

template <typename To, typename From> Tensor<To> cast(Tensor<From> const &t)
{
  std::vector<To> out(static_cast<std::size_t>(t.size()));
  std::transform(t.data().begin(), t.data().end(), out.begin(), [](From const &v) {
    if constexpr (is_complex_v<To> && is_complex_v<From>) {
      using S = typename To::value_type;
      return To(static_cast<S>(v.real()), static_cast<S>(v.imag()));
    } else if constexpr (is_complex_v<To>) {
      using S = typename To::value_type;
      return To(static_cast<S>(v), S{0});
    } else {
      static_assert(!is_complex_v<From>, "use abs() or real() to drop the imaginary part");
      return static_cast<To>(v);
    }
  });
  return Tensor<To>(t.shape(), std::move(out));
}

template <typename V> Tensor<V> add(Tensor<V> const &a, Tensor<V> const &b)
{
  require_same_shape(a.shape(), b.shape(), "add");
  Tensor<V> out(a.shape());
  for (Index i = 0; i < a.size(); i++) { out[i] = a[i] + b[i]; }
  return out;
}

template <typename V> Tensor<V> sub(Tensor<V> const &a, Tensor<V> const &b)
{
  require_same_shape(a.shape(), b.shape(), "sub");
  Tensor<V> out(a.shape());
  for (Index i = 0; i < a.size(); i++) { out[i] = a[i] - b[i]; }
  return out;
}

template <typename V, typename S> Tensor<V> scale(Tensor<V> const &a, S const s)
{
  Tensor<V> out(a.shape());
  auto const sv = static_cast<V>(s);
  for (Index i = 0; i < a.size(); i++) { out[i] = a[i] * sv; }
  return out;
}

template <typename V> Tensor<V> conj(Tensor<V> const &a)
{
  static_assert(is_complex_v<V>);
  Tensor<V> out(a.shape());
  for (Index i = 0; i < a.size(); i++) { out[i] = std::conj(a[i]); }
  return out;
}

template <typename V> Tensor<real_of_t<V>> abs(Tensor<V> const &a)
{
  Tensor<real_of_t<V>> out(a.shape());
  for (Index i = 0; i < a.size(); i++) { out[i] = std::abs(a[i]); }
  return out;
}

template <typename V> Tensor<real_of_t<V>> real(Tensor<V> const &a)
{
  Tensor<real_of_t<V>> out(a.shape());
  for (Index i = 0; i < a.size(); i++) { out[i] = std::real(a[i]); }
  return out;
}

// Picks a where cond is nonzero, else b.
template <typename V> Tensor<V> where(MaskTensor const &cond, Tensor<V> const &a, Tensor<V> const &b)
{
  require_same_shape(a.shape(), b.shape(), "where");
  require_same_shape(cond.shape(), a.shape(), "where condition");
  Tensor<V> out(a.shape());
  for (Index i = 0; i < a.size(); i++) { out[i] = cond[i] ? a[i] : b[i]; }
  return out;
}

template <typename V> double norm2(Tensor<V> const &a)
{
  double s = 0;
  for (auto const &v : a.data()) { s += static_cast<double>(std::norm(v)); }
  return std::sqrt(s);
}

template <typename V> bool all_finite(Tensor<V> const &a)
{
  return std::all_of(a.data().begin(), a.data().end(), [](V const &v) {
    if constexpr (is_complex_v<V>) {
      return std::isfinite(v.real()) && std::isfinite(v.imag());
    } else {
      return std::isfinite(v);
    }
  });
}

// Central (H, W) crop of the last two axes.
template <typename V> Tensor<V> center_crop(Tensor<V> const &a, Index h, Index w)
{
  auto const H = a.dim(-2), W = a.dim(-1);
  if (h > H || w > W) { fail(ErrorCategory::ShapeMismatch, "crop larger than input " + shape_string(a.shape())); }
  auto shape = a.shape();
  shape[shape.size() - 2] = h;
  shape[shape.size() - 1] = w;
  Tensor<V> out(shape);
  Index const lead = a.size() / (H * W);
  Index const y0 = (H - h) / 2, x0 = (W - w) / 2;
  for (Index c = 0; c < lead; c++) {
    for (Index y = 0; y < h; y++) {
      for (Index x = 0; x < w; x++) { out[(c * h + y) * w + x] = a[(c * H + y + y0) * W + x + x0]; }
    }
  }
  return out;
}

} // namespace parallax
