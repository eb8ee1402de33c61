#include "png.hpp"

#include <parallax/error.hpp>

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

namespace parallax::cli {

void write_png(std::filesystem::path const &path, RealImage const &img)
{
  if (img.rank() != 2) { fail(ErrorCategory::ShapeMismatch, "png expects an (H, W) image, got " + shape_string(img.shape())); }
  auto const H = img.dim(0), W = img.dim(1);
  auto const [lo, hi] = std::minmax_element(img.data().begin(), img.data().end());
  double const range = *hi - *lo;
  std::vector<png_byte> pixels(static_cast<std::size_t>(H * W));
  for (Index i = 0; i < H * W; i++) {
    double const v = range > 0 ? (img[i] - *lo) / range : 0.0;
    pixels[static_cast<std::size_t>(i)] = static_cast<png_byte>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  }

  std::unique_ptr<FILE, int (*)(FILE *)> file(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!file) { fail(ErrorCategory::Io, "cannot write " + path.string()); }
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    fail(ErrorCategory::Io, "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCategory::Io, "libpng failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(W), static_cast<png_uint_32>(H), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (Index y = 0; y < H; y++) { png_write_row(png, pixels.data() + y * W); }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

} // namespace parallax::cli
