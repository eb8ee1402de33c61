#pragma once

#include <parallax/tensor.hpp>

#include <filesystem>

namespace parallax::cli {

// 8-bit grayscale, min-max normalized over this image; a constant image maps to 0.
void write_png(std::filesystem::path const &path, RealImage const &img);

} // namespace parallax::cli
