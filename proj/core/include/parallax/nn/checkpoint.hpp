#pragma once

#include "grappanet.hpp"

#include <filesystem>

namespace parallax::nn {

struct CheckpointInfo
{
  std::uint64_t seed = 0;
  int epoch = 0;
  std::string dtype;
};

/*
 * <dir>/checkpoint.json plus one CFL pair per weight (params/<name>) and per
 * RMSProp accumulator (state/<name>). Real values are stored in the real part
 * at float32 precision.
 */
template <typename T>
void save_checkpoint(std::filesystem::path const &dir, Model<T> const &model, std::uint64_t seed, int epoch);

template <typename T> Model<T> load_checkpoint(std::filesystem::path const &dir, CheckpointInfo *info = nullptr);

} // namespace parallax::nn
