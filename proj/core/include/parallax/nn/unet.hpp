#pragma once

#include "../rng.hpp"
#include "optim.hpp"

#include <string>
#include <vector>

namespace parallax::nn {

struct UNetConfig
{
  Index in_channels = 2;
  Index out_channels = 2;
  Index base_channels = 16;
  Index depth = 2; // pooling levels
  bool operator==(UNetConfig const &) const = default;
};

struct LayerSpec
{
  std::string name;
  Shape shape;
  Index fan_in = 0; // 0: zero-initialized
};

// Parameter names and shapes in forward order.
std::vector<LayerSpec> unet_layout(UNetConfig const &cfg, std::string const &prefix);
Index unet_parameter_count(UNetConfig const &cfg);

/*
 * Per level two (3x3 conv, instance norm, leaky ReLU) blocks, average-pool
 * down with channel doubling, 2x2 transposed conv up, skip concatenation and
 * a final 1x1 conv with bias. He-normal weights; the output layer starts at
 * zero. Inputs whose H, W are not multiples of 2^depth are reflect-padded and
 * cropped back.
 */
template <typename T> class UNet
{
public:
  UNet() = default;

  // Registers freshly initialized weights in the store.
  UNet(ParamStore<T> &store, std::string prefix, UNetConfig cfg, Rng &rng);

  // Uses weights already present in the store (e.g. a loaded checkpoint).
  static UNet attach(ParamStore<T> const &store, std::string prefix, UNetConfig cfg);

  Var forward(Tape<T> &tape, std::vector<Var> const &bound, Var x) const;

  UNetConfig const &config() const { return cfg_; }
  std::vector<Index> const &indices() const { return idx_; }

private:
  UNetConfig cfg_;
  std::vector<Index> idx_;
};

} // namespace parallax::nn
