#pragma once

#include "../grappa.hpp"
#include "unet.hpp"

#include <optional>
#include <string>

namespace parallax::nn {

enum class ModelKind
{
  GrappaNet, // f2 o GRAPPA o f1 with a k-space and an image U-Net per f-block
  ImageUNet, // single residual image-space U-Net with final data consistency
};

std::string model_kind_name(ModelKind k);
ModelKind parse_model_kind(std::string const &s);

struct ModelConfig
{
  ModelKind kind = ModelKind::GrappaNet;
  Index coils = 15;
  Index base_channels = 16;
  Index depth = 2;
  grappa::Geometry geometry{2, 2, 5};
  double loss_lambda = 1e-3;
  Index crop = 320; // applied only when both image extents reach it

  UNetConfig unet() const { return {2 * coils, 2 * coils, base_channels, depth}; }
  std::string to_json() const;
  static ModelConfig from_json(std::string const &text);
  bool operator==(ModelConfig const &) const = default;
};

// Base width for an image-only U-Net whose parameter count is closest to GrappaNet's four U-Nets.
Index matched_ablation_base(ModelConfig const &grappanet);

// 0.999-quantile of |ifft2c(k)| over all coils and pixels (linear interpolation); 1 if that is zero.
double input_scale(ComplexTensor const &k_under);

// Network input for one sample: normalized observed k-space in the paired layout.
template <typename T> struct PreparedInput
{
  Tensor<T> observed;   // (2N, H, W), k_under / scale
  SamplingMask mask;    // M
  SamplingMask keep;    // M u M'
  grappa::Kernel kernel;
  double scale = 1;
};

// Calibrates the kernel at stride geometry.accel from the ACS of m when none is given.
template <typename T>
PreparedInput<T> prepare_input(ComplexTensor const &k_under, SamplingMask const &m, ModelConfig const &cfg,
                               std::optional<grappa::Kernel> kernel = std::nullopt);

template <typename T> struct ForwardResult
{
  Var kspace; // final multi-coil k-space (paired)
  Var image;  // normalized RSS image, cropped
};

template <typename T> class Model
{
public:
  Model(ModelConfig cfg, std::uint64_t seed);
  Model(ModelConfig cfg, ParamStore<T> store);

  ModelConfig const &config() const { return cfg_; }
  ParamStore<T> &store() { return store_; }
  ParamStore<T> const &store() const { return store_; }

  // k-space U-Net, DC, ifft2c, image U-Net (both residual), fft2c, DC.
  Var f_block(Tape<T> &tape, std::vector<Var> const &bound, Var k, Tensor<T> const &observed, SamplingMask const &m,
              int which) const;

  ForwardResult<T> forward(Tape<T> &tape, std::vector<Var> const &bound, PreparedInput<T> const &in) const;

  // Un-normalized reconstruction without gradients.
  RealImage predict(PreparedInput<T> const &in) const;

private:
  void attach();

  ModelConfig cfg_;
  ParamStore<T> store_;
  std::vector<UNet<T>> nets_; // f1 k, f1 image, f2 k, f2 image; or the single image U-Net
};

// x = rss(ifft2c(f2(G * f1(k)))), rescaled to the input's units.
template <typename T>
RealImage grappanet_forward(ComplexTensor const &k_under, SamplingMask const &m, grappa::Kernel const &g,
                            Model<T> const &model);

} // namespace parallax::nn
