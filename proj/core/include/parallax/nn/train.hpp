#pragma once

#include "../metrics.hpp"
#include "grappanet.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace parallax::nn {

struct TrainSample
{
  std::string id;
  ComplexTensor kspace; // fully sampled (N, H, W)
  RealImage target;     // RSS of the fully sampled coil images
  std::uint64_t seed = 0;
};

enum class MaskFamily
{
  Random,
  Equispaced,
};

struct TrainConfig
{
  int epochs = 20;
  int batch = 1;
  std::uint64_t seed = 0;
  RmsPropOptions optimizer;
  int acceleration = 4;
  double center_fraction = 0.08;
  MaskFamily family = MaskFamily::Random;
  bool resample_masks = true; // fresh masks every epoch; otherwise epoch 0's masks throughout
  std::filesystem::path checkpoint_dir; // empty: no checkpoints
};

struct EpochLog
{
  int epoch;
  std::string split;
  double loss, ssim, nmse, psnr;
};

struct TrainResult
{
  std::vector<EpochLog> log;
  std::vector<double> step_losses;
};

// Mask for sample `index` in epoch `epoch`; validation uses epoch -1 so its masks never change.
SamplingMask training_mask(TrainConfig const &cfg, Index width, Index index, int epoch);

// Loss on one sample in normalized units: -SSIM + lambda * ||x_hat - x||_1, SSIM range = max of the normalized target.
template <typename T>
Var sample_loss(Tape<T> &tape, Var image, RealImage const &target, PreparedInput<T> const &in, ModelConfig const &cfg);

struct EvalResult
{
  double loss = 0;
  std::vector<RealImage> predictions;
  std::vector<RealImage> targets; // cropped like the predictions
  metrics::MetricReport report;
};

template <typename T>
EvalResult evaluate_model(Model<T> const &model, std::vector<TrainSample> const &samples,
                          std::vector<SamplingMask> const &masks);

/*
 * Shuffled mini-batches, mean gradient over each batch accumulated in a fixed
 * sample order, one RMSProp step per batch, then validation on fixed masks.
 * A non-finite loss or gradient writes the last good parameters to
 * <checkpoint_dir>/last_good and rethrows.
 */
template <typename T>
TrainResult train(Model<T> &model, std::vector<TrainSample> const &train_set, std::vector<TrainSample> const &val_set,
                  TrainConfig const &cfg, std::function<void(EpochLog const &)> const &on_epoch = {});

// Repeated steps on one fixed batch with fixed masks; returns the loss before each step.
template <typename T>
std::vector<double> overfit_batch(Model<T> &model, std::vector<TrainSample> const &batch, TrainConfig const &cfg, int steps);

void write_log_csv(std::ostream &os, std::vector<EpochLog> const &log);

} // namespace parallax::nn
