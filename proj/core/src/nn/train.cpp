#include "parallax/nn/train.hpp"
#include "parallax/nn/checkpoint.hpp"
#include "parallax/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace parallax::nn {

SamplingMask training_mask(TrainConfig const &cfg, Index width, Index index, int epoch)
{
  auto const stream = epoch < 0 ? derive_seed(cfg.seed, 0x7661'6c69'6461'7465ULL) : derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch));
  auto const seed = derive_seed(stream, static_cast<std::uint64_t>(index));
  if (cfg.family == MaskFamily::Equispaced) { return make_equispaced_mask(width, cfg.acceleration, cfg.center_fraction, seed); }
  return make_random_mask(width, cfg.acceleration, cfg.center_fraction, seed);
}

namespace {

RealImage cropped_like(RealImage const &target, Shape const &shape)
{
  if (target.shape() == shape) { return target; }
  return center_crop(target, shape[0], shape[1]);
}

template <typename T> Tensor<T> normalized_target(RealImage const &target, Shape const &shape, double scale)
{
  return cast<T>(parallax::scale(cropped_like(target, shape), 1.0 / scale));
}

template <typename T> PreparedInput<T> sample_input(TrainSample const &s, SamplingMask const &m, ModelConfig const &cfg)
{
  return prepare_input<T>(apply_mask(s.kspace, m), m, cfg);
}

struct StepOutput
{
  double loss;
  RealImage prediction;
};

template <typename T>
StepOutput accumulate_sample(Model<T> const &model, TrainSample const &s, SamplingMask const &m,
                             std::vector<Tensor<T>> &grads)
{
  auto const in = sample_input<T>(s, m, model.config());
  Tape<T> tape;
  auto const bound = model.store().bind(tape);
  auto const out = model.forward(tape, bound, in);
  Var const loss = sample_loss(tape, out.image, s.target, in, model.config());
  double const value = tape.value(loss)[0];
  if (!std::isfinite(value)) { fail(ErrorCategory::Numerical, "non-finite loss on sample " + s.id); }
  tape.backward(loss);
  for (std::size_t i = 0; i < bound.size(); i++) {
    if (tape.has_grad(bound[i])) { grads[i] = parallax::add(grads[i], tape.grad(bound[i])); }
  }
  return {value, scale(cast<double>(tape.value(out.image)), in.scale)};
}

template <typename T> std::vector<Tensor<T>> zero_grads(ParamStore<T> const &store)
{
  std::vector<Tensor<T>> g;
  for (auto const &p : store.params()) { g.emplace_back(p.value.shape()); }
  return g;
}

template <typename T>
StepOutput batch_step(Model<T> &model, std::vector<TrainSample const *> const &batch, std::vector<SamplingMask> const &masks,
                      TrainConfig const &cfg, std::vector<RealImage> *predictions)
{
  auto grads = zero_grads(model.store());
  double loss = 0;
  // Fixed sample order keeps the reduction reproducible.
  for (std::size_t b = 0; b < batch.size(); b++) {
    auto r = accumulate_sample(model, *batch[b], masks[b], grads);
    loss += r.loss;
    if (predictions) { predictions->push_back(std::move(r.prediction)); }
  }
  auto const inv = static_cast<T>(1.0 / static_cast<double>(batch.size()));
  for (auto &g : grads) {
    for (auto &v : g.data()) { v *= inv; }
  }
  ParamStore<T> const before = model.store();
  try {
    rmsprop_step(model.store(), grads, cfg.optimizer);
  } catch (Error const &) {
    model.store() = before;
    throw;
  }
  return {loss / static_cast<double>(batch.size()), {}};
}

} // namespace

template <typename T>
Var sample_loss(Tape<T> &tape, Var image, RealImage const &target, PreparedInput<T> const &in, ModelConfig const &cfg)
{
  auto const t = normalized_target<T>(target, tape.value(image).shape(), in.scale);
  double range = 0;
  for (auto v : t.data()) { range = std::max(range, static_cast<double>(v)); }
  if (range <= 0) { range = 1; }
  return ssim_l1_loss(tape, image, t, range, cfg.loss_lambda);
}

template <typename T>
EvalResult evaluate_model(Model<T> const &model, std::vector<TrainSample> const &samples, std::vector<SamplingMask> const &masks)
{
  if (samples.size() != masks.size()) { fail(ErrorCategory::InvalidInput, "one mask per sample expected"); }
  EvalResult r;
  for (std::size_t i = 0; i < samples.size(); i++) {
    auto const in = sample_input<T>(samples[i], masks[i], model.config());
    Tape<T> tape;
    std::vector<Var> bound;
    for (auto const &p : model.store().params()) { bound.push_back(tape.constant(p.value)); }
    auto const out = model.forward(tape, bound, in);
    r.loss += tape.value(sample_loss(tape, out.image, samples[i].target, in, model.config()))[0];
    r.predictions.push_back(scale(cast<double>(tape.value(out.image)), in.scale));
    r.targets.push_back(cropped_like(samples[i].target, r.predictions.back().shape()));
  }
  if (!samples.empty()) {
    r.loss /= static_cast<double>(samples.size());
    r.report = metrics::evaluate(r.predictions, r.targets);
  }
  return r;
}

template <typename T>
TrainResult train(Model<T> &model, std::vector<TrainSample> const &train_set, std::vector<TrainSample> const &val_set,
                  TrainConfig const &cfg, std::function<void(EpochLog const &)> const &on_epoch)
{
  if (cfg.epochs < 0 || cfg.batch < 1) { fail(ErrorCategory::Config, "epochs must be >= 0 and batch >= 1"); }
  if (train_set.empty()) { fail(ErrorCategory::InvalidInput, "empty training set"); }
  TrainResult result;
  std::vector<SamplingMask> val_masks;
  for (std::size_t i = 0; i < val_set.size(); i++) {
    val_masks.push_back(training_mask(cfg, val_set[i].kspace.dim(-1), static_cast<Index>(i), -1));
  }
  auto emit = [&](EpochLog row) {
    result.log.push_back(row);
    if (on_epoch) { on_epoch(row); }
  };

  for (int epoch = 0; epoch < cfg.epochs; epoch++) {
    int const mask_epoch = cfg.resample_masks ? epoch : 0;
    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); i++) { order[i] = i; }
    Rng rng(derive_seed(cfg.seed ^ 0x5368'7566'666cULL, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; i--) { std::swap(order[i - 1], order[rng.below(i)]); }

    std::vector<RealImage> preds, targets;
    double loss_sum = 0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
      std::vector<TrainSample const *> batch;
      std::vector<SamplingMask> masks;
      for (std::size_t b = start; b < std::min(order.size(), start + static_cast<std::size_t>(cfg.batch)); b++) {
        auto const idx = order[b];
        batch.push_back(&train_set[idx]);
        masks.push_back(training_mask(cfg, train_set[idx].kspace.dim(-1), static_cast<Index>(idx), mask_epoch));
      }
      StepOutput step{};
      try {
        step = batch_step(model, batch, masks, cfg, &preds);
      } catch (Error const &e) {
        if (e.category() == ErrorCategory::Numerical && !cfg.checkpoint_dir.empty()) {
          save_checkpoint(cfg.checkpoint_dir / "last_good", model, cfg.seed, epoch);
        }
        throw;
      }
      for (auto const *s : batch) { targets.push_back(cropped_like(s->target, preds[targets.size()].shape())); }
      result.step_losses.push_back(step.loss);
      loss_sum += step.loss;
      steps++;
    }
    auto const rep = metrics::evaluate(preds, targets);
    emit({epoch, "train", loss_sum / static_cast<double>(steps), rep.mean_ssim, rep.mean_nmse, rep.mean_psnr});
    if (!val_set.empty()) {
      auto const v = evaluate_model(model, val_set, val_masks);
      emit({epoch, "val", v.loss, v.report.mean_ssim, v.report.mean_nmse, v.report.mean_psnr});
    }
    if (!cfg.checkpoint_dir.empty()) { save_checkpoint(cfg.checkpoint_dir / "latest", model, cfg.seed, epoch + 1); }
  }
  return result;
}

template <typename T>
std::vector<double> overfit_batch(Model<T> &model, std::vector<TrainSample> const &batch, TrainConfig const &cfg, int steps)
{
  std::vector<TrainSample const *> ptrs;
  std::vector<SamplingMask> masks;
  for (std::size_t i = 0; i < batch.size(); i++) {
    ptrs.push_back(&batch[i]);
    masks.push_back(training_mask(cfg, batch[i].kspace.dim(-1), static_cast<Index>(i), 0));
  }
  std::vector<double> losses;
  for (int s = 0; s < steps; s++) { losses.push_back(batch_step(model, ptrs, masks, cfg, nullptr).loss); }
  return losses;
}

void write_log_csv(std::ostream &os, std::vector<EpochLog> const &log)
{
  os << "epoch,split,loss,ssim,nmse,psnr\n";
  os.precision(17);
  for (auto const &r : log) { os << r.epoch << ',' << r.split << ',' << r.loss << ',' << r.ssim << ',' << r.nmse << ',' << r.psnr << '\n'; }
}

template Var sample_loss(Tape<float> &, Var, RealImage const &, PreparedInput<float> const &, ModelConfig const &);
template Var sample_loss(Tape<double> &, Var, RealImage const &, PreparedInput<double> const &, ModelConfig const &);
template EvalResult evaluate_model(Model<float> const &, std::vector<TrainSample> const &, std::vector<SamplingMask> const &);
template EvalResult evaluate_model(Model<double> const &, std::vector<TrainSample> const &, std::vector<SamplingMask> const &);
template TrainResult train(Model<float> &, std::vector<TrainSample> const &, std::vector<TrainSample> const &,
                           TrainConfig const &, std::function<void(EpochLog const &)> const &);
template TrainResult train(Model<double> &, std::vector<TrainSample> const &, std::vector<TrainSample> const &,
                           TrainConfig const &, std::function<void(EpochLog const &)> const &);
template std::vector<double> overfit_batch(Model<float> &, std::vector<TrainSample> const &, TrainConfig const &, int);
template std::vector<double> overfit_batch(Model<double> &, std::vector<TrainSample> const &, TrainConfig const &, int);

} // namespace parallax::nn
