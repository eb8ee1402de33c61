#include "parallax/nn/grappanet.hpp"
#include "parallax/fft.hpp"
#include "parallax/nn/ops.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace parallax::nn {

std::string model_kind_name(ModelKind k) { return k == ModelKind::GrappaNet ? "grappanet" : "image_unet"; }

ModelKind parse_model_kind(std::string const &s)
{
  if (s == "grappanet") { return ModelKind::GrappaNet; }
  if (s == "image_unet" || s == "image-unet") { return ModelKind::ImageUNet; }
  fail(ErrorCategory::Config, "unknown model kind '" + s + "' (grappanet, image_unet)");
}

std::string ModelConfig::to_json() const
{
  nlohmann::ordered_json j;
  j["kind"] = model_kind_name(kind);
  j["coils"] = coils;
  j["base_channels"] = base_channels;
  j["depth"] = depth;
  j["grappa"] = {{"accel", geometry.accel}, {"source_lines", geometry.source_lines}, {"readout_taps", geometry.readout_taps}};
  j["loss_lambda"] = loss_lambda;
  j["crop"] = crop;
  return j.dump();
}

ModelConfig ModelConfig::from_json(std::string const &text)
{
  ModelConfig c;
  try {
    auto const j = nlohmann::json::parse(text);
    c.kind = parse_model_kind(j.at("kind").get<std::string>());
    c.coils = j.at("coils").get<Index>();
    c.base_channels = j.at("base_channels").get<Index>();
    c.depth = j.at("depth").get<Index>();
    auto const &g = j.at("grappa");
    c.geometry = {g.at("accel").get<int>(), g.at("source_lines").get<int>(), g.at("readout_taps").get<int>()};
    c.loss_lambda = j.value("loss_lambda", 1e-3);
    c.crop = j.value("crop", Index{320});
  } catch (nlohmann::json::exception const &e) {
    fail(ErrorCategory::MalformedHeader, std::string("model config: ") + e.what());
  }
  return c;
}

Index matched_ablation_base(ModelConfig const &g)
{
  Index const target = 4 * unet_parameter_count(g.unet());
  Index best = 1;
  Index best_gap = -1;
  for (Index b = 1; b <= 16 * g.base_channels; b++) {
    auto cfg = g.unet();
    cfg.base_channels = b;
    Index const gap = std::abs(unet_parameter_count(cfg) - target);
    if (best_gap < 0 || gap < best_gap) {
      best = b;
      best_gap = gap;
    }
  }
  return best;
}

double input_scale(ComplexTensor const &k_under)
{
  auto const mag = abs(ifft2c(as_coils(k_under)));
  std::vector<double> v(mag.data().begin(), mag.data().end());
  if (v.empty()) { return 1; }
  double const pos = 0.999 * static_cast<double>(v.size() - 1);
  auto const lo = static_cast<std::size_t>(std::floor(pos));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
  double const a = v[lo];
  double q = a;
  if (lo + 1 < v.size()) {
    double const b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
    q = a + (pos - static_cast<double>(lo)) * (b - a);
  }
  return q > 0 && std::isfinite(q) ? q : 1.0;
}

template <typename T>
PreparedInput<T> prepare_input(ComplexTensor const &k_under, SamplingMask const &m, ModelConfig const &cfg,
                               std::optional<grappa::Kernel> kernel)
{
  auto const k = as_coils(k_under);
  if (k.dim(0) != cfg.coils) {
    fail(ErrorCategory::ShapeMismatch, "model expects " + std::to_string(cfg.coils) + " coils, k-space has " +
                                         std::to_string(k.dim(0)));
  }
  if (k.dim(2) != m.width()) { fail(ErrorCategory::ShapeMismatch, "mask width does not match k-space"); }
  PreparedInput<T> in;
  in.scale = input_scale(k);
  in.observed = to_paired<T>(scale(apply_mask(k, m), 1.0 / in.scale));
  in.mask = m;
  if (cfg.kind == ModelKind::GrappaNet) {
    in.keep = m.united(aligned_lattice(m, cfg.geometry.accel));
    in.kernel = kernel ? std::move(*kernel) : grappa::calibrate(grappa::extract_acs(k, m), {cfg.geometry, std::nullopt});
    if (in.kernel.geometry.accel != cfg.geometry.accel) {
      fail(ErrorCategory::InvalidInput, "kernel stride " + std::to_string(in.kernel.geometry.accel) +
                                          " does not match the model's R' = " + std::to_string(cfg.geometry.accel));
    }
  } else {
    in.keep = m;
  }
  return in;
}

template <typename T>
Model<T>::Model(ModelConfig cfg, std::uint64_t seed)
  : cfg_{cfg}
{
  Rng rng(seed);
  auto const u = cfg_.unet();
  if (cfg_.kind == ModelKind::GrappaNet) {
    for (char const *p : {"f1.kspace.", "f1.image.", "f2.kspace.", "f2.image."}) { nets_.emplace_back(store_, p, u, rng); }
  } else {
    nets_.emplace_back(store_, "image.", u, rng);
  }
}

template <typename T>
Model<T>::Model(ModelConfig cfg, ParamStore<T> store)
  : cfg_{cfg}
  , store_{std::move(store)}
{
  attach();
}

template <typename T> void Model<T>::attach()
{
  auto const u = cfg_.unet();
  nets_.clear();
  if (cfg_.kind == ModelKind::GrappaNet) {
    for (char const *p : {"f1.kspace.", "f1.image.", "f2.kspace.", "f2.image."}) {
      nets_.push_back(UNet<T>::attach(store_, p, u));
    }
  } else {
    nets_.push_back(UNet<T>::attach(store_, "image.", u));
  }
  Index expected = 0;
  for (auto const &n : nets_) { expected += static_cast<Index>(n.indices().size()); }
  if (expected != store_.count()) { fail(ErrorCategory::Config, "checkpoint holds parameters the model does not use"); }
}

template <typename T>
Var Model<T>::f_block(Tape<T> &tape, std::vector<Var> const &bound, Var k, Tensor<T> const &observed,
                      SamplingMask const &m, int which) const
{
  auto const &uk = nets_.at(static_cast<std::size_t>(2 * which));
  auto const &ui = nets_.at(static_cast<std::size_t>(2 * which + 1));
  Var t = data_consistency(tape, add(tape, k, uk.forward(tape, bound, k)), observed, m);
  Var img = ifft2c(tape, t);
  img = add(tape, img, ui.forward(tape, bound, img));
  return data_consistency(tape, fft2c(tape, img), observed, m);
}

template <typename T>
ForwardResult<T> Model<T>::forward(Tape<T> &tape, std::vector<Var> const &bound, PreparedInput<T> const &in) const
{
  Var const k0 = tape.constant(in.observed);
  Var k;
  if (cfg_.kind == ModelKind::GrappaNet) {
    k = f_block(tape, bound, k0, in.observed, in.mask, 0);
    k = restrict_to(tape, k, in.observed, in.mask, in.keep);
    k = grappa_apply(tape, k, in.keep, in.kernel);
    k = f_block(tape, bound, k, in.observed, in.mask, 1);
  } else {
    Var img = ifft2c(tape, k0);
    img = add(tape, img, nets_.front().forward(tape, bound, img));
    k = data_consistency(tape, fft2c(tape, img), in.observed, in.mask);
  }
  Var image = rss(tape, ifft2c(tape, k));
  auto const &iv = tape.value(image);
  if (iv.dim(0) >= cfg_.crop && iv.dim(1) >= cfg_.crop) { image = center_crop(tape, image, cfg_.crop, cfg_.crop); }
  return {k, image};
}

template <typename T> RealImage Model<T>::predict(PreparedInput<T> const &in) const
{
  Tape<T> tape;
  std::vector<Var> bound;
  bound.reserve(static_cast<std::size_t>(store_.count()));
  for (auto const &p : store_.params()) { bound.push_back(tape.constant(p.value)); }
  auto const out = forward(tape, bound, in);
  return scale(cast<double>(tape.value(out.image)), in.scale);
}

template <typename T>
RealImage grappanet_forward(ComplexTensor const &k_under, SamplingMask const &m, grappa::Kernel const &g,
                            Model<T> const &model)
{
  return model.predict(prepare_input<T>(k_under, m, model.config(), g));
}

template struct PreparedInput<float>;
template struct PreparedInput<double>;
template PreparedInput<float> prepare_input(ComplexTensor const &, SamplingMask const &, ModelConfig const &,
                                            std::optional<grappa::Kernel>);
template PreparedInput<double> prepare_input(ComplexTensor const &, SamplingMask const &, ModelConfig const &,
                                             std::optional<grappa::Kernel>);
template class Model<float>;
template class Model<double>;
template RealImage grappanet_forward(ComplexTensor const &, SamplingMask const &, grappa::Kernel const &, Model<float> const &);
template RealImage grappanet_forward(ComplexTensor const &, SamplingMask const &, grappa::Kernel const &, Model<double> const &);

} // namespace parallax::nn
