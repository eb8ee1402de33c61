#include "parallax/nn/unet.hpp"
#include "parallax/nn/ops.hpp"

#include <cmath>

namespace parallax::nn {

namespace {

void check(UNetConfig const &cfg)
{
  if (cfg.in_channels < 1 || cfg.out_channels < 1 || cfg.base_channels < 1 || cfg.depth < 0 || cfg.depth > 8) {
    fail(ErrorCategory::Config, "invalid U-Net configuration");
  }
}

} // namespace

std::vector<LayerSpec> unet_layout(UNetConfig const &cfg, std::string const &prefix)
{
  check(cfg);
  std::vector<LayerSpec> out;
  auto ch = [&](Index level) { return cfg.base_channels << level; };
  for (Index l = 0; l <= cfg.depth; l++) {
    Index const cin = l == 0 ? cfg.in_channels : ch(l - 1);
    auto const p = prefix + "enc" + std::to_string(l);
    out.push_back({p + ".conv1.weight", {ch(l), cin, 3, 3}, cin * 9});
    out.push_back({p + ".conv2.weight", {ch(l), ch(l), 3, 3}, ch(l) * 9});
  }
  for (Index l = cfg.depth - 1; l >= 0; l--) {
    auto const p = prefix + "dec" + std::to_string(l);
    out.push_back({p + ".up.weight", {ch(l + 1), ch(l), 2, 2}, ch(l + 1)});
    out.push_back({p + ".conv1.weight", {ch(l), 2 * ch(l), 3, 3}, 2 * ch(l) * 9});
    out.push_back({p + ".conv2.weight", {ch(l), ch(l), 3, 3}, ch(l) * 9});
  }
  out.push_back({prefix + "out.weight", {cfg.out_channels, ch(0), 1, 1}, 0});
  out.push_back({prefix + "out.bias", {cfg.out_channels}, 0});
  return out;
}

Index unet_parameter_count(UNetConfig const &cfg)
{
  Index n = 0;
  for (auto const &l : unet_layout(cfg, "")) { n += shape_size(l.shape); }
  return n;
}

template <typename T> UNet<T>::UNet(ParamStore<T> &store, std::string prefix, UNetConfig cfg, Rng &rng)
  : cfg_{cfg}
{
  for (auto const &l : unet_layout(cfg, prefix)) {
    Tensor<T> w(l.shape);
    if (l.fan_in > 0) {
      double const sd = std::sqrt(2.0 / static_cast<double>(l.fan_in));
      for (auto &v : w.data()) { v = static_cast<T>(sd * rng.normal()); }
    }
    idx_.push_back(store.add(l.name, std::move(w)));
  }
}

template <typename T> UNet<T> UNet<T>::attach(ParamStore<T> const &store, std::string prefix, UNetConfig cfg)
{
  UNet net;
  net.cfg_ = cfg;
  for (auto const &l : unet_layout(cfg, prefix)) {
    Index const i = store.index_of(l.name);
    if (store[i].value.shape() != l.shape) {
      fail(ErrorCategory::Config, "parameter " + l.name + " has shape " + shape_string(store[i].value.shape()) +
                                    ", expected " + shape_string(l.shape));
    }
    net.idx_.push_back(i);
  }
  return net;
}

template <typename T> Var UNet<T>::forward(Tape<T> &tape, std::vector<Var> const &bound, Var x) const
{
  auto const &xv = tape.value(x);
  if (xv.rank() != 3 || xv.dim(0) != cfg_.in_channels) {
    fail(ErrorCategory::Config, "U-Net expects " + std::to_string(cfg_.in_channels) + " input channels, got " +
                                  shape_string(xv.shape()));
  }
  Index const H = xv.dim(1), W = xv.dim(2), mult = Index{1} << cfg_.depth;
  std::size_t next = 0;
  auto param = [&]() { return bound.at(static_cast<std::size_t>(idx_.at(next++))); };
  auto block = [&](Var v) {
    for (int i = 0; i < 2; i++) { v = leaky_relu(tape, instance_norm(tape, conv2d(tape, v, param(), 1))); }
    return v;
  };

  Var v = reflect_pad(tape, x, (mult - H % mult) % mult, (mult - W % mult) % mult);
  std::vector<Var> skips;
  for (Index l = 0; l <= cfg_.depth; l++) {
    if (l > 0) { v = avg_pool2(tape, v); }
    v = block(v);
    skips.push_back(v);
  }
  for (Index l = cfg_.depth - 1; l >= 0; l--) {
    v = leaky_relu(tape, instance_norm(tape, conv_transpose2x2(tape, v, param())));
    v = block(concat(tape, skips[static_cast<std::size_t>(l)], v));
  }
  Var const w = param();
  v = conv2d(tape, v, w, param(), 0);
  return crop(tape, v, H, W);
}

template class UNet<float>;
template class UNet<double>;

} // namespace parallax::nn
