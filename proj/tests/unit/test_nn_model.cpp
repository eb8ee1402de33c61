#include "gradcheck.hpp"
#include "oracles.hpp"

#include <parallax/fft.hpp>
#include <parallax/nn/checkpoint.hpp>
#include <parallax/nn/grappanet.hpp>
#include <parallax/nn/ops.hpp>
#include <parallax/nn/train.hpp>
#include <parallax/phantom.hpp>

#include <doctest.h>

#include <filesystem>

using namespace parallax;
using nn::Tape;
using nn::Var;
using gradcheck::random_tensor;

namespace {

constexpr double kTol = 1e-4;

// Every weight, including the zero-initialized output layer, drawn at random.
template <typename T> void randomize(nn::ParamStore<T> &store, std::uint64_t seed, double sd = 1.0)
{
  Rng rng(seed);
  for (auto &p : store.params()) {
    for (auto &v : p.value.data()) { v = static_cast<T>(sd * rng.normal()); }
  }
}

std::vector<gradcheck::Tensor> values(nn::ParamStore<double> const &store)
{
  std::vector<gradcheck::Tensor> out;
  for (auto const &p : store.params()) { out.push_back(p.value); }
  return out;
}

phantom::Phantom small_phantom(Index H, Index W, Index N, std::uint64_t seed)
{
  phantom::PhantomSpec spec;
  spec.height = H;
  spec.width = W;
  spec.coils = N;
  spec.seed = seed;
  return phantom::make_phantom(spec);
}

nn::ModelConfig toy_config(Index coils, Index base, Index depth)
{
  nn::ModelConfig c;
  c.coils = coils;
  c.base_channels = base;
  c.depth = depth;
  return c;
}

} // namespace

TEST_CASE("U-Net layout and parameter count")
{
  nn::UNetConfig const cfg{8, 8, 16, 2};
  auto const layout = nn::unet_layout(cfg, "f1.kspace.");
  CHECK(layout.front().name == "f1.kspace.enc0.conv1.weight");
  CHECK(layout.back().name == "f1.kspace.out.bias");
  Index n = 0;
  for (auto const &l : layout) { n += shape_size(l.shape); }
  CHECK(n == nn::unet_parameter_count(cfg));
  // enc: 16*8*9 + 16*16*9, 32*16*9 + 32*32*9, 64*32*9 + 64*64*9
  // dec1: 64*32*4 + 32*64*9 + 32*32*9, dec0: 32*16*4 + 16*32*9 + 16*16*9, out: 8*16 + 8
  Index const want = 1152 + 2304 + 4608 + 9216 + 18432 + 36864 + 8192 + 18432 + 9216 + 2048 + 4608 + 2304 + 128 + 8;
  CHECK(nn::unet_parameter_count(cfg) == want);
  CHECK_THROWS_AS(nn::unet_layout({2, 2, 0, 1}, ""), Error);
}

TEST_CASE("zero-weight U-Net outputs zero and preserves shape")
{
  nn::ParamStore<double> store;
  Rng rng(1);
  nn::UNet<double> net(store, "u.", {8, 8, 4, 2}, rng);
  Tape<double> t;
  auto const bound = store.bind(t);
  auto const x = random_tensor({8, 24, 24}, 2);
  // Output layer starts at zero, so a fresh U-Net is already the zero map.
  auto const y0 = t.value(net.forward(t, bound, t.constant(x)));
  CHECK(y0.shape() == Shape{8, 24, 24});
  for (auto v : y0.data()) { CHECK(v == 0.0); }
  store.zero();
  Tape<double> t2;
  auto const b2 = store.bind(t2);
  auto const y1 = t2.value(net.forward(t2, b2, t2.constant(x)));
  for (auto v : y1.data()) { CHECK(v == 0.0); }

  // Non-multiple sizes are padded and cropped back.
  randomize(store, 3);
  Tape<double> t3;
  auto const b3 = store.bind(t3);
  CHECK(t3.value(net.forward(t3, b3, t3.constant(random_tensor({8, 13, 22}, 4)))).shape() == Shape{8, 13, 22});
  CHECK_THROWS_AS(net.forward(t3, b3, t3.constant(random_tensor({6, 8, 8}, 4))), Error);
}

TEST_CASE("U-Net gradient check over all parameters (2x8x8, depth 1, base 4)")
{
  nn::ParamStore<double> store;
  Rng rng(5);
  nn::UNet<double> net(store, "", {2, 2, 4, 1}, rng);
  randomize(store, 6);
  auto leaves = values(store);
  auto const x = random_tensor({2, 8, 8}, 7);
  auto const probe = random_tensor({2, 8, 8}, 8);
  leaves.push_back(x);
  auto const r = gradcheck::check(leaves, [&](Tape<double> &t, std::vector<Var> const &v) {
    std::vector<Var> const params(v.begin(), v.end() - 1);
    return nn::dot(t, net.forward(t, params, v.back()), probe);
  });
  CHECK(r.max_rel < kTol);
}

TEST_CASE("f_block: zero networks reduce to data consistency")
{
  Index const N = 2, H = 16, W = 16;
  nn::Model<double> model(toy_config(N, 4, 1), 1);
  model.store().zero();
  auto const m = make_random_mask(W, 4, 0.125, 2);
  auto const k = oracle::random_complex({N, H, W}, 3);
  auto const observed = nn::to_paired<double>(apply_mask(oracle::random_complex({N, H, W}, 4), m));
  Tape<double> t;
  auto const bound = model.store().bind(t);
  for (int which : {0, 1}) {
    auto const y = nn::from_paired(t.value(model.f_block(t, bound, t.constant(nn::to_paired<double>(k)), observed, m, which)));
    auto const want = data_consistency(k, nn::from_paired(observed), m);
    CHECK(norm2(sub(y, want)) < 1e-12 * norm2(want));
  }
}

TEST_CASE("f_block: observed columns are reproduced bitwise")
{
  Index const N = 2, H = 16, W = 16;
  nn::Model<double> model(toy_config(N, 4, 1), 1);
  randomize(model.store(), 9);
  auto const m = make_random_mask(W, 4, 0.125, 2);
  auto const observed = nn::to_paired<double>(apply_mask(oracle::random_complex({N, H, W}, 4), m));
  Tape<double> t;
  auto const bound = model.store().bind(t);
  auto const y = t.value(model.f_block(t, bound, t.constant(random_tensor({2 * N, H, W}, 5)), observed, m, 0));
  bool same = true;
  for (Index c = 0; c < 2 * N; c++) {
    for (Index r = 0; r < H; r++) {
      for (Index col = 0; col < W; col++) {
        if (m.sampled(col)) { same = same && y[(c * H + r) * W + col] == observed[(c * H + r) * W + col]; }
      }
    }
  }
  CHECK(same);
}

TEST_CASE("f_block gradient check")
{
  Index const N = 1, H = 8, W = 8;
  nn::Model<double> model(toy_config(N, 2, 1), 11);
  randomize(model.store(), 12);
  auto const m = make_random_mask(W, 2, 0.25, 3);
  auto const observed = nn::to_paired<double>(apply_mask(oracle::random_complex({N, H, W}, 13), m));
  auto const probe = random_tensor({2 * N, H, W}, 14);
  auto leaves = values(model.store());
  leaves.push_back(random_tensor({2 * N, H, W}, 15));
  auto const r = gradcheck::check(leaves, [&](Tape<double> &t, std::vector<Var> const &v) {
    std::vector<Var> const params(v.begin(), v.end() - 1);
    return nn::dot(t, model.f_block(t, params, v.back(), observed, m, 0), probe);
  });
  CHECK(r.max_rel < kTol);
}

TEST_CASE("full toy GrappaNet gradient check (2 coils, 16x16, depth 1)")
{
  Index const N = 2, H = 16, W = 16;
  auto cfg = toy_config(N, 2, 1);
  cfg.geometry = {2, 2, 3};
  nn::Model<double> model(cfg, 21);
  randomize(model.store(), 22);
  auto const ph = small_phantom(32, 32, N, 4);
  auto const full = phantom::simulate_acquisition(ph.image, ph.maps, full_mask(32), 0.0, 0);
  // Crop 32x32 k-space centre to 16x16 to keep the phantom structured.
  ComplexTensor k({N, H, W});
  for (Index c = 0; c < N; c++) {
    for (Index y = 0; y < H; y++) {
      for (Index x = 0; x < W; x++) { k(c, y, x) = full(c, y + 8, x + 8); }
    }
  }
  auto const m = make_random_mask(W, 4, 0.25, 5);
  auto const in = nn::prepare_input<double>(apply_mask(k, m), m, cfg);
  auto const probe = random_tensor({H, W}, 23);
  auto const r = gradcheck::check(values(model.store()), [&](Tape<double> &t, std::vector<Var> const &v) {
    return nn::dot(t, model.forward(t, v, in).image, probe);
  });
  CHECK(r.max_rel < kTol);
}

TEST_CASE("zero-network GrappaNet equals plain GRAPPA + RSS")
{
  Index const N = 4, H = 48, W = 48;
  auto cfg = toy_config(N, 4, 2);
  nn::Model<double> model(cfg, 31);
  model.store().zero();
  auto const ph = small_phantom(H, W, N, 6);
  auto const full = phantom::simulate_acquisition(ph.image, ph.maps, full_mask(W), 0.0, 0);
  auto const m = equispaced_mask_with_offset(W, 2, 0.25, 0);
  REQUIRE(lattice_offset(m, 2).has_value());
  auto const ku = apply_mask(full, m);
  auto const g = grappa::calibrate(grappa::extract_acs(ku, m), {cfg.geometry, std::nullopt});
  auto const out = nn::grappanet_forward(ku, m, g, model);
  auto const ref = rss(ifft2c(grappa::apply(ku, m, g)));
  REQUIRE(out.shape() == ref.shape());
  double worst = 0;
  for (Index p = 0; p < out.size(); p++) { worst = std::max(worst, std::abs(out[p] - ref[p])); }
  CHECK(worst < 1e-10);

  auto bad = cfg;
  bad.geometry.accel = 3;
  auto const g3 = grappa::calibrate(grappa::extract_acs(ku, m), {bad.geometry, 1e-3});
  try {
    nn::grappanet_forward(ku, m, g3, model);
    FAIL("expected a stride mismatch");
  } catch (Error const &e) {
    CHECK(e.category() == ErrorCategory::InvalidInput);
  }
}

TEST_CASE("zero-network GrappaNet at R=4 is the closed-form composition")
{
  Index const N = 3, H = 32, W = 32;
  auto cfg = toy_config(N, 4, 1);
  nn::Model<double> model(cfg, 1);
  model.store().zero();
  auto const ph = small_phantom(H, W, N, 8);
  auto const full = phantom::simulate_acquisition(ph.image, ph.maps, full_mask(W), 0.0, 0);
  auto const m = make_random_mask(W, 4, 0.25, 9);
  auto const ku = apply_mask(full, m);
  auto const g = grappa::calibrate(grappa::extract_acs(ku, m), {cfg.geometry, std::nullopt});
  auto const keep = m.united(aligned_lattice(m, 2));
  auto const ref = rss(ifft2c(data_consistency(grappa::apply(apply_mask(ku, keep), keep, g), ku, m)));
  auto const out = nn::grappanet_forward(ku, m, g, model);
  double worst = 0;
  for (Index p = 0; p < out.size(); p++) { worst = std::max(worst, std::abs(out[p] - ref[p])); }
  CHECK(worst < 1e-10);
}

TEST_CASE("final k-space reproduces the observed columns (float model)")
{
  Index const N = 4, H = 32, W = 40;
  auto cfg = toy_config(N, 4, 2);
  nn::Model<float> model(cfg, 41);
  randomize(model.store(), 42, 0.1);
  auto const ph = small_phantom(H, W, N, 10);
  auto const full = phantom::simulate_acquisition(ph.image, ph.maps, full_mask(W), 0.0, 0);
  auto const m = make_random_mask(W, 4, 0.2, 11);
  auto const in = nn::prepare_input<float>(apply_mask(full, m), m, cfg);
  Tape<float> t;
  auto const bound = model.store().bind(t);
  auto const out = model.forward(t, bound, in);
  // Pre-RSS coil images back to k-space.
  auto const coils = t.value(nn::ifft2c(t, out.kspace));
  auto const k = scale(fft2c(nn::from_paired(coils)), in.scale);
  auto const obs = apply_mask(full, m);
  CHECK(norm2(sub(apply_mask(k, m), obs)) < 1e-5 * norm2(obs));
}

TEST_CASE("image crop is applied only at 320 and above")
{
  auto cfg = toy_config(1, 2, 1);
  cfg.kind = nn::ModelKind::ImageUNet;
  cfg.crop = 8;
  nn::Model<double> model(cfg, 1);
  auto const m = make_random_mask(12, 2, 0.25, 1);
  auto const in = nn::prepare_input<double>(apply_mask(oracle::random_complex({1, 10, 12}, 1), m), m, cfg);
  Tape<double> t;
  CHECK(t.value(model.forward(t, model.store().bind(t), in).image).shape() == Shape{8, 8});
  CHECK(nn::ModelConfig{}.crop == 320);
}

TEST_CASE("loss: identical images give -1 and the tape gradient matches finite differences")
{
  auto const x = oracle::random_real({8, 8}, 51, 0, 1);
  Tape<double> t;
  CHECK(t.value(nn::ssim_l1_loss(t, t.constant(x), x, 1.0, 1e-3, {3, 0.01, 0.03}))[0] == -1.0);
  CHECK(nn::ModelConfig{}.loss_lambda == 1e-3);
  for (std::uint64_t s = 0; s < 4; s++) {
    auto const a = oracle::random_real({8, 8}, 60 + s, 0, 1);
    auto const b = oracle::random_real({8, 8}, 70 + s, 0, 1);
    auto const r = gradcheck::check({a}, [&](Tape<double> &tp, std::vector<Var> const &v) {
      return nn::ssim_l1_loss(tp, v[0], b, 1.0, 1e-3, {3, 0.01, 0.03});
    });
    CHECK(r.max_rel < kTol);
  }
}

TEST_CASE("matched ablation and model kinds")
{
  auto cfg = toy_config(8, 16, 2);
  auto const base = nn::matched_ablation_base(cfg);
  auto u = cfg.unet();
  Index const target = 4 * nn::unet_parameter_count(u);
  u.base_channels = base;
  Index const got = nn::unet_parameter_count(u);
  for (Index b : {base - 1, base + 1}) {
    u.base_channels = b;
    CHECK(std::abs(nn::unet_parameter_count(u) - target) >= std::abs(got - target));
  }
  CHECK(std::abs(got - target) < target / 10);
  CHECK(nn::parse_model_kind("image_unet") == nn::ModelKind::ImageUNet);
  CHECK_THROWS_AS(nn::parse_model_kind("resnet"), Error);
  CHECK(nn::ModelConfig::from_json(cfg.to_json()) == cfg);
}

TEST_CASE("input scale is the interpolated 0.999 quantile")
{
  auto const k = oracle::random_complex({2, 10, 10}, 81);
  auto mag = abs(ifft2c(k));
  std::vector<double> v(mag.data().begin(), mag.data().end());
  std::sort(v.begin(), v.end());
  double const pos = 0.999 * 199;
  auto const lo = static_cast<std::size_t>(pos);
  double const want = v[lo] + (pos - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
  CHECK(std::abs(nn::input_scale(k) - want) < 1e-14);
  CHECK(nn::input_scale(ComplexTensor({1, 4, 4})) == 1.0);
}

TEST_CASE("checkpoint round trip")
{
  auto const dir = std::filesystem::temp_directory_path() / "parallax_test_ckpt";
  std::filesystem::remove_all(dir);
  auto cfg = toy_config(2, 4, 1);
  nn::Model<float> model(cfg, 91);
  randomize(model.store(), 92);
  for (auto &p : model.store().params()) {
    for (auto &a : p.accum.data()) { a = 0.5f; }
  }
  nn::save_checkpoint(dir, model, 1234, 7);
  nn::CheckpointInfo info;
  auto const back = nn::load_checkpoint<float>(dir, &info);
  CHECK(info.seed == 1234);
  CHECK(info.epoch == 7);
  CHECK(info.dtype == "float32");
  CHECK(back.config() == cfg);
  REQUIRE(back.store().count() == model.store().count());
  for (Index i = 0; i < model.store().count(); i++) {
    CHECK(back.store()[i].name == model.store()[i].name);
    CHECK(back.store()[i].value == model.store()[i].value);
    CHECK(back.store()[i].accum == model.store()[i].accum);
  }
  CHECK(back.store().init_scheme == "he_normal");
  CHECK_THROWS_AS(nn::load_checkpoint<float>(dir / "nowhere"), Error);
}
