#include "oracles.hpp"

#include <parallax/nn/checkpoint.hpp>
#include <parallax/nn/train.hpp>
#include <parallax/phantom.hpp>

#include <doctest.h>

#include <filesystem>
#include <limits>
#include <sstream>

using namespace parallax;

namespace {

std::vector<nn::TrainSample> phantom_samples(Index count, Index H, Index W, Index N, std::uint64_t seed)
{
  phantom::PhantomSpec spec;
  spec.height = H;
  spec.width = W;
  spec.coils = N;
  spec.noise_std = 1e-3;
  std::vector<nn::TrainSample> out;
  for (auto &s : phantom::generate_samples(count, 1, spec, seed)) {
    out.push_back({s.id, std::move(s.kspace), std::move(s.target), s.seed});
  }
  return out;
}

nn::ModelConfig small_model(Index coils)
{
  nn::ModelConfig c;
  c.coils = coils;
  c.base_channels = 4;
  c.depth = 1;
  return c;
}

} // namespace

TEST_CASE("RMSProp: zero gradient leaves parameters unchanged")
{
  nn::ParamStore<double> store;
  store.add("a", oracle::random_real({3, 4}, 1));
  auto const before = store[0].value;
  for (int i = 0; i < 10; i++) { nn::rmsprop_step(store, {Tensor<double>({3, 4})}, {}); }
  CHECK(store[0].value == before);
  CHECK_THROWS_AS(store.add("a", Tensor<double>({1})), Error);
}

TEST_CASE("RMSProp: constant gradient steps converge to lr * sign(g)")
{
  nn::ParamStore<double> store;
  store.add("p", Tensor<double>({4}));
  Tensor<double> g({4}, std::vector<double>{0.5, -2.0, 1e-3, -7.0});
  nn::RmsPropOptions opt;
  std::vector<double> step(4);
  for (int i = 0; i < 3000; i++) {
    auto const prev = store[0].value;
    nn::rmsprop_step(store, {g}, opt);
    for (Index j = 0; j < 4; j++) { step[static_cast<std::size_t>(j)] = store[0].value[j] - prev[j]; }
  }
  for (Index j = 0; j < 4; j++) {
    double const want = -opt.lr * (g[j] > 0 ? 1.0 : -1.0);
    CHECK(std::abs(step[static_cast<std::size_t>(j)] - want) < 1e-3 * opt.lr);
    CHECK(store[0].accum[j] == doctest::Approx(g[j] * g[j]).epsilon(1e-6));
  }
}

TEST_CASE("RMSProp: quadratic bowl decreases monotonically after step 5")
{
  nn::ParamStore<double> store;
  store.add("xy", Tensor<double>({2}, std::vector<double>{1.0, -0.5}));
  nn::RmsPropOptions opt;
  opt.lr = 1e-2;
  auto loss = [&] {
    auto const &p = store[0].value;
    return 2.0 * p[0] * p[0] + 0.5 * p[1] * p[1];
  };
  std::vector<double> trace;
  for (int i = 0; i < 100; i++) {
    auto const &p = store[0].value;
    Tensor<double> g({2}, std::vector<double>{4.0 * p[0], p[1]});
    trace.push_back(loss());
    nn::rmsprop_step(store, {g}, opt);
  }
  for (std::size_t i = 5; i < trace.size(); i++) { CHECK(trace[i] < trace[i - 1]); }
}

TEST_CASE("RMSProp: non-finite gradient aborts before touching parameters")
{
  nn::ParamStore<double> store;
  store.add("ok", Tensor<double>({2}, 1.0));
  store.add("bad", Tensor<double>({2}, 1.0));
  auto const snapshot = store.params();
  Tensor<double> bad({2});
  bad[1] = std::numeric_limits<double>::quiet_NaN();
  try {
    nn::rmsprop_step(store, {Tensor<double>({2}, 0.3), bad}, {});
    FAIL("expected a numerical error");
  } catch (Error const &e) {
    CHECK(e.category() == ErrorCategory::Numerical);
    CHECK(std::string(e.what()).find("bad") != std::string::npos);
  }
  CHECK(store[0].value == snapshot[0].value);
  CHECK(store[0].accum == snapshot[0].accum);
}

TEST_CASE("training masks: fresh per epoch, fixed for validation")
{
  nn::TrainConfig cfg;
  cfg.seed = 3;
  CHECK_FALSE(nn::training_mask(cfg, 64, 0, 0) == nn::training_mask(cfg, 64, 0, 1));
  CHECK(nn::training_mask(cfg, 64, 0, -1) == nn::training_mask(cfg, 64, 0, -1));
  CHECK_FALSE(nn::training_mask(cfg, 64, 0, 0) == nn::training_mask(cfg, 64, 1, 0));
  cfg.family = nn::MaskFamily::Equispaced;
  CHECK(lattice_offset(nn::training_mask(cfg, 64, 2, 0), 4).has_value());
}

TEST_CASE("lr = 0: parameters unchanged and identical loss every epoch")
{
  auto const data = phantom_samples(1, 32, 32, 2, 1);
  nn::Model<float> model(small_model(2), 5);
  auto const before = model.store().params();
  nn::TrainConfig cfg;
  cfg.center_fraction = 0.125;
  cfg.epochs = 3;
  cfg.optimizer.lr = 0.0;
  cfg.resample_masks = false;
  auto const r = nn::train(model, data, {}, cfg);
  REQUIRE(r.log.size() == 3);
  CHECK(r.log[0].loss == r.log[1].loss);
  CHECK(r.log[1].loss == r.log[2].loss);
  for (std::size_t i = 0; i < before.size(); i++) { CHECK(model.store()[static_cast<Index>(i)].value == before[i].value); }
}

TEST_CASE("training is bitwise reproducible for a fixed seed")
{
  auto const data = phantom_samples(4, 32, 32, 2, 2);
  std::vector<nn::TrainSample> const train_set(data.begin(), data.begin() + 3), val_set(data.begin() + 3, data.end());
  nn::TrainConfig cfg;
  cfg.center_fraction = 0.125;
  cfg.epochs = 2;
  cfg.batch = 2;
  cfg.seed = 11;
  cfg.optimizer.lr = 1e-3;
  auto run = [&] {
    nn::Model<float> model(small_model(2), 7);
    auto const r = nn::train(model, train_set, val_set, cfg);
    return std::make_pair(model.store().params(), r);
  };
  auto const [pa, ra] = run();
  auto const [pb, rb] = run();
  for (std::size_t i = 0; i < pa.size(); i++) {
    CHECK(pa[i].value == pb[i].value);
    CHECK(pa[i].accum == pb[i].accum);
  }
  CHECK(ra.step_losses == rb.step_losses);
  REQUIRE(ra.log.size() == 4);
  CHECK(ra.log[1].split == "val");

  std::ostringstream csv;
  nn::write_log_csv(csv, ra.log);
  CHECK(csv.str().rfind("epoch,split,loss,ssim,nmse,psnr\n", 0) == 0);
}

TEST_CASE("overfitting one batch reduces the loss")
{
  auto const data = phantom_samples(1, 32, 32, 2, 3);
  nn::Model<float> model(small_model(2), 9);
  nn::TrainConfig cfg;
  cfg.center_fraction = 0.125;
  cfg.optimizer.lr = 1e-3;
  auto const losses = nn::overfit_batch(model, data, cfg, 40);
  CHECK(losses.back() < losses.front());
  CHECK(losses.front() > -1.0);
}

TEST_CASE("non-finite loss aborts and leaves a last-good checkpoint")
{
  auto data = phantom_samples(1, 32, 32, 2, 4);
  auto const dir = std::filesystem::temp_directory_path() / "parallax_test_nan";
  std::filesystem::remove_all(dir);
  data[0].target[5] = std::numeric_limits<double>::quiet_NaN();
  nn::Model<float> model(small_model(2), 1);
  nn::TrainConfig cfg;
  cfg.center_fraction = 0.125;
  cfg.epochs = 1;
  cfg.checkpoint_dir = dir;
  try {
    nn::train(model, data, {}, cfg);
    FAIL("expected a numerical error");
  } catch (Error const &e) {
    CHECK(e.category() == ErrorCategory::Numerical);
  }
  CHECK(std::filesystem::exists(dir / "last_good" / "checkpoint.json"));
  auto const back = nn::load_checkpoint<float>(dir / "last_good");
  CHECK(back.store()[0].value == model.store()[0].value);
}
