#include <parallax/fft.hpp>
#include <parallax/grappa.hpp>
#include <parallax/nn/ops.hpp>
#include <parallax/phantom.hpp>
#include <parallax/recon.hpp>
#include <parallax/rng.hpp>

#include <benchmark/benchmark.h>

using namespace parallax;

namespace {

ComplexTensor random_kspace(Index N, Index H, Index W)
{
  Rng rng(1);
  ComplexTensor k({N, H, W});
  for (auto &v : k.data()) {
    double const re = rng.normal();
    v = Cx(re, rng.normal());
  }
  return k;
}

ComplexTensor phantom_kspace(Index N, Index H, Index W)
{
  phantom::PhantomSpec spec;
  spec.height = H;
  spec.width = W;
  spec.coils = N;
  auto const ph = phantom::make_phantom(spec);
  return phantom::simulate_acquisition(ph.image, ph.maps, full_mask(W), 0.0, 0);
}

void BM_fft2c(benchmark::State &state)
{
  auto const k = random_kspace(state.range(0), 128, 160);
  for (auto _ : state) { benchmark::DoNotOptimize(fft2c(k)); }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_fft2c)->Arg(1)->Arg(15);

void BM_grappa_calibrate(benchmark::State &state)
{
  auto const k = phantom_kspace(state.range(0), 128, 160);
  auto const m = make_equispaced_mask(160, 2, 0.15, 0);
  auto const acs = grappa::extract_acs(apply_mask(k, m), m);
  for (auto _ : state) { benchmark::DoNotOptimize(grappa::calibrate(acs, {{2, 4, 5}, std::nullopt})); }
}
BENCHMARK(BM_grappa_calibrate)->Arg(4)->Arg(15)->Unit(benchmark::kMillisecond);

void BM_grappa_apply(benchmark::State &state)
{
  auto const k = phantom_kspace(state.range(0), 128, 160);
  auto const m = make_equispaced_mask(160, 2, 0.15, 0);
  auto const ku = apply_mask(k, m);
  auto const g = grappa::calibrate(grappa::extract_acs(ku, m), {{2, 4, 5}, std::nullopt});
  for (auto _ : state) { benchmark::DoNotOptimize(grappa::apply(ku, m, g)); }
}
BENCHMARK(BM_grappa_apply)->Arg(4)->Arg(15)->Unit(benchmark::kMillisecond);

void BM_conv2d_forward_backward(benchmark::State &state)
{
  Index const C = state.range(0);
  Rng rng(2);
  Tensor<float> x({C, 64, 64}), w({C, C, 3, 3}), probe({C, 64, 64});
  for (auto *t : {&x, &w, &probe}) {
    for (auto &v : t->data()) { v = static_cast<float>(rng.normal()); }
  }
  for (auto _ : state) {
    nn::Tape<float> tape;
    auto const wv = tape.parameter(w, "w");
    tape.backward(nn::dot(tape, nn::conv2d(tape, tape.constant(x), wv, 1), probe));
    benchmark::DoNotOptimize(tape.grad(wv));
  }
}
BENCHMARK(BM_conv2d_forward_backward)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
