#include "pnpmri/cnn.hpp"
#include "pnpmri/denoiser.hpp"
#include "pnpmri/grappa.hpp"
#include "pnpmri/nn_layers.hpp"
#include "pnpmri/operators.hpp"
#include "pnpmri/pnp_admm.hpp"
#include "pnpmri/prox.hpp"
#include "pnpmri/simulate.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace pnpmri;

namespace {

struct Scene {
  SensitivityMaps maps;
  SamplingMask mask;
  KSpaceData data;
  Image truth;
};

Scene make_scene(std::size_t n, std::size_t coils, std::size_t accel) {
  PhantomSpec ps;
  ps.rows = ps.cols = n;
  ps.jitter = 0.1;
  MaskSpec ms;
  ms.accel_rows = accel;
  ms.acs = 24;
  Scene s{make_sensitivity_maps(coils, n, n, 0), make_mask(n, n, ms), {}, make_phantom(ps)};
  s.data = simulate_acquisition(s.truth, s.maps, s.mask, NoiseModel{0.02, 1});
  return s;
}

nn::Tensor3 noise_tensor(std::size_t c, std::size_t r, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  nn::Tensor3 t(c, r, w);
  for (auto &v : t.data) v = nd(rng);
  return t;
}

nn::ConvLayer random_conv(std::size_t in, std::size_t out) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd(0.0, 0.1);
  nn::ConvLayer layer(in, out, 3);
  for (auto &v : layer.weight) v = nd(rng);
  return layer;
}

void BM_ConvForward(benchmark::State &state) {
  const auto ch = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  const nn::ConvLayer layer = random_conv(ch, ch);
  const nn::Tensor3 x = noise_tensor(ch, n, n, 1);
  for (auto _ : state) benchmark::DoNotOptimize(nn::conv_forward(layer, x));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(ch * ch * 9 * n * n));
}
BENCHMARK(BM_ConvForward)->Args({16, 32})->Args({16, 128})->Args({32, 64})->Unit(benchmark::kMicrosecond);

void BM_ConvBackward(benchmark::State &state) {
  const auto ch = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  const nn::ConvLayer layer = random_conv(ch, ch);
  const nn::Tensor3 padded = nn::reflect_pad(noise_tensor(ch, n, n, 1), 1);
  const nn::Tensor3 g = noise_tensor(ch, n, n, 2);
  for (auto _ : state) {
    nn::ConvGrad grad{std::vector<double>(layer.weight.size()), std::vector<double>(layer.bias.size())};
    benchmark::DoNotOptimize(nn::conv_backward(layer, padded, g, grad));
  }
}
BENCHMARK(BM_ConvBackward)->Args({16, 32})->Args({16, 128})->Unit(benchmark::kMicrosecond);

void BM_CnnDenoise(benchmark::State &state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  CnnArchitecture arch;
  const CnnDenoiser den(arch, make_initial_weights(arch, 0));
  const Scene s = make_scene(n, 1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(denoise_complex(den, s.truth));
}
BENCHMARK(BM_CnnDenoise)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_EncodingForward(benchmark::State &state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Scene s = make_scene(n, 4, 4);
  const EncodingOperator op(s.maps, s.mask);
  for (auto _ : state) benchmark::DoNotOptimize(op.forward(s.truth));
}
BENCHMARK(BM_EncodingForward)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_EncodingAdjoint(benchmark::State &state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Scene s = make_scene(n, 4, 4);
  const EncodingOperator op(s.maps, s.mask);
  for (auto _ : state) benchmark::DoNotOptimize(op.adjoint(s.data));
}
BENCHMARK(BM_EncodingAdjoint)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_Prox(benchmark::State &state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Scene s = make_scene(n, 4, 4);
  const EncodingOperator op(s.maps, s.mask);
  const Image start = op.adjoint(s.data);
  std::size_t iters = 0;
  for (auto _ : state) {
    const ProxResult r = prox(op, s.data, start, 1.0, CgConfig{});
    iters = r.iterations_used;
    benchmark::DoNotOptimize(r.z);
  }
  state.counters["cg_iters"] = static_cast<double>(iters);
}
BENCHMARK(BM_Prox)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_PnpGaussian(benchmark::State &state) {
  const Scene s = make_scene(128, 4, 4);
  const EncodingOperator op(s.maps, s.mask);
  PnpConfig cfg;
  cfg.record_history = false;
  const GaussianDenoiser den(1.0);
  for (auto _ : state) benchmark::DoNotOptimize(pnp_reconstruct(op, s.data, den, cfg).x);
}
BENCHMARK(BM_PnpGaussian)->Unit(benchmark::kMillisecond);

void BM_GrappaReconstruct(benchmark::State &state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Scene s = make_scene(n, 4, 4);
  GrappaOptions opts;
  opts.kernel_readout_width = 7;
  opts.tikhonov = 1.0;
  for (auto _ : state) benchmark::DoNotOptimize(grappa_reconstruct(s.data, opts));
}
BENCHMARK(BM_GrappaReconstruct)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
