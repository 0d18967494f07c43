// Microbenchmarks for the hot paths: block transforms, the conv stack,
// UERD costs, the payload solver, and embedding simulation.
#include <benchmark/benchmark.h>

#include <vector>

#include "jecrl/distortion.hpp"
#include "jecrl/env_net.hpp"
#include "jecrl/graph.hpp"
#include "jecrl/jpeg_model.hpp"
#include "jecrl/layers.hpp"
#include "jecrl/rng.hpp"
#include "jecrl/synthetic.hpp"
#include "jecrl/uerd.hpp"

using namespace jecrl;

namespace {

JpegImage make_image(int side) {
  return synthetic_halfnoise_corpus(1, side, side, 75, 7)[0];
}

void bm_decompress(benchmark::State& state) {
  const JpegImage img = make_image(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(decompress(img));
  state.SetItemsProcessed(state.iterations() * (img.height / 8) * (img.width / 8));
}

void bm_block_dct_roundtrip(benchmark::State& state) {
  const JpegImage img = make_image(64);
  for (auto _ : state) {
    // analysis of the synthesized plane: one decompress + one blockwise DCT
    RealGrid freq = blockwise_dct(decompress(img, false));
    benchmark::DoNotOptimize(freq.data());
  }
  state.SetItemsProcessed(state.iterations() * 64 * 2);
}

void bm_uerd_cost(benchmark::State& state) {
  const JpegImage img = make_image(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(uerd_cost(img));
  state.SetItemsProcessed(state.iterations() * img.coeffs.size());
}

void bm_lambda_solve(benchmark::State& state) {
  const JpegImage img = make_image(256);
  const CostMap costs = uerd_cost(img);
  const double target = 0.4 * count_nzac(img);
  for (auto _ : state) benchmark::DoNotOptimize(solve_lambda(costs, target));
}

void bm_embed_sim(benchmark::State& state) {
  const JpegImage img = make_image(256);
  const CostMap costs = uerd_cost(img);
  const PolicyTensor policy =
      probabilities_from_costs(costs, solve_lambda(costs, 0.4 * count_nzac(img)));
  uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_embedding(policy, ++seed));
  state.SetItemsProcessed(state.iterations() * img.coeffs.size());
}

void bm_conv_forward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  Conv2d conv("bench", 5, 5, c, c, 1);
  Rng rng(5);
  conv.init_params(rng);
  Tensor x({2, 64, 64, c}), out;
  for (auto& v : x.v) v = rng.normal();
  std::vector<Tensor*> in{&x};
  for (auto _ : state) {
    conv.forward(in, out, true);
    benchmark::DoNotOptimize(out.v.data());
  }
  // 2 flops per MAC, kernel 5x5, same-size output.
  state.SetItemsProcessed(state.iterations() * 2ll * 2 * 64 * 64 * 25 * c * c);
}

void bm_conv_backward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  Conv2d conv("bench", 5, 5, c, c, 1);
  Rng rng(5);
  conv.init_params(rng);
  Tensor x({2, 64, 64, c}), out;
  for (auto& v : x.v) v = rng.normal();
  std::vector<Tensor*> in{&x};
  conv.forward(in, out, true);
  out.g.assign(out.v.size(), 1.0);
  x.zero_grad();
  for (auto _ : state) {
    conv.backward(in, out);
    benchmark::DoNotOptimize(conv.weight().t.g.data());
  }
  state.SetItemsProcessed(state.iterations() * 3ll * 2 * 2 * 64 * 64 * 25 * c * c);
}

void bm_env_forward_pair(benchmark::State& state) {
  Rng rng(11);
  EnvNetConfig cfg;
  EnvNet net(cfg, rng);
  const auto covers = synthetic_halfnoise_corpus(1, 64, 64, 75, 9);
  const RealGrid cover = decompress(covers[0]);
  RealGrid stego = cover;
  stego.at(8, 8) += 1.0;
  const std::vector<const PixelPlane*> planes{&cover, &stego};
  for (auto _ : state) {
    net.forward(planes, false);
    benchmark::DoNotOptimize(net.softmax(0));
  }
}

}  // namespace

BENCHMARK(bm_decompress)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_block_dct_roundtrip)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_uerd_cost)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_lambda_solve)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_embed_sim)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_conv_forward)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_conv_backward)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_env_forward_pair)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
