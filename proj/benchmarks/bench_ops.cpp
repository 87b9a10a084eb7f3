#include <benchmark/benchmark.h>

#include "thlnet/dsp.hpp"
#include "thlnet/ops.hpp"
#include "thlnet/random.hpp"

using namespace thl;

namespace {

TensorF rand(Shape s, std::uint64_t seed) {
  Rng rng(seed);
  return rng.uniform_tensor<float>(std::move(s), -1.0, 1.0);
}

// Encoder-sized causal conv: 64 -> 64 channels, 3 x 2 kernel, stride 2 in frequency.
void BM_Conv2d(benchmark::State& state) {
  const std::int64_t t = state.range(0);
  const VarF x(rand({64, 16, t}, 1)), w(rand({64, 64, 3, 2}, 2)), b(rand({64}, 3));
  ops::Conv2dOptions opt;
  opt.stride_f = 2;
  opt.pad_f = 1;
  NoGradGuard g;
  for (auto _ : state) benchmark::DoNotOptimize(ops::conv2d(x, w, b, opt));
  state.SetItemsProcessed(state.iterations() * t);
}
BENCHMARK(BM_Conv2d)->Arg(1)->Arg(250);

void BM_Conv2dBackward(benchmark::State& state) {
  const VarF x(rand({64, 16, 250}, 1), true), w(rand({64, 64, 3, 2}, 2), true), b(rand({64}, 3), true);
  ops::Conv2dOptions opt;
  opt.stride_f = 2;
  opt.pad_f = 1;
  for (auto _ : state) backward(ops::sum(ops::conv2d(x, w, b, opt)));
}
BENCHMARK(BM_Conv2dBackward);

// Inter-frame recurrence of the first stage: 8 frequency rows, 64 units, one 4 s clip.
void BM_Lstm(benchmark::State& state) {
  const VarF x(rand({8, 251, 64}, 4)), wi(rand({256, 64}, 5)), wh(rand({256, 64}, 6)), b(rand({256}, 7));
  NoGradGuard g;
  for (auto _ : state) benchmark::DoNotOptimize(ops::lstm(x, wi, wh, b, false).output);
}
BENCHMARK(BM_Lstm);

void BM_Gru(benchmark::State& state) {
  const VarF x(rand({251, 128, 48}, 8)), wi(rand({144, 48}, 9)), wh(rand({144, 48}, 10));
  const VarF bi(rand({144}, 11)), bh(rand({144}, 12));
  NoGradGuard g;
  for (auto _ : state) benchmark::DoNotOptimize(ops::gru(x, wi, wh, bi, bh, false).output);
}
BENCHMARK(BM_Gru);

void BM_Attention(benchmark::State& state) {
  const VarF q(rand({251, 128, 48}, 13)), k(rand({251, 128, 48}, 14)), v(rand({251, 128, 48}, 15));
  ops::AttentionOptions opt;
  opt.heads = 4;
  NoGradGuard g;
  for (auto _ : state) benchmark::DoNotOptimize(ops::attention(q, k, v, opt));
}
BENCHMARK(BM_Attention);

void BM_StftRoundTrip(benchmark::State& state) {
  Rng rng(16);
  std::vector<float> x(64000);
  for (auto& v : x) v = static_cast<float>(rng.uniform(-0.5, 0.5));
  for (auto _ : state) benchmark::DoNotOptimize(istft(stft(x), x.size()));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(x.size() * sizeof(float)));
}
BENCHMARK(BM_StftRoundTrip);

}  // namespace

BENCHMARK_MAIN();
