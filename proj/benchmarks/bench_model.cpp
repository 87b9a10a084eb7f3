#include <benchmark/benchmark.h>

#include "thlnet/model.hpp"
#include "thlnet/random.hpp"
#include "thlnet/toy_data.hpp"
#include "thlnet/trainer.hpp"

using namespace thl;

namespace {

ModelConfig preset(std::int64_t which) { return which == 0 ? reference_model_config() : tiny_model_config(); }

Waveform noise(std::size_t n) {
  Rng rng(1);
  Waveform w;
  w.samples.resize(n);
  for (auto& v : w.samples) v = static_cast<float>(rng.uniform(-0.5, 0.5));
  return w;
}

// One second of audio, whole-utterance path. Real-time factor = time / 1 s.
void BM_EnhanceOffline(benchmark::State& state) {
  const Thlnet model(preset(state.range(0)), 2);
  const Waveform w = noise(16000);
  for (auto _ : state) benchmark::DoNotOptimize(enhance_offline(model, w));
  state.SetLabel(state.range(0) == 0 ? "reference" : "tiny");
}
BENCHMARK(BM_EnhanceOffline)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

// One 16 ms hop through the streaming enhancer; must stay well under 16 ms for real time.
void BM_StreamHop(benchmark::State& state) {
  const Thlnet model(preset(state.range(0)), 3);
  StreamingEnhancer se(model);
  const Waveform w = noise(kHop);
  for (auto _ : state) benchmark::DoNotOptimize(se.process(w.samples));
  state.SetLabel(state.range(0) == 0 ? "reference" : "tiny");
}
BENCHMARK(BM_StreamHop)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

// Forward, backward, clip and Adam on one 4 s pair.
void BM_TrainStep(benchmark::State& state) {
  Thlnet model(preset(state.range(0)), 4);
  const ToyMixture m = synthesize_mixture(5);
  const ComplexSpectrogram x = stft(m.mixture), s = stft(m.clean);
  Trainer tr(model, TrainingConfig{});
  tr.begin_epoch(0);
  for (auto _ : state) benchmark::DoNotOptimize(tr.step(x, s));
  state.SetLabel(state.range(0) == 0 ? "reference" : "tiny");
}
BENCHMARK(BM_TrainStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace

BENCHMARK_MAIN();
