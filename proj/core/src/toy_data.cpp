#include "thlnet/toy_data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "thlnet/error.hpp"
#include "thlnet/random.hpp"

namespace thl {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<double> harmonic_tones(Rng& rng, std::size_t n, const ToyDataConfig& cfg) {
  std::vector<double> x(n, 0.0);
  const int tones = static_cast<int>(rng.uniform_int(cfg.min_tones, cfg.max_tones));
  const double fade = 0.02 * kSampleRate;
  for (int k = 0; k < tones; ++k) {
    const double f0 = rng.uniform(90.0, 400.0);
    const int harmonics = static_cast<int>(rng.uniform_int(3, 10));
    const double amp = rng.uniform(0.3, 1.0);
    const double onset = rng.uniform(0.0, 0.6) * static_cast<double>(n);
    const double length = rng.uniform(0.3, 1.0) * (static_cast<double>(n) - onset);
    const double vib_rate = rng.uniform(2.0, 6.0);
    const double vib_depth = rng.uniform(0.0, 0.03);
    std::vector<double> phase(harmonics);
    for (auto& p : phase) p = rng.uniform(0.0, kTwoPi);
    const std::size_t begin = static_cast<std::size_t>(onset);
    const std::size_t end = std::min(n, static_cast<std::size_t>(onset + length));
    double inst = 0.0;  // integrated fundamental phase
    for (std::size_t i = begin; i < end; ++i) {
      const double t = static_cast<double>(i - begin);
      const double f = f0 * (1.0 + vib_depth * std::sin(kTwoPi * vib_rate * t / kSampleRate));
      inst += kTwoPi * f / kSampleRate;
      const double env = std::min({1.0, t / fade, static_cast<double>(end - i) / fade});
      double s = 0.0;
      for (int h = 1; h <= harmonics; ++h) {
        if (f * h >= 0.45 * kSampleRate) break;
        s += std::sin(h * inst + phase[h - 1]) / h;
      }
      x[i] += amp * env * s;
    }
  }
  return x;
}

std::vector<double> noise(Rng& rng, std::size_t n) {
  std::vector<double> w(n);
  for (auto& v : w) v = rng.normal();
  if (rng.uniform() < 0.5) {
    // Coloured: one-pole low- or high-pass, random corner.
    const double a = rng.uniform(0.3, 0.97);
    const bool high = rng.uniform() < 0.3;
    double y = 0.0, prev = 0.0;
    for (auto& v : w) {
      const double in = v;
      y = high ? a * (y + in - prev) : a * y + (1.0 - a) * in;
      prev = in;
      v = y;
    }
  } else {
    // Amplitude-modulated white noise.
    const double rate = rng.uniform(0.5, 8.0);
    const double depth = rng.uniform(0.3, 0.9);
    const double ph = rng.uniform(0.0, kTwoPi);
    for (std::size_t i = 0; i < n; ++i) {
      w[i] *= 1.0 - depth * 0.5 * (1.0 + std::sin(kTwoPi * rate * static_cast<double>(i) / kSampleRate + ph));
    }
  }
  return w;
}

double power(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s / static_cast<double>(std::max<std::size_t>(x.size(), 1));
}

ToyMixture mix(Rng& rng, double snr, const ToyDataConfig& cfg) {
  const auto n = static_cast<std::size_t>(std::llround(cfg.duration_s * kSampleRate));
  if (n == 0) throw ConfigError("toy data: duration must be positive");
  std::vector<double> clean = harmonic_tones(rng, n, cfg);
  std::vector<double> nz = noise(rng, n);
  const double pc = power(clean);
  const double pn = power(nz);
  const double gain = std::sqrt(pc / (pn * std::pow(10.0, snr / 10.0)));
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    nz[i] *= gain;
    peak = std::max({peak, std::abs(clean[i] + nz[i]), std::abs(clean[i]), std::abs(nz[i])});
  }
  const double norm = peak > 0.0 ? cfg.peak / peak : 1.0;
  ToyMixture m;
  m.snr_db = snr;
  m.clean.samples.resize(n);
  m.noise.samples.resize(n);
  m.mixture.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    m.clean.samples[i] = static_cast<float>(clean[i] * norm);
    m.noise.samples[i] = static_cast<float>(nz[i] * norm);
    m.mixture.samples[i] = m.clean.samples[i] + m.noise.samples[i];
  }
  return m;
}

}  // namespace

ToyMixture synthesize_mixture(std::uint64_t seed, const ToyDataConfig& cfg) {
  Rng rng(seed);
  const double snr = rng.uniform(cfg.snr_min_db, cfg.snr_max_db);
  return mix(rng, snr, cfg);
}

ToyMixture synthesize_mixture_at(std::uint64_t seed, double snr, const ToyDataConfig& cfg) {
  Rng rng(seed);
  rng.uniform();  // keep the stream aligned with synthesize_mixture
  return mix(rng, snr, cfg);
}

std::vector<ToyMixture> synthesize_batch(std::uint64_t seed, int count, const ToyDataConfig& cfg) {
  if (count < 0) throw ConfigError("toy data: negative item count");
  std::vector<ToyMixture> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(synthesize_mixture(derive_seed(seed, i), cfg));
  return out;
}

double snr_db(const std::vector<float>& signal, const std::vector<float>& noise) {
  double ps = 0.0, pn = 0.0;
  for (float v : signal) ps += static_cast<double>(v) * v;
  for (float v : noise) pn += static_cast<double>(v) * v;
  return 10.0 * std::log10(ps / pn);
}

}  // namespace thl
