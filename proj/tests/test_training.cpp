#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>

#include "doctest.h"
#include "test_util.hpp"
#include "thlnet/checkpoint.hpp"
#include "thlnet/trainer.hpp"

using namespace thl;

namespace {

ToyDataConfig short_clips() {
  ToyDataConfig c;
  c.duration_s = 0.25;
  return c;
}

TrainingConfig quick_training(int epochs) {
  TrainingConfig c;
  c.epochs = epochs;
  c.train_items = 3;
  c.duration_s = 0.25;
  c.seed = 5;
  return c;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("thlnet_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("toy mixtures are deterministic in the seed") {
  const ToyMixture a = synthesize_mixture(42), b = synthesize_mixture(42), c = synthesize_mixture(43);
  CHECK(a.mixture.samples == b.mixture.samples);
  CHECK(a.clean.samples == b.clean.samples);
  CHECK(a.mixture.samples != c.mixture.samples);
  CHECK(a.mixture.size() == 64000);
}

TEST_CASE("toy mixture is clean plus noise at the requested SNR") {
  for (double snr : {-5.0, 0.0, 12.5}) {
    const ToyMixture m = synthesize_mixture_at(7, snr, short_clips());
    REQUIRE(m.mixture.size() == 4000);
    CHECK(std::abs(snr_db(m.clean.samples, m.noise.samples) - snr) <= 0.1);
    double worst = 0.0, peak = 0.0;
    for (std::size_t i = 0; i < m.mixture.size(); ++i) {
      worst = std::max(worst, std::abs(static_cast<double>(m.clean.samples[i]) + m.noise.samples[i] - m.mixture.samples[i]));
      peak = std::max(peak, std::abs(static_cast<double>(m.mixture.samples[i])));
    }
    CHECK(worst <= 1e-6);
    CHECK(peak <= 1.0);
  }
}

TEST_CASE("random SNR draws stay inside the configured range") {
  ToyDataConfig c = short_clips();
  for (const auto& m : synthesize_batch(9, 30, c)) {
    CHECK(m.snr_db >= c.snr_min_db);
    CHECK(m.snr_db <= c.snr_max_db);
  }
}

TEST_CASE("training is bit-reproducible") {
  const auto data = synthesize_batch(1, 3, short_clips());
  Thlnet a(tiny_model_config(), 3), b(tiny_model_config(), 3);
  const auto ha = train(a, quick_training(2), data);
  const auto hb = train(b, quick_training(2), data);
  REQUIRE(ha.size() == 6);
  REQUIRE(hb.size() == 6);
  for (std::size_t i = 0; i < ha.size(); ++i) {
    CHECK(ha[i].step == static_cast<std::int64_t>(i + 1));
    CHECK(ha[i].l_total == hb[i].l_total);
  }
  CHECK(ha[5].epoch == 1);
  const Checkpoint ca = make_checkpoint(a), cb = make_checkpoint(b);
  CHECK(encode_checkpoint(ca) == encode_checkpoint(cb));
}

TEST_CASE("zero epochs leave the initialization and write the log header") {
  const auto dir = temp_dir("zero_epochs");
  const auto data = synthesize_batch(1, 3, short_clips());
  Thlnet model(tiny_model_config(), 4);
  const auto init = encode_checkpoint(make_checkpoint(model));
  TrainOptions opt;
  opt.out_dir = dir;
  CHECK(train(model, quick_training(0), data, opt).empty());
  CHECK(encode_checkpoint(make_checkpoint(model)) == init);
  CHECK(encode_checkpoint(load_checkpoint(dir / "model.thln")) == init);
  CHECK(slurp(dir / "loss.csv") == "step,epoch,lr,l_c,l_f,l_total\n");
  CHECK(std::filesystem::exists(dir / "config.json"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("one epoch logs one row per step and an epoch checkpoint") {
  const auto dir = temp_dir("one_epoch");
  const auto data = synthesize_batch(1, 3, short_clips());
  Thlnet model(tiny_model_config(), 4);
  TrainOptions opt;
  opt.out_dir = dir;
  int seen = 0;
  opt.on_step = [&](const TrainRecord&) { ++seen; };
  train(model, quick_training(1), data, opt);
  CHECK(seen == 3);
  const std::string csv = slurp(dir / "loss.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  CHECK(std::filesystem::exists(dir / "epoch_000.thln"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("a NaN in the data aborts with the step number") {
  auto data = synthesize_batch(1, 1, short_clips());
  data[0].mixture.samples[1000] = std::numeric_limits<float>::quiet_NaN();
  Thlnet model(tiny_model_config(), 4);
  try {
    train(model, quick_training(1), data);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("step 1") != std::string::npos);
    CHECK_FALSE(e.op().empty());
  }
}

TEST_CASE("trainer steps lower the loss on a fixed pair") {
  const ToyMixture m = synthesize_mixture_at(2, 0.0, short_clips());
  const auto x = stft(m.mixture), s = stft(m.clean);
  Thlnet model(tiny_model_config(), 6);
  Trainer tr(model, quick_training(1));
  tr.begin_epoch(0);
  const double first = tr.step(x, s).l_total;
  double last = first;
  for (int i = 0; i < 20; ++i) last = tr.step(x, s).l_total;
  CHECK(last < first);
  CHECK(tr.steps() == 21);
}

TEST_CASE("training defaults") {
  const TrainingConfig c;
  CHECK(c.learning_rate == 4e-4);
  CHECK(c.clip_norm == 5.0);
  CHECK(c.lr_decay == 0.98);
  CHECK(c.lr_decay_period == 2);
  CHECK(c.epochs == 100);
  CHECK(c.alpha == 0.5);
  CHECK(c.lambda == 1.0);
}
