// thlnet: enhance / train / profile / gradcheck.
//
// Exit codes: 0 success, 1 a check failed (gradcheck), 2 usage error,
// 10 dimension, 11 config, 12 format, 13 I/O, 14 numeric, 15 graph, 70 anything else.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "thlnet/checkpoint.hpp"
#include "thlnet/config.hpp"
#include "thlnet/error.hpp"
#include "thlnet/gradcheck.hpp"
#include "thlnet/metrics.hpp"
#include "thlnet/model.hpp"
#include "thlnet/profiler.hpp"
#include "thlnet/toy_data.hpp"
#include "thlnet/trainer.hpp"
#include "thlnet/wav.hpp"

namespace fs = std::filesystem;

namespace {

struct EnhanceArgs {
  std::string input, output, checkpoint, reference;
  std::string mode = "offline";
};

struct TrainArgs {
  std::string config, out;
  std::optional<int> epochs;
  std::optional<std::uint64_t> seed;
  std::optional<int> items;
  std::optional<double> duration;
};

struct ProfileArgs {
  std::string config;
  std::string preset = "reference";
  bool json = false;
};

struct GradcheckArgs {
  std::uint64_t seed = 0;
  double tolerance = 1e-5;
  std::string corrupt_op;
};

int run_enhance(const EnhanceArgs& a) {
  if (!fs::exists(a.checkpoint)) throw thl::IoError("checkpoint '" + a.checkpoint + "' does not exist");
  const thl::Checkpoint ckpt = thl::load_checkpoint(a.checkpoint);
  thl::Thlnet model(ckpt.config());
  thl::apply_checkpoint(model, ckpt);
  const thl::Waveform in = thl::read_wav(a.input);
  const thl::Waveform out = a.mode == "stream" ? thl::enhance_streaming(model, in) : thl::enhance_offline(model, in);
  thl::write_wav(a.output, out);
  std::printf("wrote %s (%zu samples, %s)\n", a.output.c_str(), out.size(), a.mode.c_str());
  if (!a.reference.empty()) {
    const thl::Waveform ref = thl::read_wav(a.reference);
    std::printf("si-sdr input:    %8.3f dB\n", thl::si_sdr(in.samples, ref.samples));
    std::printf("si-sdr enhanced: %8.3f dB\n", thl::si_sdr(out.samples, ref.samples));
  }
  return 0;
}

int run_train(const TrainArgs& a) {
  thl::ProjectConfig pc;
  if (!a.config.empty()) pc = thl::load_project_config(a.config);
  if (a.epochs) pc.training.epochs = *a.epochs;
  if (a.seed) pc.training.seed = *a.seed;
  if (a.items) pc.training.train_items = *a.items;
  if (a.duration) pc.training.duration_s = *a.duration;
  pc.training.validate();

  thl::ToyDataConfig dc;
  dc.duration_s = pc.training.duration_s;
  const auto data = thl::synthesize_batch(pc.training.seed, pc.training.train_items, dc);
  thl::Thlnet model(pc.model, pc.training.seed);
  thl::TrainOptions opt;
  opt.out_dir = a.out;
  opt.on_step = [](const thl::TrainRecord& r) {
    std::printf("step %6lld  epoch %3d  lr %.6g  L_c %.6f  L_f %.6f  L %.6f\n", static_cast<long long>(r.step),
                r.epoch, r.lr, r.l_c, r.l_f, r.l_total);
  };
  const auto history = thl::train(model, pc.training, data, opt);
  std::printf("trained %zu steps; checkpoints and loss.csv in %s\n", history.size(), a.out.c_str());
  return 0;
}

int run_profile(const ProfileArgs& a) {
  thl::ModelConfig cfg;
  if (!a.config.empty()) {
    cfg = thl::load_project_config(a.config).model;
  } else if (a.preset == "reference") {
    cfg = thl::reference_model_config();
  } else if (a.preset == "coarse") {
    cfg = thl::coarse_only_config();
  } else if (a.preset == "tiny") {
    cfg = thl::tiny_model_config();
  } else {
    cfg.coarse.enabled = false;
    cfg.fine.enabled = false;
  }
  const thl::ProfileReport r = thl::profile_model(cfg);
  if (a.json) {
    std::printf("%s\n", thl::report_json(r).c_str());
  } else {
    std::printf("%s", thl::report_table(r).c_str());
  }
  return 0;
}

int run_gradcheck(const GradcheckArgs& a) {
  const auto reports = thl::run_gradcheck_suite(a.seed, a.corrupt_op, a.tolerance);
  int failed = 0;
  for (const auto& r : reports) {
    std::printf("%-26s max_rel_error %.3e  %s\n", r.name.c_str(), r.max_rel_error, r.pass ? "ok" : "FAIL");
    failed += r.pass ? 0 : 1;
  }
  if (failed) {
    std::printf("%d of %zu cases failed:", failed, reports.size());
    for (const auto& r : reports) {
      if (!r.pass) std::printf(" %s", r.name.c_str());
    }
    std::printf("\n");
    return 1;
  }
  std::printf("all %zu cases passed (tolerance %.1e)\n", reports.size(), a.tolerance);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"THLNet two-stage speech enhancement"};
  app.require_subcommand(1);

  EnhanceArgs ea;
  auto* enhance = app.add_subcommand("enhance", "Enhance a 16 kHz mono WAV file");
  enhance->add_option("--input", ea.input, "Noisy input WAV")->required()->check(CLI::ExistingFile);
  enhance->add_option("--output", ea.output, "Enhanced output WAV")->required();
  enhance->add_option("--checkpoint", ea.checkpoint, "THLN checkpoint")->required();
  enhance->add_option("--mode", ea.mode, "offline or stream")->check(CLI::IsMember({"offline", "stream"}));
  enhance->add_option("--reference", ea.reference, "Clean reference WAV; prints SI-SDR")->check(CLI::ExistingFile);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train on synthetic mixtures");
  train->add_option("--config", ta.config, "Project config JSON")->check(CLI::ExistingFile);
  train->add_option("--epochs", ta.epochs, "Override training.epochs")->check(CLI::NonNegativeNumber);
  train->add_option("--seed", ta.seed, "Override training.seed");
  train->add_option("--items", ta.items, "Override training.train_items")->check(CLI::PositiveNumber);
  train->add_option("--duration", ta.duration, "Override training.duration_s")->check(CLI::PositiveNumber);
  train->add_option("--out", ta.out, "Output directory")->required();

  ProfileArgs pa;
  auto* profile = app.add_subcommand("profile", "Parameter and MAC budget of a configuration");
  auto* cfg_opt = profile->add_option("--config", pa.config, "Project config JSON")->check(CLI::ExistingFile);
  profile->add_option("--preset", pa.preset, "reference, coarse, tiny or empty")
      ->check(CLI::IsMember({"reference", "coarse", "tiny", "empty"}))
      ->excludes(cfg_opt);
  profile->add_flag("--json", pa.json, "Emit JSON");

  GradcheckArgs ga;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every differentiable op");
  gradcheck->add_option("--seed", ga.seed, "Input seed");
  gradcheck->add_option("--tolerance", ga.tolerance, "Max relative error")->check(CLI::PositiveNumber);
  gradcheck->add_option("--corrupt-op", ga.corrupt_op, "Negate the gradient of this case (negative control)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*enhance) return run_enhance(ea);
    if (*train) return run_train(ta);
    if (*profile) return run_profile(pa);
    if (*gradcheck) return run_gradcheck(ga);
  } catch (const thl::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 70;
  }
  return 0;
}
