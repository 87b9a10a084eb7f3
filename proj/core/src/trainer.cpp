#include "thlnet/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "thlnet/checkpoint.hpp"
#include "thlnet/random.hpp"

namespace thl {

Trainer::Trainer(Thlnet& model, const TrainingConfig& cfg)
    : model_(&model),
      cfg_(cfg),
      loss_{cfg.alpha, cfg.lambda},
      params_(model.registry().parameters()),
      adam_(params_, AdamOptions{static_cast<float>(cfg.learning_rate)}) {
  cfg_.validate();
}

void Trainer::begin_epoch(int epoch) {
  epoch_ = epoch;
  adam_.set_lr(static_cast<float>(lr_schedule(cfg_.learning_rate, epoch, cfg_.lr_decay, cfg_.lr_decay_period)));
}

TrainRecord Trainer::step(const ComplexSpectrogram& noisy, const ComplexSpectrogram& clean) {
  adam_.zero_grad();
  const StageOutputs o = model_->forward(VarF(noisy.data));
  const VarF target(clean.data);
  const LossTerms<float> l = loss_total(o.s_c, o.s_f, target, loss_);
  backward(l.total);
  clip_global_norm(params_, cfg_.clip_norm);
  adam_.step();
  ++steps_;
  return {steps_, epoch_, adam_.lr(), l.coarse.value()[0], l.fine.value()[0], l.total.value()[0]};
}

std::vector<TrainRecord> train(Thlnet& model, const TrainingConfig& cfg, const std::vector<ToyMixture>& data,
                               const TrainOptions& options) {
  cfg.validate();
  if (data.empty() && cfg.epochs > 0) throw ConfigError("train: no training data");
  const bool write = !options.out_dir.empty();
  std::ofstream csv;
  if (write) {
    std::filesystem::create_directories(options.out_dir);
    ProjectConfig pc{model.config(), cfg};
    std::ofstream(options.out_dir / "config.json") << project_config_to_json(pc) << '\n';
    csv.open(options.out_dir / "loss.csv");
    if (!csv) throw IoError("cannot write '" + (options.out_dir / "loss.csv").string() + "'");
    csv << "step,epoch,lr,l_c,l_f,l_total\n";
    save_checkpoint(options.out_dir / "model.thln", model);
  }

  std::vector<ComplexSpectrogram> noisy, clean;
  noisy.reserve(data.size());
  clean.reserve(data.size());
  for (const auto& m : data) {
    noisy.push_back(stft(m.mixture));
    clean.push_back(stft(m.clean));
  }

  Trainer trainer(model, cfg);
  std::vector<TrainRecord> history;
  std::vector<std::size_t> order(data.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    trainer.begin_epoch(epoch);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(cfg.seed, 0x7EA1ULL + static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
    }
    for (std::size_t i : order) {
      TrainRecord r;
      try {
        r = trainer.step(noisy[i], clean[i]);
      } catch (const NumericError& e) {
        throw NumericError(e.op(), "training aborted at step " + std::to_string(trainer.steps() + 1) + " (epoch " +
                                       std::to_string(epoch) + "): " + e.what());
      }
      history.push_back(r);
      if (write) {
        char line[160];
        std::snprintf(line, sizeof line, "%lld,%d,%.9g,%.9g,%.9g,%.9g\n", static_cast<long long>(r.step), r.epoch,
                      r.lr, r.l_c, r.l_f, r.l_total);
        csv << line;
      }
      if (options.on_step) options.on_step(r);
    }
    if (write) {
      csv.flush();
      char name[32];
      std::snprintf(name, sizeof name, "epoch_%03d.thln", epoch);
      save_checkpoint(options.out_dir / name, model);
      save_checkpoint(options.out_dir / "model.thln", model);
    }
  }
  return history;
}

}  // namespace thl
