#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "thlnet/config.hpp"
#include "thlnet/losses.hpp"
#include "thlnet/model.hpp"
#include "thlnet/optim.hpp"
#include "thlnet/toy_data.hpp"

namespace thl {

struct TrainRecord {
  std::int64_t step = 0;
  int epoch = 0;
  double lr = 0.0;
  double l_c = 0.0;
  double l_f = 0.0;
  double l_total = 0.0;
};

/// One optimization step = forward both stages, total loss, backward, global-norm clip, Adam.
class Trainer {
 public:
  Trainer(Thlnet& model, const TrainingConfig& cfg);

  /// Sets the learning rate from the decay schedule.
  void begin_epoch(int epoch);
  TrainRecord step(const ComplexSpectrogram& noisy, const ComplexSpectrogram& clean);

  Adam& optimizer() noexcept { return adam_; }
  std::int64_t steps() const noexcept { return steps_; }

 private:
  Thlnet* model_;
  TrainingConfig cfg_;
  LossConfig loss_;
  std::vector<VarF> params_;
  Adam adam_;
  int epoch_ = 0;
  std::int64_t steps_ = 0;
};

struct TrainOptions {
  /// Receives loss.csv, config.json, epoch_NNN.thln per epoch and model.thln (latest). Empty: write nothing.
  std::filesystem::path out_dir;
  std::function<void(const TrainRecord&)> on_step;
};

/// Trains for cfg.epochs over `data` (order reshuffled each epoch from cfg.seed). A non-finite value aborts
/// with NumericError naming the producing op and the step.
std::vector<TrainRecord> train(Thlnet& model, const TrainingConfig& cfg, const std::vector<ToyMixture>& data,
                               const TrainOptions& options = {});

}  // namespace thl
