#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace thl {

inline constexpr int kConfigVersion = 1;

struct LcrbConfig {
  int bands = 32;  // P; each band merges 256 / P bins
};

/// U-shaped first stage.
struct CoarseConfig {
  bool enabled = true;
  std::vector<int> enc_channels{64, 64, 64};
  std::vector<std::array<int, 2>> kernels{{5, 2}, {3, 2}, {3, 2}};  // (freq, time)
  std::vector<std::array<int, 2>> strides{{2, 1}, {2, 1}, {1, 1}};  // (freq, time)
  std::vector<int> freq_paddings{2, 1, 1};
  int dp_blocks = 2;
  int dp_hidden = 64;  // inter LSTM width; the intra BiLSTM splits it across directions
};

/// Single-scale low-band second stage.
struct FineConfig {
  bool enabled = true;
  int low_bins = 128;  // Q
  int feature_maps = 48;
  int dp_blocks = 2;
  std::vector<int> dilations{1, 2, 4};
  int kernel_f = 3;
  int kernel_t = 2;
  int heads = 4;
  int ffn_hidden = 48;  // per-direction width of the frequency BiGRU feed-forward
};

struct ModelConfig {
  int version = kConfigVersion;
  LcrbConfig lcrb;
  CoarseConfig coarse;
  FineConfig fine;
  /// History cap for any time-causal attention (frames). The reference model has none.
  int attention_context = 100;

  /// Throws ConfigError describing the first inconsistent field.
  void validate() const;
  bool empty() const noexcept { return !coarse.enabled && !fine.enabled; }
};

struct TrainingConfig {
  int epochs = 100;
  double learning_rate = 4e-4;
  double clip_norm = 5.0;
  double lr_decay = 0.98;
  int lr_decay_period = 2;  // epochs
  double alpha = 0.5;
  double lambda = 1.0;
  int train_items = 200;
  double duration_s = 4.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Top-level JSON file: {"version": 1, "model": {...}, "training": {...}}. Both sections optional.
struct ProjectConfig {
  ModelConfig model;
  TrainingConfig training;
};

ModelConfig reference_model_config();
/// First stage only (LCRB + U-shaped net).
ModelConfig coarse_only_config();
/// Small configuration used for fast toy training.
ModelConfig tiny_model_config();

std::string model_config_to_json(const ModelConfig& c, int indent = -1);
/// Strict parse: unknown keys and type mismatches raise ConfigError naming the field path.
ModelConfig model_config_from_json(const std::string& text);

std::string project_config_to_json(const ProjectConfig& c, int indent = 2);
ProjectConfig project_config_from_json(const std::string& text);
ProjectConfig load_project_config(const std::filesystem::path& path);

}  // namespace thl
