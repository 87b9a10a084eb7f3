#pragma once

// THLN checkpoint, little-endian:
//   "THLN" | u32 version (1) | u32 tensor count
//   per tensor: u16 name length | name bytes | u8 dtype (0 = float32) | u8 rank | u32 dims[rank] | f32 payload
//   u32 config JSON length | config JSON bytes

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "thlnet/config.hpp"
#include "thlnet/tensor.hpp"

namespace thl {

class Thlnet;

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  TensorF value;
};

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::vector<NamedTensor> tensors;
  std::string config_json;

  ModelConfig config() const { return model_config_from_json(config_json); }
  const NamedTensor* find(const std::string& name) const;
  std::int64_t parameter_count() const;
};

/// Snapshot of the model's registry (in registration order) and config.
Checkpoint make_checkpoint(const Thlnet& model);

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
/// FormatError kinds: kBadMagic, kVersionMismatch, kTruncated (with offset), kUnsupportedEncoding, kParse.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
void save_checkpoint(const std::filesystem::path& path, const Thlnet& model);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies checkpoint tensors into the model. Every name and shape is checked before any weight is written;
/// a missing, extra or mis-shaped tensor raises FormatError(kShapeMismatch) and leaves the model untouched.
void apply_checkpoint(Thlnet& model, const Checkpoint& ckpt);

}  // namespace thl
