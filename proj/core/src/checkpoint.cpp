#include "thlnet/checkpoint.hpp"

#include <limits>
#include <set>

#include "byte_io.hpp"
#include "thlnet/model.hpp"
#include "thlnet/wav.hpp"

namespace thl {

using Kind = FormatError::Kind;

const NamedTensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

std::int64_t Checkpoint::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& t : tensors) n += static_cast<std::int64_t>(t.value.numel());
  return n;
}

Checkpoint make_checkpoint(const Thlnet& model) {
  Checkpoint c;
  for (const auto& [name, v] : model.registry().entries()) c.tensors.push_back({name, v.value()});
  c.config_json = model_config_to_json(model.config());
  return c;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  detail::ByteWriter out;
  out.text("THLN");
  out.uint<std::uint32_t>(ckpt.version);
  out.uint<std::uint32_t>(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) {
    if (t.name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw ConfigError("checkpoint: tensor name too long: " + t.name.substr(0, 64) + "...");
    }
    if (t.value.rank() > std::numeric_limits<std::uint8_t>::max()) {
      throw ConfigError("checkpoint: tensor '" + t.name + "' has too many dimensions");
    }
    out.uint<std::uint16_t>(static_cast<std::uint16_t>(t.name.size()));
    out.text(t.name);
    out.uint<std::uint8_t>(0);
    out.uint<std::uint8_t>(static_cast<std::uint8_t>(t.value.rank()));
    for (auto d : t.value.shape()) out.uint<std::uint32_t>(static_cast<std::uint32_t>(d));
    for (float v : t.value.values()) out.f32(v);
  }
  out.uint<std::uint32_t>(static_cast<std::uint32_t>(ckpt.config_json.size()));
  out.text(ckpt.config_json);
  return std::move(out.buffer());
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, "checkpoint");
  const auto magic = r.bytes(4, "magic");
  if (!(magic[0] == 'T' && magic[1] == 'H' && magic[2] == 'L' && magic[3] == 'N')) {
    throw FormatError(Kind::kBadMagic, "checkpoint: bad magic (expected \"THLN\")", 0);
  }
  Checkpoint c;
  c.version = r.uint<std::uint32_t>("version");
  if (c.version != kCheckpointVersion) {
    throw FormatError(Kind::kVersionMismatch, "checkpoint: version " + std::to_string(c.version) +
                                                  " is not supported (expected " +
                                                  std::to_string(kCheckpointVersion) + ")",
                      4);
  }
  const std::uint32_t count = r.uint<std::uint32_t>("tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    const std::uint16_t len = r.uint<std::uint16_t>("name length");
    const auto name = r.bytes(len, "tensor name");
    t.name.assign(name.begin(), name.end());
    const std::size_t dtype_at = r.offset();
    if (r.uint<std::uint8_t>("dtype") != 0) {
      throw FormatError(Kind::kUnsupportedEncoding, "checkpoint: tensor '" + t.name + "' has unknown dtype",
                        static_cast<std::int64_t>(dtype_at));
    }
    const std::uint8_t rank = r.uint<std::uint8_t>("rank");
    Shape shape(rank);
    std::uint64_t numel = 1;
    for (auto& d : shape) {
      d = r.uint<std::uint32_t>("dimension");
      numel *= static_cast<std::uint64_t>(d);
    }
    if (numel * 4 > r.remaining()) r.need(static_cast<std::size_t>(numel * 4), "tensor payload");
    t.value = TensorF(shape);
    for (auto& v : t.value.values()) v = r.f32("tensor payload");
    c.tensors.push_back(std::move(t));
  }
  const std::uint32_t json_len = r.uint<std::uint32_t>("config length");
  const auto json = r.bytes(json_len, "config JSON");
  c.config_json.assign(json.begin(), json.end());
  if (!r.done()) {
    throw FormatError(Kind::kParse, "checkpoint: " + std::to_string(r.remaining()) + " trailing bytes",
                      static_cast<std::int64_t>(r.offset()));
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file_bytes(path, encode_checkpoint(ckpt));
}

void save_checkpoint(const std::filesystem::path& path, const Thlnet& model) {
  save_checkpoint(path, make_checkpoint(model));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_checkpoint(bytes);
  } catch (const FormatError& e) {
    throw FormatError(e.kind(), path.string() + ": " + e.what());
  }
}

void apply_checkpoint(Thlnet& model, const Checkpoint& ckpt) {
  const auto& entries = model.registry().entries();
  std::set<std::string> seen;
  for (const auto& t : ckpt.tensors) {
    if (!seen.insert(t.name).second) {
      throw FormatError(Kind::kShapeMismatch, "checkpoint: tensor '" + t.name + "' appears twice");
    }
  }
  for (const auto& [name, v] : entries) {
    const NamedTensor* t = ckpt.find(name);
    if (!t) throw FormatError(Kind::kShapeMismatch, "checkpoint: missing tensor '" + name + "'");
    if (t->value.shape() != v.shape()) {
      throw FormatError(Kind::kShapeMismatch, "checkpoint: tensor '" + name + "' has shape " +
                                                  shape_str(t->value.shape()) + ", model expects " +
                                                  shape_str(v.shape()));
    }
  }
  if (ckpt.tensors.size() != entries.size()) {
    for (const auto& t : ckpt.tensors) {
      if (!model.registry().find(t.name)) {
        throw FormatError(Kind::kShapeMismatch, "checkpoint: tensor '" + t.name + "' is not a model parameter");
      }
    }
  }
  for (const auto& [name, v] : entries) {
    VarF handle = v;
    handle.mutable_value() = ckpt.find(name)->value;
  }
}

}  // namespace thl
