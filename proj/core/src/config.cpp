#include "thlnet/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "thlnet/dsp.hpp"
#include "thlnet/error.hpp"

namespace thl {

using nlohmann::json;

namespace {

// Strict reader over one JSON object: every key must be consumed, types are checked.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  ~ObjectReader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(field(key) + ": unknown key");
    }
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(field(key) + ": " + e.what());
    }
  }

  template <typename F>
  void object(const char* key, F&& body) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    ObjectReader sub(*it, field(key));
    body(sub);
  }

 private:
  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_model(ObjectReader& r, ModelConfig& c) {
  r.read("version", c.version);
  r.read("attention_context", c.attention_context);
  r.object("lcrb", [&](ObjectReader& o) { o.read("bands", c.lcrb.bands); });
  r.object("coarse", [&](ObjectReader& o) {
    auto& k = c.coarse;
    o.read("enabled", k.enabled);
    o.read("enc_channels", k.enc_channels);
    o.read("kernels", k.kernels);
    o.read("strides", k.strides);
    o.read("freq_paddings", k.freq_paddings);
    o.read("dp_blocks", k.dp_blocks);
    o.read("dp_hidden", k.dp_hidden);
  });
  r.object("fine", [&](ObjectReader& o) {
    auto& f = c.fine;
    o.read("enabled", f.enabled);
    o.read("low_bins", f.low_bins);
    o.read("feature_maps", f.feature_maps);
    o.read("dp_blocks", f.dp_blocks);
    o.read("dilations", f.dilations);
    o.read("kernel_f", f.kernel_f);
    o.read("kernel_t", f.kernel_t);
    o.read("heads", f.heads);
    o.read("ffn_hidden", f.ffn_hidden);
  });
}

json model_to_json(const ModelConfig& c) {
  json j;
  j["version"] = c.version;
  j["attention_context"] = c.attention_context;
  j["lcrb"] = {{"bands", c.lcrb.bands}};
  const auto& k = c.coarse;
  j["coarse"] = {{"enabled", k.enabled},         {"enc_channels", k.enc_channels}, {"kernels", k.kernels},
                 {"strides", k.strides},         {"freq_paddings", k.freq_paddings}, {"dp_blocks", k.dp_blocks},
                 {"dp_hidden", k.dp_hidden}};
  const auto& f = c.fine;
  j["fine"] = {{"enabled", f.enabled},   {"low_bins", f.low_bins}, {"feature_maps", f.feature_maps},
               {"dp_blocks", f.dp_blocks}, {"dilations", f.dilations}, {"kernel_f", f.kernel_f},
               {"kernel_t", f.kernel_t}, {"heads", f.heads},       {"ffn_hidden", f.ffn_hidden}};
  return j;
}

json training_to_json(const TrainingConfig& t) {
  return {{"epochs", t.epochs},
          {"learning_rate", t.learning_rate},
          {"clip_norm", t.clip_norm},
          {"lr_decay", t.lr_decay},
          {"lr_decay_period", t.lr_decay_period},
          {"alpha", t.alpha},
          {"lambda", t.lambda},
          {"train_items", t.train_items},
          {"duration_s", t.duration_s},
          {"seed", t.seed}};
}

json parse_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config JSON parse error: ") + e.what());
  }
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

void ModelConfig::validate() const {
  require(version == kConfigVersion, "model.version: unsupported config version " + std::to_string(version));
  require(lcrb.bands > 0 && kBins % lcrb.bands == 0,
          "model.lcrb.bands: must divide " + std::to_string(kBins) + " bins, got " + std::to_string(lcrb.bands));
  require(attention_context >= 0, "model.attention_context: must be >= 0");
  if (fine.enabled) require(coarse.enabled, "model.fine.enabled: the second stage requires the first stage");
  if (coarse.enabled) {
    const auto& k = coarse;
    const std::size_t n = k.enc_channels.size();
    require(n > 0, "model.coarse.enc_channels: at least one encoder layer");
    require(k.kernels.size() == n && k.strides.size() == n && k.freq_paddings.size() == n,
            "model.coarse: enc_channels, kernels, strides and freq_paddings must have equal length");
    int f = lcrb.bands;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string at = "model.coarse[" + std::to_string(i) + "]";
      require(k.enc_channels[i] > 0, at + ".enc_channels: must be positive");
      require(k.kernels[i][0] > 0 && k.kernels[i][1] > 0, at + ".kernels: must be positive");
      require(k.strides[i][0] > 0, at + ".strides: frequency stride must be positive");
      require(k.strides[i][1] == 1, at + ".strides: time stride must be 1 for frame-synchronous streaming");
      require(k.freq_paddings[i] >= 0, at + ".freq_paddings: must be >= 0");
      const int span = f + 2 * k.freq_paddings[i] - k.kernels[i][0];
      require(span >= 0, at + ": kernel wider than padded frequency axis");
      const int fo = span / k.strides[i][0] + 1;
      const int back = (fo - 1) * k.strides[i][0] - 2 * k.freq_paddings[i] + k.kernels[i][0];
      require(f - back >= 0 && f - back < k.strides[i][0],
              at + ": frequency size " + std::to_string(f) + " cannot be restored by a transposed convolution");
      f = fo;
    }
    require(k.dp_blocks >= 0, "model.coarse.dp_blocks: must be >= 0");
    require(k.dp_hidden > 0 && k.dp_hidden % 2 == 0, "model.coarse.dp_hidden: must be a positive even number");
  }
  if (fine.enabled) {
    const auto& q = fine;
    require(q.low_bins > 0 && q.low_bins <= kBins, "model.fine.low_bins: must be in [1, 256]");
    require(q.feature_maps > 0, "model.fine.feature_maps: must be positive");
    require(q.dp_blocks >= 0, "model.fine.dp_blocks: must be >= 0");
    require(q.kernel_f > 0 && q.kernel_f % 2 == 1, "model.fine.kernel_f: must be odd so frequency size is kept");
    require(q.kernel_t > 0, "model.fine.kernel_t: must be positive");
    for (int d : q.dilations) require(d > 0, "model.fine.dilations: must be positive");
    require(q.heads > 0 && q.feature_maps % q.heads == 0, "model.fine.heads: must divide feature_maps");
    require(q.ffn_hidden > 0, "model.fine.ffn_hidden: must be positive");
  }
}

void TrainingConfig::validate() const {
  require(epochs >= 0, "training.epochs: must be >= 0");
  require(learning_rate > 0, "training.learning_rate: must be positive");
  require(clip_norm > 0, "training.clip_norm: must be positive");
  require(lr_decay > 0 && lr_decay <= 1, "training.lr_decay: must be in (0, 1]");
  require(lr_decay_period > 0, "training.lr_decay_period: must be positive");
  require(alpha >= 0 && alpha <= 1, "training.alpha: must be in [0, 1]");
  require(lambda >= 0, "training.lambda: must be >= 0");
  require(train_items > 0, "training.train_items: must be positive");
  require(duration_s * kSampleRate >= kFftSize, "training.duration_s: shorter than one analysis window");
}

ModelConfig reference_model_config() { return ModelConfig{}; }

ModelConfig coarse_only_config() {
  ModelConfig c;
  c.fine.enabled = false;
  return c;
}

ModelConfig tiny_model_config() {
  ModelConfig c;
  c.coarse.enc_channels = {16, 16, 16};
  c.coarse.dp_blocks = 1;
  c.coarse.dp_hidden = 16;
  c.fine.feature_maps = 16;
  c.fine.dp_blocks = 1;
  c.fine.heads = 2;
  c.fine.ffn_hidden = 16;
  return c;
}

std::string model_config_to_json(const ModelConfig& c, int indent) { return model_to_json(c).dump(indent); }

ModelConfig model_config_from_json(const std::string& text) {
  const json j = parse_text(text);
  ModelConfig c;
  {
    ObjectReader r(j, "model");
    read_model(r, c);
  }
  c.validate();
  return c;
}

std::string project_config_to_json(const ProjectConfig& c, int indent) {
  json j;
  j["version"] = kConfigVersion;
  j["model"] = model_to_json(c.model);
  j["training"] = training_to_json(c.training);
  return j.dump(indent);
}

ProjectConfig project_config_from_json(const std::string& text) {
  const json j = parse_text(text);
  ProjectConfig c;
  int version = kConfigVersion;
  {
    ObjectReader r(j, "");
    r.read("version", version);
    r.object("model", [&](ObjectReader& o) { read_model(o, c.model); });
    r.object("training", [&](ObjectReader& o) {
      auto& t = c.training;
      o.read("epochs", t.epochs);
      o.read("learning_rate", t.learning_rate);
      o.read("clip_norm", t.clip_norm);
      o.read("lr_decay", t.lr_decay);
      o.read("lr_decay_period", t.lr_decay_period);
      o.read("alpha", t.alpha);
      o.read("lambda", t.lambda);
      o.read("train_items", t.train_items);
      o.read("duration_s", t.duration_s);
      o.read("seed", t.seed);
    });
  }
  require(version == kConfigVersion, "version: unsupported config version " + std::to_string(version));
  c.model.validate();
  c.training.validate();
  return c;
}

ProjectConfig load_project_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return project_config_from_json(ss.str());
}

}  // namespace thl
