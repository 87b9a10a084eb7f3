#include "thlnet/profiler.hpp"

#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "thlnet/model.hpp"

namespace thl {

namespace {

using I = std::int64_t;

struct Builder {
  ProfileReport r;

  void add(std::string name, I params, I macs) {
    r.layers.push_back({std::move(name), params, macs, static_cast<double>(macs) * kFramesPerSecond});
  }
};

// Conv with bias, followed by a channel LayerNorm and PReLU.
I conv_block_params(I cin, I cout, I kf, I kt) { return conv2d_params(cin, cout, kf, kt) + 2 * cout + cout; }

I lstm_params(I din, I h) { return 4 * h * din + 4 * h * h + 4 * h; }
I lstm_macs(I din, I h) { return 4 * h * din + 4 * h * h; }
I gru_params(I din, I h) { return 3 * h * din + 3 * h * h + 6 * h; }
I gru_macs(I din, I h) { return 3 * h * din + 3 * h * h; }
I linear_params(I din, I dout) { return dout * din + dout; }

void profile_coarse(Builder& b, const ModelConfig& cfg) {
  const auto& k = cfg.coarse;
  const I bins = kBins;
  const I p = cfg.lcrb.bands;
  b.add("lcrb.merge", 2 * bins, 4 * bins);
  std::vector<I> f{p};
  I cin = 2;
  for (std::size_t i = 0; i < k.enc_channels.size(); ++i) {
    const I cout = k.enc_channels[i];
    const I kf = k.kernels[i][0], kt = k.kernels[i][1];
    const I fo = (f.back() + 2 * k.freq_paddings[i] - kf) / k.strides[i][0] + 1;
    b.add("coarse.enc" + std::to_string(i), conv_block_params(cin, cout, kf, kt), conv2d_macs_per_frame(cin, cout, kf, kt, fo));
    f.push_back(fo);
    cin = cout;
  }
  const I c = k.enc_channels.back();
  const I h = k.dp_hidden;
  const I fb = f.back();
  for (int blk = 0; blk < k.dp_blocks; ++blk) {
    const std::string name = "coarse.dp" + std::to_string(blk);
    b.add(name + ".intra", 2 * lstm_params(c, h / 2) + linear_params(h, c) + 2 * c,
          fb * (2 * lstm_macs(c, h / 2) + h * c));
    b.add(name + ".inter", lstm_params(c, h) + linear_params(h, c) + 2 * c, fb * (lstm_macs(c, h) + h * c));
  }
  I below = c;
  for (std::size_t j = k.enc_channels.size(); j-- > 0;) {
    const I skip = k.enc_channels[j];
    const I cout = j == 0 ? k.enc_channels[0] : k.enc_channels[j - 1];
    const I kf = k.kernels[j][0], kt = k.kernels[j][1];
    const I ci = skip + below;
    b.add("coarse.dec" + std::to_string(j), conv_block_params(ci, cout, kf, kt), conv2d_macs_per_frame(ci, cout, kf, kt, f[j + 1]));
    below = cout;
  }
  b.add("coarse.out", conv2d_params(below, 2, 1, 1), conv2d_macs_per_frame(below, 2, 1, 1, p));
  b.add("lcrb.split", 2 * bins, 4 * bins);
}

void profile_fine(Builder& b, const ModelConfig& cfg) {
  const auto& q = cfg.fine;
  const I c = q.feature_maps;
  const I l = q.low_bins;
  const I hf = q.ffn_hidden;
  b.add("fine.in", conv_block_params(4, c, 1, 1), conv2d_macs_per_frame(4, c, 1, 1, l));
  for (std::size_t i = 0; i < q.dilations.size(); ++i) {
    b.add("fine.enc" + std::to_string(i), conv_block_params(c, c, q.kernel_f, q.kernel_t),
          conv2d_macs_per_frame(c, c, q.kernel_f, q.kernel_t, l));
  }
  for (int blk = 0; blk < q.dp_blocks; ++blk) {
    const std::string name = "fine.dp" + std::to_string(blk);
    const I attn_params = 4 * linear_params(c, c) + 2 * c;
    const I attn_macs = 4 * l * c * c + 2 * l * l * c;
    const I ffn_params = 2 * gru_params(c, hf) + linear_params(2 * hf, c) + 2 * c;
    const I ffn_macs = l * (2 * gru_macs(c, hf) + 2 * hf * c);
    b.add(name + ".intra", attn_params + ffn_params, attn_macs + ffn_macs);
    b.add(name + ".inter", gru_params(c, c) + linear_params(c, c) + 2 * c, l * (gru_macs(c, c) + c * c));
  }
  for (std::size_t i = q.dilations.size(); i-- > 0;) {
    b.add("fine.dec" + std::to_string(i), conv_block_params(c, c, q.kernel_f, q.kernel_t),
          conv2d_macs_per_frame(c, c, q.kernel_f, q.kernel_t, l));
  }
  b.add("fine.out", conv2d_params(c, 2, 1, 1), conv2d_macs_per_frame(c, 2, 1, 1, l));
}

}  // namespace

std::int64_t conv2d_params(I cin, I cout, I kf, I kt, bool bias) { return cout * cin * kf * kt + (bias ? cout : 0); }

std::int64_t conv2d_macs_per_frame(I cin, I cout, I kf, I kt, I f_out, I groups) {
  return cout * (cin / groups) * kf * kt * f_out;
}

std::int64_t ProfileReport::params_under(const std::string& prefix) const {
  I n = 0;
  for (const auto& l : layers) {
    if (l.name.rfind(prefix, 0) == 0) n += l.params;
  }
  return n;
}

double ProfileReport::macs_per_second_under(const std::string& prefix) const {
  double n = 0.0;
  for (const auto& l : layers) {
    if (l.name.rfind(prefix, 0) == 0) n += l.macs_per_second;
  }
  return n;
}

ProfileReport profile_model(const ModelConfig& cfg) {
  cfg.validate();
  Builder b;
  if (cfg.coarse.enabled) profile_coarse(b, cfg);
  if (cfg.fine.enabled) profile_fine(b, cfg);
  I macs = 0;
  for (const auto& l : b.r.layers) {
    b.r.total_params += l.params;
    macs += l.macs_per_frame;
  }
  b.r.total_macs_per_second = static_cast<double>(macs) * kFramesPerSecond;
  return b.r;
}

std::int64_t count_params(const Thlnet& model) {
  I n = 0;
  for (const auto& [name, v] : model.registry().entries()) {
    I e = 1;
    for (auto d : v.shape()) e *= d;
    n += e;
  }
  return n;
}

double count_macs(const ModelConfig& cfg, double seconds) { return profile_model(cfg).total_macs_per_second * seconds; }

std::string report_json(const ProfileReport& r, int indent) {
  nlohmann::ordered_json j;
  j["convention"] = "1 MAC = 1 multiply-accumulate; per second of 16 kHz audio; norms/activations/softmax excluded";
  j["frames_per_second"] = r.frames_per_second;
  j["total_params"] = r.total_params;
  j["total_macs_per_second"] = r.total_macs_per_second;
  auto& rows = j["layers"] = nlohmann::ordered_json::array();
  for (const auto& l : r.layers) {
    rows.push_back({{"name", l.name},
                    {"params", l.params},
                    {"macs_per_frame", l.macs_per_frame},
                    {"macs_per_second", l.macs_per_second}});
  }
  return j.dump(indent);
}

std::string report_table(const ProfileReport& r) {
  std::ostringstream os;
  char line[128];
  os << "# MACs: 1 MAC = 1 multiply-accumulate, per second of audio at " << r.frames_per_second
     << " frames/s; norms, activations and softmax excluded\n";
  std::snprintf(line, sizeof line, "%-22s %12s %16s\n", "layer", "params", "MACs/s");
  os << line;
  for (const auto& l : r.layers) {
    std::snprintf(line, sizeof line, "%-22s %12lld %16.0f\n", l.name.c_str(), static_cast<long long>(l.params),
                  l.macs_per_second);
    os << line;
  }
  std::snprintf(line, sizeof line, "%-22s %12lld %16.0f\n", "total", static_cast<long long>(r.total_params),
                r.total_macs_per_second);
  os << line;
  std::snprintf(line, sizeof line, "%-22s %11.3fM %15.3fG\n", "total (scaled)", r.total_params / 1e6,
                r.total_macs_per_second / 1e9);
  os << line;
  return os.str();
}

}  // namespace thl
