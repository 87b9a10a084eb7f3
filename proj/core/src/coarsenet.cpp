#include "thlnet/coarsenet.hpp"

#include "thlnet/error.hpp"

namespace thl {

CoarseNet::CoarseNet(nn::ParamRegistry& reg, const CoarseConfig& cfg, int bands) : cfg_(cfg) {
  const std::size_t n = cfg.enc_channels.size();
  freq_.push_back(bands);
  int cin = 2;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string name = "coarse.enc" + std::to_string(i);
    ops::Conv2dOptions opt;
    opt.stride_f = cfg.strides[i][0];
    opt.stride_t = cfg.strides[i][1];
    opt.pad_f = cfg.freq_paddings[i];
    const int cout = cfg.enc_channels[i];
    enc_.push_back({nn::Conv2d(reg, name + ".conv", cin, cout, cfg.kernels[i][0], cfg.kernels[i][1], opt),
                    nn::LayerNorm(reg, name + ".norm", cout, 0), nn::PRelu(reg, name + ".act", cout)});
    const int f = freq_.back();
    freq_.push_back((f + 2 * opt.pad_f - cfg.kernels[i][0]) / opt.stride_f + 1);
    cin = cout;
  }

  const int c = cfg.enc_channels.back();
  const int h = cfg.dp_hidden;
  for (int b = 0; b < cfg.dp_blocks; ++b) {
    const std::string name = "coarse.dp" + std::to_string(b);
    DualPathBlock blk;
    blk.intra_fwd = nn::Lstm(reg, name + ".intra.fwd", c, h / 2, false);
    blk.intra_bwd = nn::Lstm(reg, name + ".intra.bwd", c, h / 2, true);
    blk.intra_proj = nn::Linear(reg, name + ".intra.proj", h, c);
    blk.intra_norm = nn::LayerNorm(reg, name + ".intra.norm", c, -1);
    blk.inter = nn::Lstm(reg, name + ".inter.rnn", c, h, false);
    blk.inter_proj = nn::Linear(reg, name + ".inter.proj", h, c);
    blk.inter_norm = nn::LayerNorm(reg, name + ".inter.norm", c, -1);
    dp_.push_back(std::move(blk));
  }

  // Decoder registered deepest-first, the order the data flows through it.
  dec_.resize(n);
  int below = c;
  for (std::size_t j = n; j-- > 0;) {
    const std::string name = "coarse.dec" + std::to_string(j);
    ops::ConvTranspose2dOptions opt;
    opt.stride_f = cfg.strides[j][0];
    opt.pad_f = cfg.freq_paddings[j];
    const int back = (freq_[j + 1] - 1) * opt.stride_f - 2 * opt.pad_f + cfg.kernels[j][0];
    opt.output_pad_f = freq_[j] - back;
    const int skip = cfg.enc_channels[j];
    const int cout = j == 0 ? cfg.enc_channels[0] : cfg.enc_channels[j - 1];
    dec_[j] = {nn::ConvTranspose2d(reg, name + ".conv", skip + below, cout, cfg.kernels[j][0], cfg.kernels[j][1], opt),
               nn::LayerNorm(reg, name + ".norm", cout, 0), nn::PRelu(reg, name + ".act", cout)};
    below = cout;
  }
  out_ = nn::Conv2d(reg, "coarse.out", below, 2, 1, 1);
}

VarF CoarseNet::dual_path(const DualPathBlock& b, const VarF& x, nn::RecurrentState* inter_state) const {
  // x [C, F, T]. Intra: sequences run over frequency, one per frame.
  const VarF tfc = ops::permute(x, {2, 1, 0});
  const VarF both = ops::concat<float>({b.intra_fwd(tfc), b.intra_bwd(tfc)}, 2);
  const VarF intra = ops::add(tfc, b.intra_norm(b.intra_proj(both)));
  // Inter: sequences run over time, one per frequency position.
  const VarF ftc = ops::permute(intra, {1, 0, 2});
  const VarF inter = ops::add(ftc, b.inter_norm(b.inter_proj(b.inter(ftc, inter_state))));
  return ops::permute(inter, {2, 0, 1});
}

VarF CoarseNet::operator()(const VarF& x, CoarseStreamState* state) const {
  if (x.shape().size() != 3 || x.dim(0) != 2 || x.dim(1) != freq_.front()) {
    throw DimensionError("coarsenet: expected [2x" + std::to_string(freq_.front()) + "xT] input, got " +
                         shape_str(x.shape()));
  }
  std::vector<VarF> skips;
  VarF h = x;
  for (std::size_t i = 0; i < enc_.size(); ++i) {
    const auto& l = enc_[i];
    h = l.act(l.norm(l.conv(h, state ? &state->enc_history[i] : nullptr)));
    skips.push_back(h);
  }
  for (std::size_t b = 0; b < dp_.size(); ++b) h = dual_path(dp_[b], h, state ? &state->inter[b] : nullptr);
  for (std::size_t j = dec_.size(); j-- > 0;) {
    const auto& l = dec_[j];
    h = ops::concat<float>({skips[j], h}, 0);
    h = l.act(l.norm(l.conv(h, state ? &state->dec_history[j] : nullptr)));
  }
  return out_(h);
}

CoarseStreamState CoarseNet::initial_state() const {
  CoarseStreamState s;
  for (std::size_t i = 0; i < enc_.size(); ++i) s.enc_history.push_back(enc_[i].conv.initial_history(freq_[i]));
  for (std::size_t j = 0; j < dec_.size(); ++j) s.dec_history.push_back(dec_[j].conv.initial_history(freq_[j + 1]));
  for (const auto& b : dp_) s.inter.push_back(b.inter.initial_state(freq_.back()));
  return s;
}

}  // namespace thl
