#include "thlnet/finenet.hpp"

#include "thlnet/error.hpp"

namespace thl {

namespace {

nn::Conv2d dilated(nn::ParamRegistry& reg, const std::string& name, const FineConfig& cfg, int dilation) {
  ops::Conv2dOptions opt;
  opt.pad_f = cfg.kernel_f / 2;
  opt.dilation_t = dilation;
  return nn::Conv2d(reg, name, cfg.feature_maps, cfg.feature_maps, cfg.kernel_f, cfg.kernel_t, opt);
}

}  // namespace

FineNet::FineNet(nn::ParamRegistry& reg, const FineConfig& cfg) : cfg_(cfg) {
  const int c = cfg.feature_maps;
  in_ = {nn::Conv2d(reg, "fine.in.conv", 4, c, 1, 1), nn::LayerNorm(reg, "fine.in.norm", c, 0),
         nn::PRelu(reg, "fine.in.act", c)};
  for (std::size_t i = 0; i < cfg.dilations.size(); ++i) {
    const std::string name = "fine.enc" + std::to_string(i);
    enc_.push_back({dilated(reg, name + ".conv", cfg, cfg.dilations[i]), nn::LayerNorm(reg, name + ".norm", c, 0),
                    nn::PRelu(reg, name + ".act", c)});
  }
  for (int b = 0; b < cfg.dp_blocks; ++b) {
    const std::string name = "fine.dp" + std::to_string(b);
    DualPathBlock blk;
    blk.attn = nn::MultiHeadAttention(reg, name + ".intra.attn", c, cfg.heads);
    blk.attn_norm = nn::LayerNorm(reg, name + ".intra.attn_norm", c, -1);
    blk.ffn_fwd = nn::Gru(reg, name + ".intra.ffn.fwd", c, cfg.ffn_hidden, false);
    blk.ffn_bwd = nn::Gru(reg, name + ".intra.ffn.bwd", c, cfg.ffn_hidden, true);
    blk.ffn_proj = nn::Linear(reg, name + ".intra.ffn.proj", 2 * cfg.ffn_hidden, c);
    blk.ffn_norm = nn::LayerNorm(reg, name + ".intra.ffn_norm", c, -1);
    blk.inter = nn::Gru(reg, name + ".inter.rnn", c, c, false);
    blk.inter_proj = nn::Linear(reg, name + ".inter.proj", c, c);
    blk.inter_norm = nn::LayerNorm(reg, name + ".inter.norm", c, -1);
    dp_.push_back(std::move(blk));
  }
  for (std::size_t i = cfg.dilations.size(); i-- > 0;) {
    const std::string name = "fine.dec" + std::to_string(i);
    dec_.push_back({dilated(reg, name + ".conv", cfg, cfg.dilations[i]), nn::LayerNorm(reg, name + ".norm", c, 0),
                    nn::PRelu(reg, name + ".act", c)});
  }
  out_ = nn::Conv2d(reg, "fine.out", c, 2, 1, 1);
}

VarF FineNet::conv_layer(const ConvLayer& l, const VarF& x, TensorF* history) const {
  VarF y = l.act(l.norm(l.conv(x, history)));
  trace(y);
  return y;
}

VarF FineNet::dual_path(const DualPathBlock& b, const VarF& x, nn::RecurrentState* inter_state) const {
  // Intra: frames are the batch, frequency is the sequence. Attention here is unmasked.
  const VarF tqc = ops::permute(x, {2, 1, 0});
  const VarF a = b.attn_norm(ops::add(tqc, b.attn(tqc)));
  const VarF both = ops::concat<float>({b.ffn_fwd(a), b.ffn_bwd(a)}, 2);
  const VarF f = b.ffn_norm(ops::add(a, b.ffn_proj(ops::relu(both))));
  trace(f);
  // Inter: frequency positions are the batch, time is the sequence (causal GRU only).
  const VarF qtc = ops::permute(f, {1, 0, 2});
  const VarF g = b.inter_norm(ops::add(qtc, b.inter_proj(b.inter(qtc, inter_state))));
  trace(g);
  return ops::permute(g, {2, 0, 1});
}

VarF FineNet::operator()(const VarF& x_low, const VarF& s_c_low, FineStreamState* state) const {
  const Shape want{2, cfg_.low_bins, x_low.shape().size() == 3 ? x_low.dim(2) : 0};
  if (x_low.shape() != want || s_c_low.shape() != want) {
    throw DimensionError("finenet: expected two [2x" + std::to_string(cfg_.low_bins) + "xT] inputs, got " +
                         shape_str(x_low.shape()) + " and " + shape_str(s_c_low.shape()));
  }
  VarF h = conv_layer(in_, ops::concat<float>({x_low, s_c_low}, 0), nullptr);
  for (std::size_t i = 0; i < enc_.size(); ++i) h = conv_layer(enc_[i], h, state ? &state->enc_history[i] : nullptr);
  for (std::size_t b = 0; b < dp_.size(); ++b) h = dual_path(dp_[b], h, state ? &state->inter[b] : nullptr);
  for (std::size_t i = 0; i < dec_.size(); ++i) h = conv_layer(dec_[i], h, state ? &state->dec_history[i] : nullptr);
  VarF m = out_(h);
  trace(m);
  return m;
}

FineStreamState FineNet::initial_state() const {
  FineStreamState s;
  for (const auto& l : enc_) s.enc_history.push_back(l.conv.initial_history(cfg_.low_bins));
  for (const auto& l : dec_) s.dec_history.push_back(l.conv.initial_history(cfg_.low_bins));
  for (const auto& b : dp_) s.inter.push_back(b.inter.initial_state(cfg_.low_bins));
  return s;
}

}  // namespace thl
