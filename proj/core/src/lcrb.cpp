#include "thlnet/lcrb.hpp"

#include "thlnet/error.hpp"

namespace thl {

Lcrb::Lcrb(nn::ParamRegistry& reg, const LcrbConfig& cfg, int bins) : bands_(cfg.bands) {
  if (cfg.bands <= 0 || bins % cfg.bands != 0) {
    throw ConfigError("lcrb: " + std::to_string(bins) + " bins cannot be split into " + std::to_string(cfg.bands) +
                      " equal bands");
  }
  group_ = bins / cfg.bands;
  merge_re_ = reg.add_constant("lcrb.merge.real", {bands_, group_, 1}, 1.0f / static_cast<float>(group_));
  merge_im_ = reg.add_constant("lcrb.merge.imag", {bands_, group_, 1}, 0.0f);
  split_re_ = reg.add_constant("lcrb.split.real", {bins, 1, 1}, 1.0f);
  split_im_ = reg.add_constant("lcrb.split.imag", {bins, 1, 1}, 0.0f);
}

// (Wr + i Wi)(xr + i xi) with each product a grouped conv1d over channels = frequency, length = time.
VarF Lcrb::project(const VarF& x, const VarF& wr, const VarF& wi, std::int64_t in_channels, const char* what) const {
  if (x.shape().size() != 3 || x.dim(0) != 2 || x.dim(1) != in_channels) {
    throw DimensionError(std::string(what) + ": expected [2x" + std::to_string(in_channels) + "xT], got " +
                         shape_str(x.shape()));
  }
  const std::int64_t t = x.dim(2);
  const VarF xr = ops::reshape(ops::slice(x, 0, 0, 1), {in_channels, t});
  const VarF xi = ops::reshape(ops::slice(x, 0, 1, 2), {in_channels, t});
  const VarF none;
  const VarF rr = ops::grouped_conv1d(xr, wr, none, bands_);
  const VarF ii = ops::grouped_conv1d(xi, wi, none, bands_);
  const VarF ri = ops::grouped_conv1d(xi, wr, none, bands_);
  const VarF ir = ops::grouped_conv1d(xr, wi, none, bands_);
  const std::int64_t out = rr.dim(0);
  return ops::concat<float>({ops::reshape(ops::sub(rr, ii), {1, out, t}), ops::reshape(ops::add(ri, ir), {1, out, t})},
                            0);
}

VarF Lcrb::merge(const VarF& x) const { return project(x, merge_re_, merge_im_, bins(), "lcrb merge"); }

VarF Lcrb::split(const VarF& m) const { return project(m, split_re_, split_im_, bands_, "lcrb split"); }

}  // namespace thl
