#pragma once

// Learnable complex rectangular-bandwidth filter bank. Merge compresses each band of G adjacent bins to one
// complex value; split expands one complex value per band back to G bins. Both are block-diagonal complex
// projections evaluated as grouped 1-D convolutions over the real and imaginary parts.

#include <string>

#include "thlnet/config.hpp"
#include "thlnet/nn.hpp"

namespace thl {

class Lcrb {
 public:
  Lcrb() = default;
  /// Registers lcrb.merge.{real,imag} [P, G, 1] and lcrb.split.{real,imag} [F, 1, 1].
  /// Init: merge averages (1/G + 0i), split replicates (1 + 0i).
  Lcrb(nn::ParamRegistry& reg, const LcrbConfig& cfg, int bins);

  /// [2, F, T] -> [2, P, T].
  VarF merge(const VarF& x) const;
  /// [2, P, T] -> [2, F, T].
  VarF split(const VarF& m) const;

  int bands() const noexcept { return bands_; }
  int group_size() const noexcept { return group_; }
  int bins() const noexcept { return bands_ * group_; }

 private:
  VarF project(const VarF& x, const VarF& wr, const VarF& wi, std::int64_t in_channels, const char* what) const;

  VarF merge_re_, merge_im_, split_re_, split_im_;
  int bands_ = 0;
  int group_ = 0;
};

}  // namespace thl
