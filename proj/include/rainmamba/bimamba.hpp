#pragma once

#include <cstddef>
#include <vector>

#include "rainmamba/rng.hpp"
#include "rainmamba/ssm.hpp"
#include "rainmamba/tensor.hpp"

namespace rainmamba::ssm {

struct MambaLayerShape {
  std::size_t model_channels = 0;
  std::size_t expand = 2;
  std::size_t state = 16;
  std::size_t conv_width = 4;

  std::size_t inner() const { return expand * model_channels; }
};

/// One scan direction: causal depthwise conv1d -> SiLU -> selective scan + D skip.
struct ScanBranch {
  std::vector<double> conv_w;  // inner x conv_width, tap conv_width-1 is the current token
  std::vector<double> conv_b;  // inner
  SelectiveParams scan;
  std::vector<double> d_skip;  // inner

  template <typename F>
  void for_each_param(F&& f) {
    f(conv_w), f(conv_b), f(d_skip);
    scan.for_each_param(f);
  }
};

/// Bidirectional Mamba layer over a (C, L) sequence:
///   [u; z] = W_in x
///   y = W_out ((fwd(u) + reverse(bwd(reverse(u)))) * silu(z))
struct MambaLayerConfig {
  MambaLayerShape shape;
  std::vector<double> in_proj;   // 2*inner x C
  ScanBranch forward;
  ScanBranch backward;
  std::vector<double> out_proj;  // C x inner

  void validate() const;
  static MambaLayerConfig random(const MambaLayerShape& shape, Rng& rng);
  static MambaLayerConfig zeros(const MambaLayerShape& shape);

  template <typename F>
  void for_each_param(F&& f) {
    f(in_proj);
    forward.for_each_param(f);
    backward.for_each_param(f);
    f(out_proj);
  }
};

SequenceTensor scan_branch(const ScanBranch& branch, std::size_t conv_width,
                           const SequenceTensor& u);

SequenceTensor bimamba_layer(const SequenceTensor& x, const MambaLayerConfig& cfg);

}  // namespace rainmamba::ssm
