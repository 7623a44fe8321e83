#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rainmamba/bimamba.hpp"
#include "rainmamba/nn.hpp"
#include "rainmamba/sfc.hpp"
#include "rainmamba/tensor.hpp"

namespace rainmamba::blocks {

/// Parameters of one stacked Mamba block:
///   V = BM(LN1(V)) + V,  V = DWC(LN2(V)) + V
struct MambaBlockParams {
  LayerNormParams norm1;
  ssm::MambaLayerConfig mamba;
  LayerNormParams norm2;
  DepthwiseConv3dParams conv;

  static MambaBlockParams random(const ssm::MambaLayerShape& shape, Rng& rng);
  static MambaBlockParams zeros(const ssm::MambaLayerShape& shape);

  template <typename F>
  void for_each_param(F&& f) {
    f(norm1.gamma), f(norm1.beta);
    mamba.for_each_param(f);
    f(norm2.gamma), f(norm2.beta);
    f(conv.kernels), f(conv.bias);
  }
};

VideoTensor mamba_block(const VideoTensor& x, const sfc::ScanOrder& order,
                        const MambaBlockParams& params);

/// Global Mamba block: zigzag (row-major, spatially prioritized) flattening.
VideoTensor gmb(const VideoTensor& x, const MambaBlockParams& params);
/// Local Mamba block: 3D Hilbert flattening.
VideoTensor lmb(const VideoTensor& x, const MambaBlockParams& params,
                sfc::Direction direction = sfc::Direction::TimeFirst);

struct CfmConfig {
  std::size_t scales = 2;  // resolutions 1, 1/2, ..., 1/2^(scales-1)
  std::size_t n1 = 2;
  std::size_t n2 = 3;
  std::size_t n3 = 2;
  sfc::Direction direction = sfc::Direction::TimeFirst;
  bool use_gmb = true;
  bool use_lmb = true;
};

/// One coarse-to-fine module: a GMB and an LMB per scale (not shared).
struct CfmParams {
  std::vector<MambaBlockParams> global;
  std::vector<MambaBlockParams> local;

  static CfmParams random(const ssm::MambaLayerShape& shape, std::size_t scales, Rng& rng);
  static CfmParams zeros(const ssm::MambaLayerShape& shape, std::size_t scales);

  template <typename F>
  void for_each_param(F&& f) {
    for (auto& p : global) p.for_each_param(f);
    for (auto& p : local) p.for_each_param(f);
  }
};

/// Runs GMB then LMB at every scale and adds each scale's upsampled change to
/// the input: out = x + Σ_s up^s(LMB_s(GMB_s(down^s x)) - down^s x).
VideoTensor cfm(const VideoTensor& x, const CfmConfig& cfg, const CfmParams& params);

struct ModelConfig {
  std::size_t channels = 32;
  std::size_t expand = 2;
  std::size_t state = 16;
  CfmConfig cfm;

  ssm::MambaLayerShape layer_shape() const { return {channels, expand, state, 4}; }
  /// H and W of the input frames must be multiples of this.
  std::size_t spatial_multiple() const;
};

struct EncoderParams {
  Conv2dParams conv1;  // 3 -> C, stride 2
  Conv2dParams conv2;  // C -> C, stride 2
  Conv2dParams conv3;  // C -> C, stride 1

  template <typename F>
  void for_each_param(F&& f) {
    for (Conv2dParams* c : {&conv1, &conv2, &conv3}) f(c->weights), f(c->bias);
  }
};

struct DecoderParams {
  DepthwiseConv3dParams refine1;
  DepthwiseConv3dParams refine2;
  PointwiseParams to_rgb;  // C -> 3

  template <typename F>
  void for_each_param(F&& f) {
    f(refine1.kernels), f(refine1.bias), f(refine2.kernels), f(refine2.bias);
    f(to_rgb.weights), f(to_rgb.bias);
  }
};

struct RainMambaModel {
  ModelConfig config;
  EncoderParams encoder;
  std::vector<CfmParams> stage1;  // N1 at H/4
  std::vector<CfmParams> stage2;  // N2 at H/8
  std::vector<CfmParams> stage3;  // N3 at H/4
  DecoderParams decoder;

  static RainMambaModel random(const ModelConfig& cfg, std::uint64_t seed);
  /// Same shapes with every parameter set to zero.
  static RainMambaModel zeros(const ModelConfig& cfg);

  template <typename F>
  void for_each_param(F&& f) {
    encoder.for_each_param(f);
    for (auto& p : stage1) p.for_each_param(f);
    for (auto& p : stage2) p.for_each_param(f);
    for (auto& p : stage3) p.for_each_param(f);
    decoder.for_each_param(f);
  }
  std::size_t parameter_count();
};

/// Shallow features: C x T x H/4 x W/4.
VideoTensor encode(const VideoTensor& frames, const RainMambaModel& model);

/// N1 CFMs, then N2 CFMs at half resolution added back as a residual, then N3 CFMs.
VideoTensor feature_pipeline(const VideoTensor& features, const RainMambaModel& model);

/// Residual RGB reconstruction at full resolution.
VideoTensor decode(const VideoTensor& features, const RainMambaModel& model);

/// frames (3 x T x H x W) -> restored frames of the same shape.
VideoTensor model_forward(const VideoTensor& frames, const RainMambaModel& model);

}  // namespace rainmamba::blocks
