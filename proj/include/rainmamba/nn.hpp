#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "rainmamba/rng.hpp"
#include "rainmamba/tensor.hpp"

namespace rainmamba {

inline double silu(double v) { return v / (1.0 + std::exp(-v)); }
inline double relu(double v) { return v > 0.0 ? v : 0.0; }

/// log(1 + e^v) without overflow for large v.
inline double softplus(double v) {
  if (v > 20.0) return v + std::log1p(std::exp(-v));
  return std::log1p(std::exp(v));
}

/// Inverse of softplus for v > 0.
inline double softplus_inverse(double v) { return v + std::log(-std::expm1(-v)); }

struct LayerNormParams {
  std::vector<double> gamma;
  std::vector<double> beta;
  double eps = 1e-5;

  static LayerNormParams identity(std::size_t channels);
};

/// Normalizes each token across channels. A token with zero variance maps to beta.
SequenceTensor layer_norm(const SequenceTensor& x, std::span<const double> gamma,
                          std::span<const double> beta, double eps = 1e-5);
SequenceTensor layer_norm(const SequenceTensor& x, const LayerNormParams& p);

/// Per-voxel layer norm across channels of a video volume.
VideoTensor layer_norm(const VideoTensor& x, const LayerNormParams& p);

/// 3x3x3 depthwise convolution with zero "same" padding.
/// kernels is laid out [C][dt][dy][dx] (27 taps per channel).
VideoTensor depthwise_conv3d(const VideoTensor& x, std::span<const double> kernels,
                             std::span<const double> bias);

struct DepthwiseConv3dParams {
  std::vector<double> kernels;  // C*27
  std::vector<double> bias;     // C
};

inline VideoTensor depthwise_conv3d(const VideoTensor& x, const DepthwiseConv3dParams& p) {
  return depthwise_conv3d(x, p.kernels, p.bias);
}

enum class ResampleFactor { Down2, Up2 };

/// Spatial 2x2 average pooling (Down2) or nearest-neighbour replication (Up2).
VideoTensor resample(const VideoTensor& x, ResampleFactor factor);
inline VideoTensor down2(const VideoTensor& x) { return resample(x, ResampleFactor::Down2); }
inline VideoTensor up2(const VideoTensor& x) { return resample(x, ResampleFactor::Up2); }

/// count values drawn uniformly from [-scale, scale].
std::vector<double> init_params(std::size_t count, Rng& rng, double scale);
std::vector<double> init_params(std::span<const std::size_t> shape, Rng& rng, double scale);

/// Dense 3x3 frame-wise convolution with full channel mixing, zero padding 1.
/// weights are [Cout][Cin][3][3].
struct Conv2dParams {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t stride = 1;
  std::vector<double> weights;
  std::vector<double> bias;
};

VideoTensor conv2d_3x3(const VideoTensor& x, const Conv2dParams& p);

/// 1x1x1 channel mixing: out[o] = sum_i W[o][i] * x[i] + b[o].
struct PointwiseParams {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::vector<double> weights;
  std::vector<double> bias;
};

VideoTensor pointwise(const VideoTensor& x, const PointwiseParams& p);

VideoTensor add(const VideoTensor& a, const VideoTensor& b);
VideoTensor subtract(const VideoTensor& a, const VideoTensor& b);
void add_inplace(VideoTensor& a, const VideoTensor& b);

template <typename F>
VideoTensor map(const VideoTensor& x, F&& f) {
  VideoTensor out = x;
  for (double& v : out.values()) v = f(v);
  return out;
}

}  // namespace rainmamba
