#include "rainmamba/nn.hpp"

#include <algorithm>
#include <numeric>

namespace rainmamba {

LayerNormParams LayerNormParams::identity(std::size_t channels) {
  return {std::vector<double>(channels, 1.0), std::vector<double>(channels, 0.0), 1e-5};
}

namespace {

// Normalizes values[0..n) with the given stride in place.
// The mean is accumulated relative to the first element so constant
// inputs give exactly zero deviations.
void normalize_strided(double* values, std::size_t n, std::size_t stride,
                       std::span<const double> gamma, std::span<const double> beta,
                       double eps) {
  const double pivot = values[0];
  double shifted = 0.0;
  for (std::size_t i = 0; i < n; ++i) shifted += values[i * stride] - pivot;
  const double mean = pivot + shifted / static_cast<double>(n);

  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = values[i * stride] - mean;
    var += d * d;
  }
  var /= static_cast<double>(n);

  if (var == 0.0) {
    for (std::size_t i = 0; i < n; ++i) values[i * stride] = beta[i];
    return;
  }
  const double inv = 1.0 / std::sqrt(var + eps);
  for (std::size_t i = 0; i < n; ++i) {
    const double normalized = (values[i * stride] - mean) * inv;
    values[i * stride] = normalized * gamma[i] + beta[i];
  }
}

}  // namespace

SequenceTensor layer_norm(const SequenceTensor& x, std::span<const double> gamma,
                          std::span<const double> beta, double eps) {
  require(gamma.size() == x.channels() && beta.size() == x.channels(), "dimension mismatch");
  require(eps > 0.0, "layer_norm requires eps > 0");
  SequenceTensor out = x;
  if (x.channels() == 0) return out;
  for (std::size_t l = 0; l < x.length(); ++l)
    normalize_strided(out.values().data() + l, x.channels(), x.length(), gamma, beta, eps);
  return out;
}

SequenceTensor layer_norm(const SequenceTensor& x, const LayerNormParams& p) {
  return layer_norm(x, p.gamma, p.beta, p.eps);
}

VideoTensor layer_norm(const VideoTensor& x, const LayerNormParams& p) {
  require(p.gamma.size() == x.channels() && p.beta.size() == x.channels(), "dimension mismatch");
  require(p.eps > 0.0, "layer_norm requires eps > 0");
  VideoTensor out = x;
  if (x.channels() == 0) return out;
  const std::size_t stride = x.voxels();
  for (std::size_t v = 0; v < stride; ++v)
    normalize_strided(out.values().data() + v, x.channels(), stride, p.gamma, p.beta, p.eps);
  return out;
}

VideoTensor depthwise_conv3d(const VideoTensor& x, std::span<const double> kernels,
                             std::span<const double> bias) {
  const std::size_t C = x.channels();
  require(kernels.size() == C * 27, "depthwise_conv3d: kernel count must equal channels");
  require(bias.size() == C, "depthwise_conv3d: bias count must equal channels");
  const auto T = static_cast<std::ptrdiff_t>(x.time());
  const auto H = static_cast<std::ptrdiff_t>(x.height());
  const auto W = static_cast<std::ptrdiff_t>(x.width());

  VideoTensor out(C, x.time(), x.height(), x.width());
  for (std::size_t c = 0; c < C; ++c) {
    const double* k = kernels.data() + c * 27;
    for (std::ptrdiff_t t = 0; t < T; ++t)
      for (std::ptrdiff_t y = 0; y < H; ++y)
        for (std::ptrdiff_t xx = 0; xx < W; ++xx) {
          double acc = 0.0;
          for (std::ptrdiff_t dt = -1; dt <= 1; ++dt) {
            const std::ptrdiff_t tt = t + dt;
            if (tt < 0 || tt >= T) continue;
            for (std::ptrdiff_t dy = -1; dy <= 1; ++dy) {
              const std::ptrdiff_t yy = y + dy;
              if (yy < 0 || yy >= H) continue;
              for (std::ptrdiff_t dx = -1; dx <= 1; ++dx) {
                const std::ptrdiff_t xs = xx + dx;
                if (xs < 0 || xs >= W) continue;
                acc += k[(dt + 1) * 9 + (dy + 1) * 3 + (dx + 1)] *
                       x(c, static_cast<std::size_t>(tt), static_cast<std::size_t>(yy),
                         static_cast<std::size_t>(xs));
              }
            }
          }
          out(c, static_cast<std::size_t>(t), static_cast<std::size_t>(y),
              static_cast<std::size_t>(xx)) = acc + bias[c];
        }
  }
  return out;
}

VideoTensor resample(const VideoTensor& x, ResampleFactor factor) {
  const std::size_t C = x.channels(), T = x.time(), H = x.height(), W = x.width();
  if (factor == ResampleFactor::Down2) {
    require(H % 2 == 0 && W % 2 == 0, "resample down2 requires even height and width");
    VideoTensor out(C, T, H / 2, W / 2);
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t y = 0; y < H / 2; ++y)
          for (std::size_t xx = 0; xx < W / 2; ++xx) {
            const double s = x(c, t, 2 * y, 2 * xx) + x(c, t, 2 * y, 2 * xx + 1) +
                             x(c, t, 2 * y + 1, 2 * xx) + x(c, t, 2 * y + 1, 2 * xx + 1);
            out(c, t, y, xx) = 0.25 * s;
          }
    return out;
  }
  VideoTensor out(C, T, H * 2, W * 2);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t y = 0; y < 2 * H; ++y)
        for (std::size_t xx = 0; xx < 2 * W; ++xx) out(c, t, y, xx) = x(c, t, y / 2, xx / 2);
  return out;
}

std::vector<double> init_params(std::size_t count, Rng& rng, double scale) {
  require(scale >= 0.0, "init_params requires scale >= 0");
  std::vector<double> out(count);
  for (double& v : out) v = scale == 0.0 ? 0.0 : rng.uniform(-scale, scale);
  return out;
}

std::vector<double> init_params(std::span<const std::size_t> shape, Rng& rng, double scale) {
  const std::size_t count =
      std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  return init_params(count, rng, scale);
}

VideoTensor conv2d_3x3(const VideoTensor& x, const Conv2dParams& p) {
  require(x.channels() == p.in_channels, "conv2d: dimension mismatch");
  require(p.weights.size() == p.out_channels * p.in_channels * 9 &&
              p.bias.size() == p.out_channels,
          "conv2d: parameter size mismatch");
  require(p.stride == 1 || p.stride == 2, "conv2d: stride must be 1 or 2");
  const auto H = static_cast<std::ptrdiff_t>(x.height());
  const auto W = static_cast<std::ptrdiff_t>(x.width());
  const std::size_t Ho = (x.height() + p.stride - 1) / p.stride;
  const std::size_t Wo = (x.width() + p.stride - 1) / p.stride;
  const auto s = static_cast<std::ptrdiff_t>(p.stride);

  VideoTensor out(p.out_channels, x.time(), Ho, Wo);
  for (std::size_t o = 0; o < p.out_channels; ++o)
    for (std::size_t t = 0; t < x.time(); ++t)
      for (std::size_t y = 0; y < Ho; ++y)
        for (std::size_t xx = 0; xx < Wo; ++xx) {
          double acc = p.bias[o];
          const std::ptrdiff_t cy = static_cast<std::ptrdiff_t>(y) * s;
          const std::ptrdiff_t cx = static_cast<std::ptrdiff_t>(xx) * s;
          for (std::size_t i = 0; i < p.in_channels; ++i) {
            const double* k = p.weights.data() + (o * p.in_channels + i) * 9;
            for (std::ptrdiff_t dy = -1; dy <= 1; ++dy) {
              const std::ptrdiff_t yy = cy + dy;
              if (yy < 0 || yy >= H) continue;
              for (std::ptrdiff_t dx = -1; dx <= 1; ++dx) {
                const std::ptrdiff_t xs = cx + dx;
                if (xs < 0 || xs >= W) continue;
                acc += k[(dy + 1) * 3 + (dx + 1)] *
                       x(i, t, static_cast<std::size_t>(yy), static_cast<std::size_t>(xs));
              }
            }
          }
          out(o, t, y, xx) = acc;
        }
  return out;
}

VideoTensor pointwise(const VideoTensor& x, const PointwiseParams& p) {
  require(x.channels() == p.in_channels, "pointwise: dimension mismatch");
  require(p.weights.size() == p.out_channels * p.in_channels &&
              p.bias.size() == p.out_channels,
          "pointwise: parameter size mismatch");
  const std::size_t V = x.voxels();
  VideoTensor out(p.out_channels, x.time(), x.height(), x.width());
  for (std::size_t o = 0; o < p.out_channels; ++o) {
    double* dst = out.values().data() + o * V;
    std::fill(dst, dst + V, p.bias[o]);
    for (std::size_t i = 0; i < p.in_channels; ++i) {
      const double w = p.weights[o * p.in_channels + i];
      const double* src = x.values().data() + i * V;
      for (std::size_t v = 0; v < V; ++v) dst[v] += w * src[v];
    }
  }
  return out;
}

VideoTensor add(const VideoTensor& a, const VideoTensor& b) {
  VideoTensor out = a;
  add_inplace(out, b);
  return out;
}

void add_inplace(VideoTensor& a, const VideoTensor& b) {
  require(a.same_shape(b), "dimension mismatch");
  auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) av[i] += bv[i];
}

VideoTensor subtract(const VideoTensor& a, const VideoTensor& b) {
  require(a.same_shape(b), "dimension mismatch");
  VideoTensor out = a;
  auto& ov = out.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] -= bv[i];
  return out;
}

}  // namespace rainmamba
