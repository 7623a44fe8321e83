#include "rainmamba/losses.hpp"

#include <algorithm>
#include <cmath>

namespace rainmamba::losses {

std::size_t FeatureExtractor::stage_index(int id) const {
  const auto ids = stage_ids();
  const auto it = std::find(ids.begin(), ids.end(), id);
  require(it != ids.end(), "feature extractor has no stage " + std::to_string(id));
  return static_cast<std::size_t>(it - ids.begin());
}

std::vector<VideoTensor> IdentityExtractor::extract(const VideoTensor& image) const {
  return std::vector<VideoTensor>(ids_.size(), image);
}

RandomConvExtractor::RandomConvExtractor(std::size_t in_channels, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t widths[] = {8, 16, 32};
  const std::size_t strides[] = {1, 2, 2};
  std::size_t in = in_channels;
  for (int i = 0; i < 3; ++i) {
    Conv2dParams c{in, widths[i], strides[i], {}, {}};
    c.weights = init_params(widths[i] * in * 9, rng, 1.0 / std::sqrt(static_cast<double>(in * 9)));
    c.bias = init_params(widths[i], rng, 0.05);
    layers_.push_back(std::move(c));
    in = widths[i];
  }
}

std::vector<VideoTensor> RandomConvExtractor::extract(const VideoTensor& image) const {
  std::vector<VideoTensor> out;
  VideoTensor h = image;
  for (const auto& layer : layers_) {
    h = map(conv2d_3x3(h, layer), relu);
    out.push_back(h);
  }
  return out;
}

double charbonnier(const VideoTensor& pred, const VideoTensor& gt, double eps) {
  require(pred.same_shape(gt), "charbonnier: dimension mismatch");
  require(eps > 0.0, "charbonnier: eps must be > 0");
  require(pred.size() > 0, "charbonnier: empty input");
  double acc = 0.0;
  const double eps2 = eps * eps;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = pred.values()[i] - gt.values()[i];
    acc += std::sqrt(r * r + eps2);
  }
  return acc / static_cast<double>(pred.size());
}

double mse(const VideoTensor& a, const VideoTensor& b) {
  require(a.same_shape(b), "mse: dimension mismatch");
  require(a.size() > 0, "mse: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double r = a.values()[i] - b.values()[i];
    acc += r * r;
  }
  return acc / static_cast<double>(a.size());
}

double mae(const VideoTensor& a, const VideoTensor& b) {
  require(a.same_shape(b), "mae: dimension mismatch");
  require(a.size() > 0, "mae: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a.values()[i] - b.values()[i]);
  return acc / static_cast<double>(a.size());
}

double perceptual(const VideoTensor& pred, const VideoTensor& gt,
                  const FeatureExtractor& extractor, const std::vector<int>& stages) {
  require(pred.same_shape(gt), "perceptual: dimension mismatch");
  std::vector<std::size_t> idx;
  for (int id : stages) idx.push_back(extractor.stage_index(id));
  const auto fp = extractor.extract(pred);
  const auto fg = extractor.extract(gt);
  double acc = 0.0;
  for (std::size_t i : idx) acc += mse(fp[i], fg[i]);
  return acc;
}

double total_loss(double pixel, double perceptual_term, double dcl, const LossWeights& w) {
  require(std::isfinite(pixel) && std::isfinite(perceptual_term) && std::isfinite(dcl),
          "total_loss: components must be finite");
  return pixel + w.lambda1 * perceptual_term + w.lambda2 * dcl;
}

double total_loss(const VideoTensor& pred, const VideoTensor& gt,
                  const FeatureExtractor& extractor, double dcl, const LossWeights& w) {
  return total_loss(charbonnier(pred, gt), perceptual(pred, gt, extractor), dcl, w);
}

}  // namespace rainmamba::losses
