#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "rainmamba/nn.hpp"
#include "rainmamba/tensor.hpp"

namespace rainmamba::losses {

/// Ordered feature stages over an image (or patch) volume.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  /// Stage identifiers in order, e.g. {3, 8, 15}.
  virtual std::vector<int> stage_ids() const = 0;
  /// Output of every stage, in stage order.
  virtual std::vector<VideoTensor> extract(const VideoTensor& image) const = 0;

  std::size_t stage_count() const { return stage_ids().size(); }
  /// Position of a stage id; throws if the extractor does not expose it.
  std::size_t stage_index(int id) const;
};

/// Every stage returns the input unchanged.
class IdentityExtractor final : public FeatureExtractor {
 public:
  explicit IdentityExtractor(std::vector<int> ids = {3, 8, 15}) : ids_(std::move(ids)) {}
  std::vector<int> stage_ids() const override { return ids_; }
  std::vector<VideoTensor> extract(const VideoTensor& image) const override;

 private:
  std::vector<int> ids_;
};

/// Seeded three-stage conv stack (3x3 convs, strides 1/2/2, ReLU) with stage ids 3, 8, 15.
/// Stand-in for a pretrained backbone; channel widths 8, 16, 32.
class RandomConvExtractor final : public FeatureExtractor {
 public:
  RandomConvExtractor(std::size_t in_channels, std::uint64_t seed);
  std::vector<int> stage_ids() const override { return {3, 8, 15}; }
  std::vector<VideoTensor> extract(const VideoTensor& image) const override;

  const std::vector<Conv2dParams>& layers() const { return layers_; }

 private:
  std::vector<Conv2dParams> layers_;
};

inline constexpr double kCharbonnierEps = 1e-3;

/// mean sqrt((pred - gt)^2 + eps^2)
double charbonnier(const VideoTensor& pred, const VideoTensor& gt, double eps = kCharbonnierEps);

double mse(const VideoTensor& a, const VideoTensor& b);
double mae(const VideoTensor& a, const VideoTensor& b);

/// Sum over the requested stages of the MSE between stage features.
double perceptual(const VideoTensor& pred, const VideoTensor& gt,
                  const FeatureExtractor& extractor, const std::vector<int>& stages = {3, 8, 15});

struct LossWeights {
  double lambda1 = 0.3;  // perceptual
  double lambda2 = 0.1;  // contrastive
};

/// pixel + λ1·perceptual + λ2·dcl
double total_loss(double pixel, double perceptual_term, double dcl, const LossWeights& w = {});
double total_loss(const VideoTensor& pred, const VideoTensor& gt,
                  const FeatureExtractor& extractor, double dcl, const LossWeights& w = {});

}  // namespace rainmamba::losses
