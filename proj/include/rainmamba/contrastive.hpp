#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rainmamba/losses.hpp"
#include "rainmamba/rng.hpp"
#include "rainmamba/tensor.hpp"

namespace rainmamba::contrastive {

/// Layers of a rainy clip. mask is binary and has 1 channel (broadcast) or
/// the same channel count as the other layers.
struct RainScene {
  VideoTensor background;
  VideoTensor streaks;
  VideoTensor drops;
  VideoTensor mask;

  void validate() const;
};

/// Seeded synthetic scene. Values are multiples of 1/256 so the compositing
/// arithmetic is exact in double precision.
RainScene synthetic_scene(std::size_t channels, std::size_t T, std::size_t H, std::size_t W,
                          Rng& rng);

/// (1 - M)(B + S) + M D
VideoTensor compose_rain(const RainScene& scene);

/// (1 - M) S + M D - M B, signed, per channel.
VideoTensor signed_difference(const RainScene& scene);

struct DifferenceMap {
  std::size_t t = 0, h = 0, w = 0;
  std::vector<double> omega;  // T x H x W, >= 0

  double operator()(std::size_t ti, std::size_t y, std::size_t x) const {
    return omega[(ti * h + y) * w + x];
  }
};

/// Channel-mean |signed_difference(scene)|.
DifferenceMap difference_map_layers(const RainScene& scene);
/// Channel-mean |rainy - clean|.
DifferenceMap difference_map(const VideoTensor& rainy, const VideoTensor& clean);

enum class Role { Anchor, Positive, Negative };
std::string to_string(Role r);

struct PatchSample {
  Role role = Role::Anchor;
  std::size_t t = 0, y = 0, x = 0;  // top-left corner
  std::size_t size = 0;
  VideoTensor payload;  // C x 1 x size x size
  double response = 0.0;                   // anchors only
  std::vector<std::string> augmentations;  // negatives only
};

VideoTensor crop(const VideoTensor& frames, std::size_t t, std::size_t y, std::size_t x,
                 std::size_t size);

/// Candidate patches on a stride grid; keeps those whose mean response is
/// strictly above the mean over all candidates. Payloads come from restored.
std::vector<PatchSample> select_anchors(const DifferenceMap& diff, const VideoTensor& restored,
                                        std::size_t patch_size, std::size_t stride);

struct ScheduleParams {
  double d0 = 64.0;
  double theta = 0.5;
  double d_min = 16.0;
  double p0 = 2.0;
  double p_max = 8.0;
  double m = 1000.0;

  void validate() const;
};

struct Distances {
  double d = 0.0;  // minimum negative distance
  double p = 0.0;  // positive sampling range
};

/// d = max(d0·θ^(e/m), d_min),  p = min(p0 + (e/m)(p_max - p0), p_max)
Distances schedule(double e, const ScheduleParams& params);

/// Chebyshev distance between two patch corners.
std::size_t chebyshev(const PatchSample& a, std::size_t y, std::size_t x);

/// Positive from a neighbouring frame (Δt ∈ {-1, 0, 1}, clamped) within
/// Chebyshev distance floor(p) of the anchor, uniformly over in-bounds offsets.
PatchSample sample_positive(const PatchSample& anchor, double p, const VideoTensor& frames,
                            Rng& rng);

struct Augmentations {
  bool rotate = true;  // one of 0/90/180/270 degrees
  bool hflip = true;
  bool vflip = true;
  bool blur = true;  // 3x3 box blur

  static Augmentations none() { return {false, false, false, false}; }
};

/// Negative from any frame at Chebyshev distance >= ceil(d) from the anchor,
/// uniformly over valid corners, then a seeded random subset of augmentations.
PatchSample sample_negative(const PatchSample& anchor, double d, const VideoTensor& frames,
                            Rng& rng, const Augmentations& augment = {});

VideoTensor rotate90(const VideoTensor& patch, int quarter_turns);
VideoTensor flip_horizontal(const VideoTensor& patch);
VideoTensor flip_vertical(const VideoTensor& patch);
VideoTensor box_blur3(const VideoTensor& patch);

inline constexpr double kDclGuard = 1e-8;

/// (1/S) Σ_s Σ_{r=1,2} L1(G_r(P_s), G_r(O_s)) / (L1(G_r(N_s), G_r(O_s)) + 1e-8)
double dcl_loss(const std::vector<PatchSample>& anchors, const std::vector<PatchSample>& positives,
                const std::vector<PatchSample>& negatives,
                const losses::FeatureExtractor& extractor);

/// Same loss over precomputed per-stage features (only the first two stages are used).
struct TripletFeatures {
  std::vector<VideoTensor> anchor;
  std::vector<VideoTensor> positive;
  std::vector<VideoTensor> negative;
};
double dcl_loss(const std::vector<TripletFeatures>& features);

struct SamplingOptions {
  std::size_t patch = 16;
  std::size_t stride = 16;
  ScheduleParams schedule;
  double step = 0.0;
  Augmentations augment;
  bool positives_from_clean = true;
};

struct TripletBatch {
  Distances distances;
  double mean_difference = 0.0;  // mean of the difference map
  std::size_t dropped_anchors = 0;  // no negative at distance >= d fits the frame
  std::vector<PatchSample> anchors;
  std::vector<PatchSample> positives;
  std::vector<PatchSample> negatives;
};

/// Anchors from the rainy/clean difference, one positive and one negative each.
/// Anchors with no feasible negative are dropped.
TripletBatch sample_batch(const VideoTensor& rainy, const VideoTensor& clean,
                          const VideoTensor& restored, const SamplingOptions& options, Rng& rng);

}  // namespace rainmamba::contrastive
