#include "rainmamba/contrastive.hpp"

#include <algorithm>
#include <cmath>

namespace rainmamba::contrastive {

namespace {

double mask_at(const RainScene& s, std::size_t c, std::size_t t, std::size_t y, std::size_t x) {
  return s.mask.channels() == 1 ? s.mask(0, t, y, x) : s.mask(c, t, y, x);
}

double quantized(Rng& rng, double lo, double hi) {
  return std::floor(rng.uniform(lo, hi) * 256.0) / 256.0;
}

}  // namespace

void RainScene::validate() const {
  require(background.same_shape(streaks) && background.same_shape(drops),
          "rain scene: layer shapes differ");
  require(mask.grid() == background.grid() &&
              (mask.channels() == 1 || mask.channels() == background.channels()),
          "rain scene: mask shape mismatch");
  for (double m : mask.values()) require(m == 0.0 || m == 1.0, "rain scene: mask must be binary");
}

RainScene synthetic_scene(std::size_t C, std::size_t T, std::size_t H, std::size_t W, Rng& rng) {
  RainScene s{VideoTensor(C, T, H, W), VideoTensor(C, T, H, W), VideoTensor(C, T, H, W),
              VideoTensor(1, T, H, W)};
  // Smooth background: per-channel gradient plus 8-bit noise.
  for (std::size_t c = 0; c < C; ++c) {
    const double base = quantized(rng, 0.1, 0.6);
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x) {
          const double ramp = std::floor(64.0 * static_cast<double>(x + y) /
                                         static_cast<double>(H + W)) / 256.0;
          s.background(c, t, y, x) = base + ramp + quantized(rng, 0.0, 0.05);
        }
  }
  // Slanted streaks drifting downward over time.
  const std::size_t streak_count = std::max<std::size_t>(1, (H * W) / 96);
  for (std::size_t k = 0; k < streak_count; ++k) {
    const auto x0 = static_cast<std::int64_t>(rng.below(W));
    const auto y0 = static_cast<std::int64_t>(rng.below(H));
    const auto len = static_cast<std::int64_t>(3 + rng.below(6));
    const double level = quantized(rng, 0.3, 0.8);
    for (std::size_t t = 0; t < T; ++t)
      for (std::int64_t i = 0; i < len; ++i) {
        const std::int64_t y = (y0 + i + 2 * static_cast<std::int64_t>(t)) % static_cast<std::int64_t>(H);
        const std::int64_t x = (x0 + i / 3) % static_cast<std::int64_t>(W);
        for (std::size_t c = 0; c < C; ++c)
          s.streaks(c, t, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = level;
      }
  }
  // A few static raindrops: discs with a bright, blurred-looking interior.
  const std::size_t drop_count = 1 + rng.below(3);
  for (std::size_t k = 0; k < drop_count; ++k) {
    const auto cy = static_cast<double>(rng.below(H));
    const auto cx = static_cast<double>(rng.below(W));
    const double radius = 1.0 + static_cast<double>(rng.below(std::max<std::size_t>(2, H / 8)));
    const double level = quantized(rng, 0.5, 0.9);
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x) {
          const double dy = static_cast<double>(y) - cy, dx = static_cast<double>(x) - cx;
          if (dy * dy + dx * dx > radius * radius) continue;
          s.mask(0, t, y, x) = 1.0;
          for (std::size_t c = 0; c < C; ++c) s.drops(c, t, y, x) = level;
        }
  }
  return s;
}

VideoTensor compose_rain(const RainScene& scene) {
  scene.validate();
  VideoTensor out(scene.background.channels(), scene.background.time(),
                  scene.background.height(), scene.background.width());
  for (std::size_t c = 0; c < out.channels(); ++c)
    for (std::size_t t = 0; t < out.time(); ++t)
      for (std::size_t y = 0; y < out.height(); ++y)
        for (std::size_t x = 0; x < out.width(); ++x) {
          const double m = mask_at(scene, c, t, y, x);
          out(c, t, y, x) = (1.0 - m) * (scene.background(c, t, y, x) + scene.streaks(c, t, y, x)) +
                            m * scene.drops(c, t, y, x);
        }
  return out;
}

VideoTensor signed_difference(const RainScene& scene) {
  scene.validate();
  VideoTensor out(scene.background.channels(), scene.background.time(),
                  scene.background.height(), scene.background.width());
  for (std::size_t c = 0; c < out.channels(); ++c)
    for (std::size_t t = 0; t < out.time(); ++t)
      for (std::size_t y = 0; y < out.height(); ++y)
        for (std::size_t x = 0; x < out.width(); ++x) {
          const double m = mask_at(scene, c, t, y, x);
          out(c, t, y, x) = (1.0 - m) * scene.streaks(c, t, y, x) -
                            m * scene.background(c, t, y, x) + m * scene.drops(c, t, y, x);
        }
  return out;
}

namespace {

DifferenceMap channel_mean_abs(const VideoTensor& v) {
  require(v.channels() > 0, "difference map: no channels");
  DifferenceMap d{v.time(), v.height(), v.width(), std::vector<double>(v.voxels(), 0.0)};
  const std::size_t V = v.voxels();
  for (std::size_t c = 0; c < v.channels(); ++c)
    for (std::size_t i = 0; i < V; ++i) d.omega[i] += std::abs(v.values()[c * V + i]);
  for (double& o : d.omega) o /= static_cast<double>(v.channels());
  return d;
}

}  // namespace

DifferenceMap difference_map_layers(const RainScene& scene) {
  return channel_mean_abs(signed_difference(scene));
}

DifferenceMap difference_map(const VideoTensor& rainy, const VideoTensor& clean) {
  require(rainy.same_shape(clean), "difference_map: dimension mismatch");
  return channel_mean_abs(subtract(rainy, clean));
}

std::string to_string(Role r) {
  switch (r) {
    case Role::Anchor: return "anchor";
    case Role::Positive: return "positive";
    case Role::Negative: return "negative";
  }
  return "unknown";
}

VideoTensor crop(const VideoTensor& frames, std::size_t t, std::size_t y, std::size_t x,
                 std::size_t size) {
  require(t < frames.time() && y + size <= frames.height() && x + size <= frames.width(),
          "patch out of frame bounds");
  VideoTensor out(frames.channels(), 1, size, size);
  for (std::size_t c = 0; c < frames.channels(); ++c)
    for (std::size_t i = 0; i < size; ++i)
      for (std::size_t j = 0; j < size; ++j) out(c, 0, i, j) = frames(c, t, y + i, x + j);
  return out;
}

std::vector<PatchSample> select_anchors(const DifferenceMap& diff, const VideoTensor& restored,
                                        std::size_t patch_size, std::size_t stride) {
  require(diff.t > 0 && diff.h > 0 && diff.w > 0, "select_anchors: empty frame");
  require(diff.omega.size() == diff.t * diff.h * diff.w, "select_anchors: malformed map");
  require(restored.grid() == GridDims{diff.t, diff.h, diff.w},
          "select_anchors: restored frames do not match the difference map");
  require(patch_size >= 1 && stride >= 1, "select_anchors: patch size and stride must be >= 1");
  require(patch_size <= diff.h && patch_size <= diff.w, "select_anchors: patch grid does not fit");

  std::vector<PatchSample> candidates;
  for (std::size_t t = 0; t < diff.t; ++t)
    for (std::size_t y = 0; y + patch_size <= diff.h; y += stride)
      for (std::size_t x = 0; x + patch_size <= diff.w; x += stride) {
        double acc = 0.0;
        for (std::size_t i = 0; i < patch_size; ++i)
          for (std::size_t j = 0; j < patch_size; ++j) acc += diff(t, y + i, x + j);
        PatchSample p;
        p.role = Role::Anchor;
        p.t = t, p.y = y, p.x = x, p.size = patch_size;
        p.response = acc / static_cast<double>(patch_size * patch_size);
        candidates.push_back(std::move(p));
      }

  // Shift by the first response so identical responses average to exactly themselves.
  const double pivot = candidates.front().response;
  double shifted = 0.0;
  for (const auto& c : candidates) shifted += c.response - pivot;
  const double mean = pivot + shifted / static_cast<double>(candidates.size());

  std::vector<PatchSample> anchors;
  for (auto& c : candidates)
    if (c.response > mean) {
      c.payload = crop(restored, c.t, c.y, c.x, patch_size);
      anchors.push_back(std::move(c));
    }
  return anchors;
}

void ScheduleParams::validate() const {
  require(theta > 0.0 && theta < 1.0, "schedule: theta must be in (0, 1)");
  require(d_min <= d0, "schedule: d_min must be <= d0");
  require(p0 <= p_max, "schedule: p0 must be <= p_max");
  require(m >= 1.0, "schedule: m must be >= 1");
}

Distances schedule(double e, const ScheduleParams& params) {
  params.validate();
  require(e >= 0.0, "schedule: step must be >= 0");
  const double progress = e / params.m;
  return {std::max(params.d0 * std::pow(params.theta, progress), params.d_min),
          std::min(params.p0 + progress * (params.p_max - params.p0), params.p_max)};
}

std::size_t chebyshev(const PatchSample& a, std::size_t y, std::size_t x) {
  const std::size_t dy = a.y > y ? a.y - y : y - a.y;
  const std::size_t dx = a.x > x ? a.x - x : x - a.x;
  return std::max(dy, dx);
}

PatchSample sample_positive(const PatchSample& anchor, double p, const VideoTensor& frames,
                            Rng& rng) {
  require(p >= 0.0, "sample_positive: p must be >= 0");
  require(anchor.size >= 1 && anchor.size <= frames.height() && anchor.size <= frames.width(),
          "sample_positive: patch does not fit the frames");
  require(anchor.t < frames.time(), "sample_positive: anchor frame out of range");
  const auto reach = static_cast<std::int64_t>(std::floor(p));
  const auto P = static_cast<std::int64_t>(anchor.size);
  const auto ay = static_cast<std::int64_t>(anchor.y), ax = static_cast<std::int64_t>(anchor.x);
  const auto H = static_cast<std::int64_t>(frames.height());
  const auto W = static_cast<std::int64_t>(frames.width());
  const auto T = static_cast<std::int64_t>(frames.time());

  const std::int64_t dt = rng.between(-1, 1);
  const std::int64_t t = std::clamp<std::int64_t>(static_cast<std::int64_t>(anchor.t) + dt, 0, T - 1);
  // In-bounds offsets form a box that always contains zero.
  const std::int64_t dy = rng.between(std::max(-reach, -ay), std::max<std::int64_t>(0, std::min(reach, H - P - ay)));
  const std::int64_t dx = rng.between(std::max(-reach, -ax), std::max<std::int64_t>(0, std::min(reach, W - P - ax)));

  PatchSample s;
  s.role = Role::Positive;
  s.t = static_cast<std::size_t>(t);
  s.y = static_cast<std::size_t>(ay + dy);
  s.x = static_cast<std::size_t>(ax + dx);
  s.size = anchor.size;
  s.payload = crop(frames, s.t, s.y, s.x, s.size);
  return s;
}

VideoTensor rotate90(const VideoTensor& patch, int quarter_turns) {
  require(patch.height() == patch.width(), "rotate90: patch must be square");
  const std::size_t n = patch.height();
  VideoTensor out = patch;
  for (int q = 0; q < ((quarter_turns % 4) + 4) % 4; ++q) {
    VideoTensor next(out.channels(), out.time(), n, n);
    for (std::size_t c = 0; c < out.channels(); ++c)
      for (std::size_t t = 0; t < out.time(); ++t)
        for (std::size_t y = 0; y < n; ++y)
          for (std::size_t x = 0; x < n; ++x) next(c, t, y, x) = out(c, t, x, n - 1 - y);
    out = std::move(next);
  }
  return out;
}

VideoTensor flip_horizontal(const VideoTensor& patch) {
  VideoTensor out = patch;
  const std::size_t W = patch.width();
  for (std::size_t c = 0; c < patch.channels(); ++c)
    for (std::size_t t = 0; t < patch.time(); ++t)
      for (std::size_t y = 0; y < patch.height(); ++y)
        for (std::size_t x = 0; x < W; ++x) out(c, t, y, x) = patch(c, t, y, W - 1 - x);
  return out;
}

VideoTensor flip_vertical(const VideoTensor& patch) {
  VideoTensor out = patch;
  const std::size_t H = patch.height();
  for (std::size_t c = 0; c < patch.channels(); ++c)
    for (std::size_t t = 0; t < patch.time(); ++t)
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < patch.width(); ++x) out(c, t, y, x) = patch(c, t, H - 1 - y, x);
  return out;
}

VideoTensor box_blur3(const VideoTensor& patch) {
  VideoTensor out = patch;
  const auto H = static_cast<std::ptrdiff_t>(patch.height());
  const auto W = static_cast<std::ptrdiff_t>(patch.width());
  for (std::size_t c = 0; c < patch.channels(); ++c)
    for (std::size_t t = 0; t < patch.time(); ++t)
      for (std::ptrdiff_t y = 0; y < H; ++y)
        for (std::ptrdiff_t x = 0; x < W; ++x) {
          double acc = 0.0;
          int n = 0;
          for (std::ptrdiff_t dy = -1; dy <= 1; ++dy)
            for (std::ptrdiff_t dx = -1; dx <= 1; ++dx) {
              const std::ptrdiff_t yy = y + dy, xx = x + dx;
              if (yy < 0 || yy >= H || xx < 0 || xx >= W) continue;
              acc += patch(c, t, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
              ++n;
            }
          out(c, t, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = acc / n;
        }
  return out;
}

PatchSample sample_negative(const PatchSample& anchor, double d, const VideoTensor& frames,
                            Rng& rng, const Augmentations& augment) {
  require(d >= 0.0, "sample_negative: d must be >= 0");
  require(anchor.size >= 1 && anchor.size <= frames.height() && anchor.size <= frames.width(),
          "sample_negative: patch does not fit the frames");
  const auto r = static_cast<std::int64_t>(std::ceil(d));
  const auto P = static_cast<std::int64_t>(anchor.size);
  const std::int64_t rows = static_cast<std::int64_t>(frames.height()) - P + 1;
  const std::int64_t cols = static_cast<std::int64_t>(frames.width()) - P + 1;
  const auto ay = static_cast<std::int64_t>(anchor.y), ax = static_cast<std::int64_t>(anchor.x);

  // Columns of a near row (|y - ay| < r) that are still valid.
  const std::int64_t blocked_lo = std::max<std::int64_t>(0, ax - r + 1);
  const std::int64_t blocked_hi = std::min<std::int64_t>(cols - 1, ax + r - 1);
  const std::int64_t near_cols =
      r == 0 ? cols : cols - std::max<std::int64_t>(0, blocked_hi - blocked_lo + 1);

  auto row_count = [&](std::int64_t y) {
    return std::abs(y - ay) >= r ? cols : near_cols;
  };
  std::int64_t per_frame = 0;
  for (std::int64_t y = 0; y < rows; ++y) per_frame += row_count(y);
  require(per_frame > 0, "negative sampling infeasible");

  const auto t = static_cast<std::size_t>(rng.below(frames.time()));
  auto k = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(per_frame)));
  std::int64_t y = 0;
  while (k >= row_count(y)) k -= row_count(y++);
  std::int64_t x = k;
  const std::int64_t blocked = std::max<std::int64_t>(0, blocked_hi - blocked_lo + 1);
  if (r > 0 && std::abs(y - ay) < r && x >= blocked_lo) x += blocked;

  PatchSample s;
  s.role = Role::Negative;
  s.t = t;
  s.y = static_cast<std::size_t>(y);
  s.x = static_cast<std::size_t>(x);
  s.size = anchor.size;
  s.payload = crop(frames, s.t, s.y, s.x, s.size);

  if (augment.rotate) {
    const int turns = static_cast<int>(rng.below(4));
    if (turns) {
      s.payload = rotate90(s.payload, turns);
      s.augmentations.push_back("rot" + std::to_string(90 * turns));
    }
  }
  if (augment.hflip && rng.coin()) {
    s.payload = flip_horizontal(s.payload);
    s.augmentations.push_back("hflip");
  }
  if (augment.vflip && rng.coin()) {
    s.payload = flip_vertical(s.payload);
    s.augmentations.push_back("vflip");
  }
  if (augment.blur && rng.coin()) {
    s.payload = box_blur3(s.payload);
    s.augmentations.push_back("blur");
  }
  return s;
}

double dcl_loss(const std::vector<TripletFeatures>& features) {
  require(!features.empty(), "dcl_loss: no samples");
  double total = 0.0;
  for (const auto& f : features) {
    require(f.anchor.size() >= 2 && f.positive.size() >= 2 && f.negative.size() >= 2,
            "dcl_loss: two feature stages are required");
    for (std::size_t r = 0; r < 2; ++r) {
      const double pull = losses::mae(f.positive[r], f.anchor[r]);
      const double push = losses::mae(f.negative[r], f.anchor[r]);
      total += pull / (push + kDclGuard);
    }
  }
  return total / static_cast<double>(features.size());
}

double dcl_loss(const std::vector<PatchSample>& anchors, const std::vector<PatchSample>& positives,
                const std::vector<PatchSample>& negatives,
                const losses::FeatureExtractor& extractor) {
  require(!anchors.empty(), "dcl_loss: no samples");
  require(anchors.size() == positives.size() && anchors.size() == negatives.size(),
          "dcl_loss: anchor, positive and negative counts differ");
  require(extractor.stage_count() >= 2, "dcl_loss: extractor needs two stages");
  std::vector<TripletFeatures> features;
  features.reserve(anchors.size());
  for (std::size_t s = 0; s < anchors.size(); ++s)
    features.push_back({extractor.extract(anchors[s].payload),
                        extractor.extract(positives[s].payload),
                        extractor.extract(negatives[s].payload)});
  return dcl_loss(features);
}

TripletBatch sample_batch(const VideoTensor& rainy, const VideoTensor& clean,
                          const VideoTensor& restored, const SamplingOptions& options, Rng& rng) {
  require(rainy.same_shape(clean) && rainy.same_shape(restored),
          "sample_batch: rainy, clean and restored frames must share a shape");
  TripletBatch batch;
  batch.distances = schedule(options.step, options.schedule);
  const DifferenceMap diff = difference_map(rainy, clean);
  auto anchors = select_anchors(diff, restored, options.patch, options.stride);

  double acc = 0.0;
  for (double v : diff.omega) acc += v;
  batch.mean_difference = acc / static_cast<double>(diff.omega.size());

  const VideoTensor& positive_source = options.positives_from_clean ? clean : restored;
  for (auto& a : anchors) {
    PatchSample pos = sample_positive(a, batch.distances.p, positive_source, rng);
    PatchSample neg;
    try {
      neg = sample_negative(a, batch.distances.d, rainy, rng, options.augment);
    } catch (const Error&) {
      ++batch.dropped_anchors;
      continue;
    }
    batch.anchors.push_back(std::move(a));
    batch.positives.push_back(std::move(pos));
    batch.negatives.push_back(std::move(neg));
  }
  return batch;
}

}  // namespace rainmamba::contrastive
