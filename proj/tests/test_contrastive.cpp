#include <cmath>
#include <map>

#include "doctest.h"
#include "rainmamba/contrastive.hpp"

using namespace rainmamba;
using namespace rainmamba::contrastive;

namespace {

VideoTensor filled(std::size_t C, std::size_t T, std::size_t H, std::size_t W,
                   std::vector<double> values) {
  return VideoTensor(C, T, H, W, std::move(values));
}

PatchSample anchor_at(std::size_t t, std::size_t y, std::size_t x, std::size_t size) {
  PatchSample a;
  a.t = t, a.y = y, a.x = x, a.size = size;
  return a;
}

}  // namespace

TEST_CASE("compositing identity holds bitwise") {
  Rng r(1);
  for (int i = 0; i < 10; ++i) {
    const auto scene = synthetic_scene(3, 2, 16, 16, r);
    CHECK_NOTHROW(scene.validate());
    CHECK(subtract(compose_rain(scene), scene.background) == signed_difference(scene));
  }
}

TEST_CASE("difference maps") {
  Rng r(2);
  const auto scene = synthetic_scene(3, 2, 16, 16, r);
  const auto rainy = compose_rain(scene);
  const auto from_layers = difference_map_layers(scene);
  const auto from_frames = difference_map(rainy, scene.background);
  CHECK(from_layers.omega == from_frames.omega);
  CHECK(from_frames.t == 2);
  double hand = 0.0;
  for (std::size_t c = 0; c < 3; ++c) hand += std::abs(rainy(c, 1, 3, 5) - scene.background(c, 1, 3, 5));
  CHECK(from_frames(1, 3, 5) == doctest::Approx(hand / 3.0).epsilon(1e-15));
}

TEST_CASE("scene validation rejects a soft mask") {
  Rng r(3);
  auto scene = synthetic_scene(3, 1, 8, 8, r);
  scene.mask.values()[0] = 0.5;
  CHECK_THROWS_AS(scene.validate(), Error);
}

TEST_CASE("anchors beat the mean response") {
  DifferenceMap diff{1, 4, 4, std::vector<double>(16, 0.0)};
  diff.omega[0] = 1.0;   // top-left 2x2 patch
  diff.omega[15] = 0.5;  // bottom-right
  const VideoTensor restored(3, 1, 4, 4, 0.25);
  const auto anchors = select_anchors(diff, restored, 2, 2);
  REQUIRE(anchors.size() == 2);
  CHECK(anchors[0].y == 0);
  CHECK(anchors[0].x == 0);
  CHECK(anchors[0].response == 0.25);
  CHECK(anchors[1].y == 2);
  CHECK(anchors[1].x == 2);
  CHECK(anchors[0].payload.height() == 2);

  DifferenceMap flat{1, 4, 4, std::vector<double>(16, 0.3)};
  CHECK(select_anchors(flat, restored, 2, 2).empty());
}

TEST_CASE("schedule endpoints and midpoint") {
  const ScheduleParams p;
  const auto start = schedule(0, p);
  CHECK(start.d == 64.0);
  CHECK(start.p == 2.0);
  const auto mid = schedule(500, p);
  CHECK(mid.d == doctest::Approx(45.254833995939045).epsilon(1e-15));
  CHECK(mid.p == 5.0);
  const auto end = schedule(1000, p);
  CHECK(end.d == 32.0);
  CHECK(end.p == 8.0);
  const auto late = schedule(5000, p);
  CHECK(late.d == 16.0);
  CHECK(late.p == 8.0);
}

TEST_CASE("schedule validation") {
  ScheduleParams p;
  p.theta = 1.5;
  CHECK_THROWS_AS(schedule(0, p), Error);
  p = {};
  p.d_min = 100;
  CHECK_THROWS_AS(schedule(0, p), Error);
  CHECK_THROWS_AS(schedule(-1, ScheduleParams{}), Error);
}

TEST_CASE("positives stay within the range and a frame of the anchor") {
  Rng r(4);
  const VideoTensor frames(3, 3, 32, 32, 0.5);
  const auto a = anchor_at(1, 12, 12, 8);
  std::map<std::pair<long, long>, int> seen;
  for (int i = 0; i < 4000; ++i) {
    const auto p = sample_positive(a, 2.7, frames, r);
    CHECK(p.role == Role::Positive);
    CHECK(chebyshev(a, p.y, p.x) <= 2);
    CHECK(std::abs(static_cast<long>(p.t) - 1) <= 1);
    seen[{static_cast<long>(p.y) - 12, static_cast<long>(p.x) - 12}]++;
  }
  CHECK(seen.size() == 25);
}

TEST_CASE("positives clamp at the clip edge") {
  Rng r(5);
  const VideoTensor frames(3, 1, 8, 8, 0.5);
  for (int i = 0; i < 200; ++i) {
    const auto p = sample_positive(anchor_at(0, 0, 0, 4), 3.0, frames, r);
    CHECK(p.t == 0);
    CHECK(p.y + 4 <= 8);
    CHECK(p.x + 4 <= 8);
  }
}

TEST_CASE("negatives are uniform over far corners") {
  Rng r(6);
  const VideoTensor frames(1, 1, 10, 10, 0.5);
  const auto a = anchor_at(0, 0, 0, 4);
  std::map<std::pair<std::size_t, std::size_t>, int> counts;
  const int draws = 24000;
  for (int i = 0; i < draws; ++i) {
    const auto n = sample_negative(a, 4.2, frames, r, Augmentations::none());
    CHECK(chebyshev(a, n.y, n.x) >= 5);
    CHECK(n.augmentations.empty());
    counts[{n.y, n.x}]++;
  }
  // corners 0..6 on each axis, minus the 5x5 block within distance 4
  REQUIRE(counts.size() == 24);
  for (const auto& [corner, n] : counts) {
    CHECK(n > 850);
    CHECK(n < 1150);
  }
}

TEST_CASE("negative sampling reports infeasible distances") {
  Rng r(7);
  const VideoTensor frames(1, 2, 10, 10, 0.5);
  CHECK_THROWS_WITH_AS(sample_negative(anchor_at(0, 3, 3, 4), 7.0, frames, r), doctest::Contains("infeasible"), Error);
}

TEST_CASE("augmentations") {
  VideoTensor p(1, 1, 3, 3, std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9});
  CHECK(rotate90(rotate90(rotate90(rotate90(p, 1), 1), 1), 1) == p);
  CHECK(rotate90(p, 2) == flip_vertical(flip_horizontal(p)));
  CHECK(flip_horizontal(flip_horizontal(p)) == p);
  CHECK(flip_horizontal(p)(0, 0, 0, 0) == 3.0);
  CHECK(flip_vertical(p)(0, 0, 0, 0) == 7.0);
  CHECK(box_blur3(p)(0, 0, 1, 1) == 5.0);
  CHECK(box_blur3(p)(0, 0, 0, 0) == 3.0);  // (1 + 2 + 4 + 5) / 4
  const VideoTensor flat(2, 1, 4, 4, 0.5);
  CHECK(box_blur3(flat) == flat);
}

TEST_CASE("dcl loss") {
  const losses::IdentityExtractor id;
  auto sample = [](Role role, std::vector<double> v) {
    PatchSample s;
    s.role = role;
    s.size = 2;
    s.payload = filled(1, 1, 2, 2, std::move(v));
    return s;
  };

  SUBCASE("hand-computed two-sample value") {
    const std::vector<PatchSample> anchors{sample(Role::Anchor, {0, 0, 0, 0}),
                                           sample(Role::Anchor, {0.5, 0.5, 0.5, 0.5})};
    const std::vector<PatchSample> positives{sample(Role::Positive, {0.1, 0.1, 0.1, 0.1}),
                                             sample(Role::Positive, {0.25, 0.75, 0.5, 0.5})};
    const std::vector<PatchSample> negatives{sample(Role::Negative, {1, 1, 1, 1}),
                                             sample(Role::Negative, {0, 0, 1, 1})};
    // 0.1 / (1 + 1e-8) + 0.125 / (0.5 + 1e-8)
    CHECK(std::abs(dcl_loss(anchors, positives, negatives, id) - 0.34999999400000010999999) < 1e-12);
  }

  SUBCASE("zero when positives equal anchors") {
    const std::vector<PatchSample> a{sample(Role::Anchor, {0.1, 0.2, 0.3, 0.4})};
    const std::vector<PatchSample> n{sample(Role::Negative, {1, 1, 1, 1})};
    CHECK(dcl_loss(a, a, n, id) == 0.0);
  }

  SUBCASE("errors") {
    CHECK_THROWS_AS(dcl_loss({}, {}, {}, id), Error);
    const std::vector<PatchSample> a{sample(Role::Anchor, {0, 0, 0, 0})};
    CHECK_THROWS_AS(dcl_loss(a, a, {}, id), Error);
    CHECK_THROWS_AS(dcl_loss(a, a, a, losses::IdentityExtractor({3})), Error);
  }
}

TEST_CASE("sample batch pairs every surviving anchor") {
  Rng r(8);
  const auto scene = synthetic_scene(3, 3, 64, 64, r);
  const auto rainy = compose_rain(scene);
  SamplingOptions opt;
  opt.step = 1000;  // d = 32, feasible on 64x64
  Rng a(1), b(1);
  const auto batch = sample_batch(rainy, scene.background, rainy, opt, a);
  const auto again = sample_batch(rainy, scene.background, rainy, opt, b);
  CHECK(batch.anchors.size() > 0);
  CHECK(batch.anchors.size() == batch.positives.size());
  CHECK(batch.anchors.size() == batch.negatives.size());
  CHECK(batch.dropped_anchors == 0);
  CHECK(batch.distances.d == 32.0);
  for (std::size_t i = 0; i < batch.anchors.size(); ++i) {
    CHECK(chebyshev(batch.anchors[i], batch.negatives[i].y, batch.negatives[i].x) >= 32);
    CHECK(batch.negatives[i].x == again.negatives[i].x);
  }

  opt.step = 0;  // d = 64 cannot fit
  const auto none = sample_batch(rainy, scene.background, rainy, opt, a);
  CHECK(none.anchors.empty());
  CHECK(none.dropped_anchors > 0);
}
