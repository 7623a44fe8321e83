#include "rainmamba/sfc.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

namespace rainmamba::sfc {

std::string_view to_string(CurveKind k) {
  switch (k) {
    case CurveKind::ZigzagGlobal: return "zigzag";
    case CurveKind::Hilbert3D: return "hilbert3d";
    case CurveKind::Hilbert2D: return "hilbert2d";
  }
  return "unknown";
}

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::TimeFirst: return "time";
    case Direction::HeightFirst: return "height";
    case Direction::WidthFirst: return "width";
  }
  return "unknown";
}

Direction parse_direction(std::string_view s) {
  if (s == "time" || s == "TimeFirst" || s == "t") return Direction::TimeFirst;
  if (s == "height" || s == "HeightFirst" || s == "h") return Direction::HeightFirst;
  if (s == "width" || s == "WidthFirst" || s == "w") return Direction::WidthFirst;
  throw Error("unknown scan direction '" + std::string(s) + "' (expected time, height, width)");
}

std::uint64_t voxel_id(const GridDims& d, const Coord& c) {
  return (static_cast<std::uint64_t>(c.t) * d.h + static_cast<std::uint64_t>(c.y)) * d.w +
         static_cast<std::uint64_t>(c.x);
}

Coord voxel_coord(const GridDims& d, std::uint64_t id) {
  const std::uint64_t plane = d.h * d.w;
  return {static_cast<std::int64_t>(id / plane), static_cast<std::int64_t>((id % plane) / d.w),
          static_cast<std::int64_t>(id % d.w)};
}

Coord ScanOrder::coord_at(std::size_t position) const {
  return voxel_coord(dims, perm.at(position));
}

namespace {

void check_dims(std::size_t T, std::size_t H, std::size_t W) {
  require(T >= 1 && H >= 1 && W >= 1, "scan order dims must be >= 1");
}

unsigned ceil_log2(std::size_t v) {
  return v <= 1 ? 0u : static_cast<unsigned>(std::bit_width(v - 1));
}

void fill_inverse(ScanOrder& o) {
  o.inv.assign(o.perm.size(), 0);
  for (std::size_t i = 0; i < o.perm.size(); ++i) o.inv[o.perm[i]] = i;
}

}  // namespace

ScanOrder zigzag_order(std::size_t T, std::size_t H, std::size_t W) {
  check_dims(T, H, W);
  ScanOrder o;
  o.dims = {T, H, W};
  o.kind = CurveKind::ZigzagGlobal;
  o.perm.resize(T * H * W);
  std::iota(o.perm.begin(), o.perm.end(), std::uint64_t{0});
  o.inv = o.perm;
  o.meta.order = std::max({ceil_log2(T), ceil_log2(H), ceil_log2(W)});
  o.meta.padded = {std::bit_ceil(T), std::bit_ceil(H), std::bit_ceil(W)};
  return o;
}

std::uint64_t hilbert_index(std::array<std::uint32_t, 3> X, unsigned n, unsigned bits) {
  require(n >= 1 && n <= 3, "hilbert_index supports 1 to 3 axes");
  require(bits >= 1 && bits * n <= 63, "hilbert_index: too many bits");
  const std::uint32_t M = std::uint32_t{1} << (bits - 1);
  // Undo excess work: inverse of the transpose-to-axes pass.
  for (std::uint32_t Q = M; Q > 1; Q >>= 1) {
    const std::uint32_t P = Q - 1;
    for (unsigned i = 0; i < n; ++i) {
      if (X[i] & Q) {
        X[0] ^= P;
      } else {
        const std::uint32_t t = (X[0] ^ X[i]) & P;
        X[0] ^= t;
        X[i] ^= t;
      }
    }
  }
  // Gray encode.
  for (unsigned i = 1; i < n; ++i) X[i] ^= X[i - 1];
  std::uint32_t t = 0;
  for (std::uint32_t Q = M; Q > 1; Q >>= 1)
    if (X[n - 1] & Q) t ^= Q - 1;
  for (unsigned i = 0; i < n; ++i) X[i] ^= t;

  // Interleave the transposed bits, most significant level first.
  std::uint64_t h = 0;
  for (int q = static_cast<int>(bits) - 1; q >= 0; --q)
    for (unsigned i = 0; i < n; ++i) h = (h << 1) | ((X[i] >> q) & 1u);
  return h;
}

ScanOrder hilbert_order_3d(std::size_t T, std::size_t H, std::size_t W, Direction direction) {
  check_dims(T, H, W);
  const std::array<std::size_t, 3> extent{T, H, W};  // axis 0 = t, 1 = y, 2 = x

  std::array<int, 3> priority{};
  switch (direction) {
    case Direction::TimeFirst: priority = {0, 1, 2}; break;
    case Direction::HeightFirst: priority = {1, 0, 2}; break;
    case Direction::WidthFirst: priority = {2, 0, 1}; break;
  }

  // Curve slots in reverse priority: the last slot is the first mover.
  std::vector<int> slots;
  for (int axis : priority)
    if (extent[static_cast<std::size_t>(axis)] > 1) slots.push_back(axis);
  std::reverse(slots.begin(), slots.end());

  ScanOrder o;
  o.dims = {T, H, W};
  o.kind = T == 1 ? CurveKind::Hilbert2D : CurveKind::Hilbert3D;
  o.direction = direction;
  o.meta.order = std::max({ceil_log2(T), ceil_log2(H), ceil_log2(W)});
  o.meta.padded = {std::bit_ceil(T), std::bit_ceil(H), std::bit_ceil(W)};

  const std::size_t V = T * H * W;
  o.perm.resize(V);
  std::iota(o.perm.begin(), o.perm.end(), std::uint64_t{0});
  if (slots.empty() || slots.size() == 1) {
    // A line (or a point): row-major order is the only curve.
    o.inv = o.perm;
    return o;
  }

  const unsigned n = static_cast<unsigned>(slots.size());
  const unsigned bits = std::max(o.meta.order, 1u);
  std::vector<std::uint64_t> key(V);
  for (std::uint64_t id = 0; id < V; ++id) {
    const Coord c = voxel_coord(o.dims, id);
    const std::array<std::int64_t, 3> axes{c.t, c.y, c.x};
    std::array<std::uint32_t, 3> X{};
    for (unsigned s = 0; s < n; ++s)
      X[s] = static_cast<std::uint32_t>(axes[static_cast<std::size_t>(slots[s])]);
    key[id] = hilbert_index(X, n, bits);
  }
  // Keys are distinct, so this is the padded traversal with padding removed.
  std::sort(o.perm.begin(), o.perm.end(),
            [&](std::uint64_t a, std::uint64_t b) { return key[a] < key[b]; });
  fill_inverse(o);
  return o;
}

ScanOrder hilbert_order_2d(std::size_t H, std::size_t W) {
  ScanOrder o = hilbert_order_3d(1, H, W, Direction::TimeFirst);
  o.kind = CurveKind::Hilbert2D;
  return o;
}

SequenceTensor flatten(const VideoTensor& x, const ScanOrder& order) {
  require(x.grid() == order.dims, "flatten: dimension mismatch between tensor and scan order");
  const std::size_t C = x.channels(), V = x.voxels();
  SequenceTensor s(C, V);
  for (std::size_t c = 0; c < C; ++c) {
    const double* src = x.values().data() + c * V;
    auto dst = s.row(c);
    for (std::size_t i = 0; i < V; ++i) dst[i] = src[order.perm[i]];
  }
  return s;
}

VideoTensor unflatten(const SequenceTensor& s, const ScanOrder& order) {
  require(s.length() == order.dims.voxels(), "unflatten: length mismatch with scan order");
  const std::size_t C = s.channels(), V = s.length();
  VideoTensor x(C, order.dims.t, order.dims.h, order.dims.w);
  for (std::size_t c = 0; c < C; ++c) {
    double* dst = x.values().data() + c * V;
    auto src = s.row(c);
    for (std::size_t i = 0; i < V; ++i) dst[order.perm[i]] = src[i];
  }
  return x;
}

namespace {

double squared_distance(const Coord& a, const Coord& b) {
  const double dt = static_cast<double>(a.t - b.t);
  const double dy = static_cast<double>(a.y - b.y);
  const double dx = static_cast<double>(a.x - b.x);
  return dt * dt + dy * dy + dx * dx;
}

}  // namespace

double discrete_slr(const ScanOrder& order, std::size_t i, std::size_t j) {
  require(i != j, "discrete_slr: positions must differ (division by zero)");
  require(i < order.size() && j < order.size(), "discrete_slr: position out of range");
  const double gap = i > j ? static_cast<double>(i - j) : static_cast<double>(j - i);
  return squared_distance(order.coord_at(i), order.coord_at(j)) / gap;
}

LocalityReport locality_report(const ScanOrder& order, const LocalityMode& mode) {
  const std::size_t V = order.size();
  if (mode.exhaustive)
    require(V <= kExhaustiveVoxelLimit,
            "exhaustive locality analysis is limited to 65536 voxels; use sampled mode");

  std::vector<Coord> coords(V);
  for (std::size_t i = 0; i < V; ++i) coords[i] = order.coord_at(i);

  LocalityReport r;
  auto consider = [&](std::size_t i, std::size_t j) {
    const double gap = static_cast<double>(j > i ? j - i : i - j);
    r.max_slr = std::max(r.max_slr, squared_distance(coords[i], coords[j]) / gap);
    ++r.evaluated_pairs;
  };

  if (mode.exhaustive) {
    for (std::size_t i = 0; i < V; ++i)
      for (std::size_t j = i + 1; j < V; ++j) consider(i, j);
  } else {
    for (std::size_t i = 0; i + 1 < V; ++i) consider(i, i + 1);
    if (V >= 2) {
      Rng rng(mode.seed);
      for (std::uint64_t k = 0; k < mode.samples; ++k) {
        const std::size_t i = rng.below(V);
        std::size_t j = rng.below(V - 1);
        if (j >= i) ++j;
        consider(i, j);
      }
    }
  }

  if (V >= 2) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < V; ++i)
      acc += squared_distance(coords[i], coords[i + 1]);
    r.mean_slr_adjacent = acc / static_cast<double>(V - 1);
  }

  // Index gaps over grid-adjacent voxel pairs.
  const GridDims& d = order.dims;
  std::vector<std::uint64_t> counts;
  auto record = [&](std::uint64_t gap) {
    const auto bucket = static_cast<std::size_t>(std::bit_width(gap) - 1);
    if (counts.size() <= bucket) counts.resize(bucket + 1, 0);
    ++counts[bucket];
  };
  double spatial_sum = 0.0, temporal_sum = 0.0;
  std::uint64_t spatial_n = 0, temporal_n = 0;
  for (std::size_t t = 0; t < d.t; ++t)
    for (std::size_t y = 0; y < d.h; ++y)
      for (std::size_t x = 0; x < d.w; ++x) {
        const std::uint64_t id = (t * d.h + y) * d.w + x;
        const std::uint64_t here = order.inv[id];
        auto gap_to = [&](std::uint64_t other) {
          const std::uint64_t there = order.inv[other];
          return here > there ? here - there : there - here;
        };
        if (x + 1 < d.w) {
          const auto g = gap_to(id + 1);
          spatial_sum += static_cast<double>(g), ++spatial_n, record(g);
        }
        if (y + 1 < d.h) {
          const auto g = gap_to(id + d.w);
          spatial_sum += static_cast<double>(g), ++spatial_n, record(g);
        }
        if (t + 1 < d.t) {
          const auto g = gap_to(id + d.h * d.w);
          temporal_sum += static_cast<double>(g), ++temporal_n, record(g);
        }
      }
  if (spatial_n) r.mean_index_gap_spatial = spatial_sum / static_cast<double>(spatial_n);
  if (temporal_n) r.mean_index_gap_temporal = temporal_sum / static_cast<double>(temporal_n);
  if (spatial_n + temporal_n)
    r.mean_index_gap_all = (spatial_sum + temporal_sum) / static_cast<double>(spatial_n + temporal_n);
  for (std::size_t b = 0; b < counts.size(); ++b)
    r.histogram.push_back({std::uint64_t{1} << b, std::uint64_t{1} << (b + 1), counts[b]});
  return r;
}

}  // namespace rainmamba::sfc
