#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rainmamba/rng.hpp"
#include "rainmamba/tensor.hpp"

namespace rainmamba::sfc {

enum class CurveKind { ZigzagGlobal, Hilbert3D, Hilbert2D };
enum class Direction { TimeFirst, HeightFirst, WidthFirst };

std::string_view to_string(CurveKind k);
std::string_view to_string(Direction d);
/// Accepts "time"/"height"/"width" (and the enum spellings).
Direction parse_direction(std::string_view s);

struct Coord {
  std::int64_t t = 0, y = 0, x = 0;
  bool operator==(const Coord&) const = default;
};

struct CurveOrderMeta {
  unsigned order = 0;                    // recursion level of the generating curve
  std::array<std::size_t, 3> padded{};   // per-axis power-of-two extents (t, y, x)
};

/// Bijection between sequence positions and row-major voxel ids
/// (id = (t * H + y) * W + x).
struct ScanOrder {
  GridDims dims;
  std::vector<std::uint64_t> perm;  // position -> voxel id
  std::vector<std::uint64_t> inv;   // voxel id -> position
  CurveKind kind = CurveKind::ZigzagGlobal;
  Direction direction = Direction::TimeFirst;
  CurveOrderMeta meta;

  std::size_t size() const { return perm.size(); }
  Coord coord_at(std::size_t position) const;
};

std::uint64_t voxel_id(const GridDims& dims, const Coord& c);
Coord voxel_coord(const GridDims& dims, std::uint64_t id);

/// Row-major scan, frames complete before the next begins.
ScanOrder zigzag_order(std::size_t T, std::size_t H, std::size_t W);

/// Hilbert traversal of the enclosing power-of-two cube, restricted to the grid.
///
/// Axes of extent 1 are dropped, so a single frame gets a 2D curve. The named
/// direction axis is the one the curve crosses first at the coarsest level
/// (first half-box to second); the remaining axes follow in (t, y, x) order.
/// Finer levels alternate orientation, so the very first unit step only
/// follows the direction on a 2x2x2 box.
ScanOrder hilbert_order_3d(std::size_t T, std::size_t H, std::size_t W,
                           Direction direction = Direction::TimeFirst);
ScanOrder hilbert_order_2d(std::size_t H, std::size_t W);

/// Hilbert index of a point in an n-dimensional 2^bits cube (n <= 3).
/// Skilling's transpose construction; coords[0] is the curve's major axis.
std::uint64_t hilbert_index(std::array<std::uint32_t, 3> coords, unsigned n, unsigned bits);

SequenceTensor flatten(const VideoTensor& x, const ScanOrder& order);
VideoTensor unflatten(const SequenceTensor& s, const ScanOrder& order);

/// Squared grid distance between the voxels at two positions over their index gap.
double discrete_slr(const ScanOrder& order, std::size_t i, std::size_t j);

struct HistogramBucket {
  std::uint64_t lo = 0;  // inclusive
  std::uint64_t hi = 0;  // exclusive
  std::uint64_t count = 0;
};

struct LocalityReport {
  double max_slr = 0.0;
  double mean_slr_adjacent = 0.0;
  double mean_index_gap_spatial = 0.0;   // in-frame x and y neighbours
  double mean_index_gap_temporal = 0.0;  // (t, t+1) neighbours
  double mean_index_gap_all = 0.0;       // every 6-connected neighbour pair
  std::uint64_t evaluated_pairs = 0;      // pairs behind max_slr
  std::vector<HistogramBucket> histogram;  // index gaps of grid-adjacent voxel pairs
};

struct LocalityMode {
  bool exhaustive = true;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;

  static LocalityMode Exhaustive() { return {true, 0, 0}; }
  static LocalityMode Sampled(std::uint64_t k, std::uint64_t seed) { return {false, k, seed}; }
};

inline constexpr std::size_t kExhaustiveVoxelLimit = std::size_t{1} << 16;

LocalityReport locality_report(const ScanOrder& order, const LocalityMode& mode);

}  // namespace rainmamba::sfc
