#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rainmamba/tensor.hpp"

namespace rainmamba::io {

// "RMTN": magic, u32 version (1), u32 ndim, ndim x u32 dims, then
// product(dims) little-endian f32 values in row-major order.
struct RawTensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;
};

std::string encode_rmtn(const RawTensor& t);
RawTensor decode_rmtn(const std::string& bytes);

RawTensor to_raw(const VideoTensor& x);
VideoTensor video_from_raw(const RawTensor& raw);

// "RMPM": magic, u32 version (1), u32 ndim, ndim x u32 dims, then
// product(dims) little-endian u64 permutation entries.
struct RawPermutation {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint64_t> perm;
};

std::string encode_rmpm(const RawPermutation& p);
RawPermutation decode_rmpm(const std::string& bytes);

std::string read_file(const std::filesystem::path& path);
/// Writes through a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace rainmamba::io
