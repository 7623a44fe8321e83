#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rainmamba/tensor.hpp"

namespace rainmamba::io {

/// Binary PPM (P6, maxval 255) for one RGB frame, values mapped to [0, 1].
VideoTensor decode_ppm(const std::string& bytes);
/// Encodes frame t of a 3-channel tensor; values are clamped to [0, 1] and rounded.
std::string encode_ppm(const VideoTensor& x, std::size_t t);

/// Name of frame t: frame_%05d.ppm
std::string frame_name(std::size_t t);

/// Reads frame_00000.ppm, frame_00001.ppm, ... until the first gap.
VideoTensor read_frames(const std::filesystem::path& dir);
/// Writes every frame atomically; returns the file paths in order.
std::vector<std::filesystem::path> write_frames(const std::filesystem::path& dir,
                                                const VideoTensor& x);

}  // namespace rainmamba::io
