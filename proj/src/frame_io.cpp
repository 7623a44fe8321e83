#include "rainmamba/frame_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

#include "rainmamba/tensor_io.hpp"

namespace rainmamba::io {

namespace {

// Parses the next whitespace-delimited header integer, skipping '#' comments.
std::size_t header_int(const std::string& bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    const auto ch = static_cast<unsigned char>(bytes[pos]);
    if (std::isspace(ch)) {
      ++pos;
    } else if (ch == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  require(pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos])),
          "malformed PPM header");
  std::size_t v = 0;
  while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
    v = v * 10 + static_cast<std::size_t>(bytes[pos] - '0');
    require(v < (1u << 24), "PPM header value too large");
    ++pos;
  }
  return v;
}

}  // namespace

VideoTensor decode_ppm(const std::string& bytes) {
  require(bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6', "not a binary PPM (P6)");
  std::size_t pos = 2;
  const std::size_t w = header_int(bytes, pos);
  const std::size_t h = header_int(bytes, pos);
  const std::size_t maxval = header_int(bytes, pos);
  require(maxval == 255, "only maxval 255 PPM is supported");
  require(pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos])),
          "malformed PPM header");
  ++pos;
  require(bytes.size() - pos == 3 * w * h, "PPM payload size mismatch");

  VideoTensor out(3, 1, h, w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        const auto v = static_cast<unsigned char>(bytes[pos + 3 * (y * w + x) + c]);
        out(c, 0, y, x) = static_cast<double>(v) / 255.0;
      }
  return out;
}

std::string encode_ppm(const VideoTensor& x, std::size_t t) {
  require(x.channels() == 3, "PPM frames need 3 channels");
  require(t < x.time(), "frame index out of range");
  std::string out = "P6\n" + std::to_string(x.width()) + " " + std::to_string(x.height()) +
                    "\n255\n";
  out.reserve(out.size() + 3 * x.height() * x.width());
  for (std::size_t y = 0; y < x.height(); ++y)
    for (std::size_t xx = 0; xx < x.width(); ++xx)
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = std::clamp(x(c, t, y, xx), 0.0, 1.0);
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
      }
  return out;
}

std::string frame_name(std::size_t t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%05zu.ppm", t);
  return buf;
}

VideoTensor read_frames(const std::filesystem::path& dir) {
  std::vector<VideoTensor> frames;
  for (std::size_t t = 0;; ++t) {
    const auto path = dir / frame_name(t);
    if (!std::filesystem::exists(path)) break;
    frames.push_back(decode_ppm(read_file(path)));
  }
  require(!frames.empty(), "no frame_00000.ppm found in " + dir.string());
  const std::size_t H = frames[0].height(), W = frames[0].width();
  VideoTensor out(3, frames.size(), H, W);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    require(frames[t].height() == H && frames[t].width() == W,
            "frame " + frame_name(t) + " has a different size");
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x) out(c, t, y, x) = frames[t](c, 0, y, x);
  }
  return out;
}

std::vector<std::filesystem::path> write_frames(const std::filesystem::path& dir,
                                                const VideoTensor& x) {
  std::vector<std::filesystem::path> paths;
  for (std::size_t t = 0; t < x.time(); ++t) {
    auto path = dir / frame_name(t);
    write_file_atomic(path, encode_ppm(x, t));
    paths.push_back(std::move(path));
  }
  return paths;
}

}  // namespace rainmamba::io
