#include "rainmamba/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace rainmamba {

VideoTensor::VideoTensor(std::size_t channels, std::size_t time, std::size_t height,
                         std::size_t width, double fill)
    : c_(channels), t_(time), h_(height), w_(width),
      data_(channels * time * height * width, fill) {}

VideoTensor::VideoTensor(std::size_t channels, std::size_t time, std::size_t height,
                         std::size_t width, std::vector<double> values)
    : c_(channels), t_(time), h_(height), w_(width), data_(std::move(values)) {
  require(data_.size() == c_ * t_ * h_ * w_, "dimension mismatch");
}

bool VideoTensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

VideoTensor VideoTensor::frames(std::size_t t0, std::size_t count) const {
  require(t0 + count <= t_, "frame range out of bounds");
  VideoTensor out(c_, count, h_, w_);
  const std::size_t plane = h_ * w_;
  for (std::size_t c = 0; c < c_; ++c) {
    auto src = data_.begin() + static_cast<std::ptrdiff_t>(index(c, t0, 0, 0));
    std::copy(src, src + static_cast<std::ptrdiff_t>(count * plane),
              out.data_.begin() + static_cast<std::ptrdiff_t>(out.index(c, 0, 0, 0)));
  }
  return out;
}

}  // namespace rainmamba
