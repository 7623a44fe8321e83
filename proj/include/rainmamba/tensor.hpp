#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rainmamba/error.hpp"

namespace rainmamba {

struct GridDims {
  std::size_t t = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  std::size_t voxels() const { return t * h * w; }
  bool operator==(const GridDims&) const = default;
};

/// Dense (C, T, H, W) video or feature volume, row-major.
class VideoTensor {
 public:
  VideoTensor() = default;
  VideoTensor(std::size_t channels, std::size_t time, std::size_t height,
              std::size_t width, double fill = 0.0);
  VideoTensor(std::size_t channels, std::size_t time, std::size_t height,
              std::size_t width, std::vector<double> values);

  std::size_t channels() const { return c_; }
  std::size_t time() const { return t_; }
  std::size_t height() const { return h_; }
  std::size_t width() const { return w_; }
  GridDims grid() const { return {t_, h_, w_}; }
  std::size_t voxels() const { return t_ * h_ * w_; }
  std::size_t size() const { return data_.size(); }

  std::size_t index(std::size_t c, std::size_t t, std::size_t y,
                    std::size_t x) const {
    return ((c * t_ + t) * h_ + y) * w_ + x;
  }
  double& operator()(std::size_t c, std::size_t t, std::size_t y, std::size_t x) {
    return data_[index(c, t, y, x)];
  }
  double operator()(std::size_t c, std::size_t t, std::size_t y,
                    std::size_t x) const {
    return data_[index(c, t, y, x)];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  bool same_shape(const VideoTensor& o) const {
    return c_ == o.c_ && t_ == o.t_ && h_ == o.h_ && w_ == o.w_;
  }
  bool all_finite() const;

  /// Copy of frame range [t0, t0+count) for every channel.
  VideoTensor frames(std::size_t t0, std::size_t count) const;

  bool operator==(const VideoTensor&) const = default;

 private:
  std::size_t c_ = 0, t_ = 0, h_ = 0, w_ = 0;
  std::vector<double> data_;
};

/// (C, L) token sequence. Templated so the scan kernels can run in 32-bit too.
template <typename Real>
class BasicSequenceTensor {
 public:
  BasicSequenceTensor() = default;
  BasicSequenceTensor(std::size_t channels, std::size_t length, Real fill = Real(0))
      : c_(channels), l_(length), data_(channels * length, fill) {}
  BasicSequenceTensor(std::size_t channels, std::size_t length, std::vector<Real> values)
      : c_(channels), l_(length), data_(std::move(values)) {
    require(data_.size() == c_ * l_, "dimension mismatch");
  }

  std::size_t channels() const { return c_; }
  std::size_t length() const { return l_; }
  std::size_t size() const { return data_.size(); }

  Real& operator()(std::size_t c, std::size_t l) { return data_[c * l_ + l]; }
  Real operator()(std::size_t c, std::size_t l) const { return data_[c * l_ + l]; }

  std::span<Real> row(std::size_t c) { return {data_.data() + c * l_, l_}; }
  std::span<const Real> row(std::size_t c) const { return {data_.data() + c * l_, l_}; }

  std::span<Real> data() { return data_; }
  std::span<const Real> data() const { return data_; }
  std::vector<Real>& values() { return data_; }
  const std::vector<Real>& values() const { return data_; }

  bool same_shape(const BasicSequenceTensor& o) const { return c_ == o.c_ && l_ == o.l_; }

  BasicSequenceTensor reversed() const {
    BasicSequenceTensor out(c_, l_);
    for (std::size_t c = 0; c < c_; ++c)
      for (std::size_t l = 0; l < l_; ++l) out(c, l) = (*this)(c, l_ - 1 - l);
    return out;
  }

  bool operator==(const BasicSequenceTensor&) const = default;

 private:
  std::size_t c_ = 0, l_ = 0;
  std::vector<Real> data_;
};

using SequenceTensor = BasicSequenceTensor<double>;
using SequenceTensorF = BasicSequenceTensor<float>;

}  // namespace rainmamba
