#pragma once

#include <limits>
#include <vector>

#include "rainmamba/tensor.hpp"

namespace rainmamba::metrics {

/// 10·log10(peak² / MSE) over the whole tensor; +infinity when MSE is zero.
double psnr(const VideoTensor& pred, const VideoTensor& gt, double peak = 1.0);

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double peak = 1.0;
};

/// Gaussian-window SSIM over the valid region of one (channel, frame) plane.
double ssim_plane(const VideoTensor& a, const VideoTensor& b, std::size_t c, std::size_t t,
                  const SsimOptions& opt = {});

/// Per frame: mean over channels; result: mean over frames.
double ssim(const VideoTensor& pred, const VideoTensor& gt, const SsimOptions& opt = {});

/// Normalized 1D Gaussian taps.
std::vector<double> gaussian_window(int size, double sigma);

/// ITU-R BT.601 luma, 1 x T x H x W.
VideoTensor to_luma(const VideoTensor& rgb);

struct FrameScores {
  std::vector<double> psnr;
  std::vector<double> ssim;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
};

/// Per-frame PSNR/SSIM and their means (mean PSNR is infinite if any frame is).
FrameScores score_frames(const VideoTensor& pred, const VideoTensor& gt, double peak = 1.0);

}  // namespace rainmamba::metrics
