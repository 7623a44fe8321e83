#include "rainmamba/metrics.hpp"

#include <cmath>

namespace rainmamba::metrics {

double psnr(const VideoTensor& pred, const VideoTensor& gt, double peak) {
  require(pred.same_shape(gt), "psnr: dimension mismatch");
  require(pred.size() > 0, "psnr: empty input");
  require(peak > 0.0, "psnr: peak must be > 0");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = pred.values()[i] - gt.values()[i];
    acc += r * r;
  }
  const double m = acc / static_cast<double>(pred.size());
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / m);
}

std::vector<double> gaussian_window(int size, double sigma) {
  require(size >= 1 && sigma > 0.0, "gaussian_window: invalid size or sigma");
  std::vector<double> g(static_cast<std::size_t>(size));
  const double center = (size - 1) / 2.0;
  double total = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - center;
    g[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
    total += g[static_cast<std::size_t>(i)];
  }
  for (double& v : g) v /= total;
  return g;
}

double ssim_plane(const VideoTensor& a, const VideoTensor& b, std::size_t c, std::size_t t,
                  const SsimOptions& opt) {
  require(a.same_shape(b), "ssim: dimension mismatch");
  const auto win = static_cast<std::size_t>(opt.window);
  const std::size_t H = a.height(), W = a.width();
  require(H >= win && W >= win, "ssim: frames must be at least as large as the window");
  const auto g = gaussian_window(opt.window, opt.sigma);
  const double C1 = (opt.k1 * opt.peak) * (opt.k1 * opt.peak);
  const double C2 = (opt.k2 * opt.peak) * (opt.k2 * opt.peak);

  const std::size_t Wv = W - win + 1, Hv = H - win + 1;
  // Horizontal pass over full rows, five moments at once.
  std::vector<double> row(5 * H * Wv, 0.0);
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < Wv; ++x) {
      double m[5] = {0, 0, 0, 0, 0};
      for (std::size_t k = 0; k < win; ++k) {
        const double va = a(c, t, y, x + k), vb = b(c, t, y, x + k), w = g[k];
        m[0] += w * va;
        m[1] += w * vb;
        m[2] += w * (va * va);
        m[3] += w * (vb * vb);
        m[4] += w * (va * vb);  // same grouping as m[2], m[3]: exact symmetry and ssim(a, a) == 1
      }
      for (int q = 0; q < 5; ++q) row[(static_cast<std::size_t>(q) * H + y) * Wv + x] = m[q];
    }

  double total = 0.0;
  for (std::size_t y = 0; y < Hv; ++y)
    for (std::size_t x = 0; x < Wv; ++x) {
      double m[5] = {0, 0, 0, 0, 0};
      for (std::size_t k = 0; k < win; ++k)
        for (int q = 0; q < 5; ++q) m[q] += g[k] * row[(static_cast<std::size_t>(q) * H + y + k) * Wv + x];
      const double mu_a = m[0], mu_b = m[1];
      const double var_a = m[2] - mu_a * mu_a;
      const double var_b = m[3] - mu_b * mu_b;
      const double cov = m[4] - mu_a * mu_b;
      total += ((2.0 * mu_a * mu_b + C1) * (2.0 * cov + C2)) /
               ((mu_a * mu_a + mu_b * mu_b + C1) * (var_a + var_b + C2));
    }
  return total / static_cast<double>(Hv * Wv);
}

double ssim(const VideoTensor& pred, const VideoTensor& gt, const SsimOptions& opt) {
  require(pred.same_shape(gt), "ssim: dimension mismatch");
  require(pred.channels() > 0 && pred.time() > 0, "ssim: empty input");
  double frames = 0.0;
  for (std::size_t t = 0; t < pred.time(); ++t) {
    double channels = 0.0;
    for (std::size_t c = 0; c < pred.channels(); ++c) channels += ssim_plane(pred, gt, c, t, opt);
    frames += channels / static_cast<double>(pred.channels());
  }
  return frames / static_cast<double>(pred.time());
}

VideoTensor to_luma(const VideoTensor& rgb) {
  require(rgb.channels() == 3, "to_luma: expected 3 channels");
  VideoTensor y(1, rgb.time(), rgb.height(), rgb.width());
  for (std::size_t t = 0; t < rgb.time(); ++t)
    for (std::size_t r = 0; r < rgb.height(); ++r)
      for (std::size_t x = 0; x < rgb.width(); ++x)
        y(0, t, r, x) = 0.299 * rgb(0, t, r, x) + 0.587 * rgb(1, t, r, x) + 0.114 * rgb(2, t, r, x);
  return y;
}

FrameScores score_frames(const VideoTensor& pred, const VideoTensor& gt, double peak) {
  require(pred.same_shape(gt), "metrics: dimension mismatch");
  FrameScores s;
  SsimOptions opt;
  opt.peak = peak;
  for (std::size_t t = 0; t < pred.time(); ++t) {
    const VideoTensor p = pred.frames(t, 1), g = gt.frames(t, 1);
    s.psnr.push_back(psnr(p, g, peak));
    s.ssim.push_back(ssim(p, g, opt));
  }
  const double n = static_cast<double>(pred.time());
  for (double v : s.psnr) s.mean_psnr += v;
  for (double v : s.ssim) s.mean_ssim += v;
  s.mean_psnr /= n;
  s.mean_ssim /= n;
  return s;
}

}  // namespace rainmamba::metrics
