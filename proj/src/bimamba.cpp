#include "rainmamba/bimamba.hpp"

#include <cmath>

#include "rainmamba/nn.hpp"

namespace rainmamba::ssm {

namespace {

ScanBranch random_branch(const MambaLayerShape& shape, Rng& rng) {
  const std::size_t inner = shape.inner();
  ScanBranch b;
  b.conv_w = init_params(inner * shape.conv_width, rng,
                         1.0 / std::sqrt(static_cast<double>(shape.conv_width)));
  b.conv_b = init_params(inner, rng, 0.1);
  b.scan = SelectiveParams::random(inner, shape.state, rng);
  b.d_skip.assign(inner, 1.0);
  return b;
}

ScanBranch zero_branch(const MambaLayerShape& shape) {
  const std::size_t inner = shape.inner();
  return {std::vector<double>(inner * shape.conv_width, 0.0), std::vector<double>(inner, 0.0),
          SelectiveParams::zeros(inner, shape.state), std::vector<double>(inner, 0.0)};
}

// out (rows x L) = W (rows x cols) * in (cols x L), W row-major.
SequenceTensor matmul(const std::vector<double>& w, std::size_t rows, const SequenceTensor& in,
                      std::size_t row_offset = 0) {
  const std::size_t cols = in.channels(), L = in.length();
  SequenceTensor out(rows, L);
  for (std::size_t r = 0; r < rows; ++r) {
    auto dst = out.row(r);
    for (std::size_t c = 0; c < cols; ++c) {
      const double wv = w[(row_offset + r) * cols + c];
      if (wv == 0.0) continue;
      auto src = in.row(c);
      for (std::size_t l = 0; l < L; ++l) dst[l] += wv * src[l];
    }
  }
  return out;
}

}  // namespace

void MambaLayerConfig::validate() const {
  const std::size_t C = shape.model_channels, inner = shape.inner();
  require(shape.conv_width >= 1, "bimamba: conv width must be >= 1");
  require(in_proj.size() == 2 * inner * C && out_proj.size() == C * inner,
          "bimamba: projection shape mismatch");
  for (const ScanBranch* b : {&forward, &backward}) {
    require(b->conv_w.size() == inner * shape.conv_width && b->conv_b.size() == inner &&
                b->d_skip.size() == inner,
            "bimamba: branch shape mismatch");
    require(b->scan.channels == inner && b->scan.state == shape.state,
            "bimamba: scan parameter shape mismatch");
    b->scan.validate();
  }
}

MambaLayerConfig MambaLayerConfig::random(const MambaLayerShape& shape, Rng& rng) {
  const std::size_t C = shape.model_channels, inner = shape.inner();
  MambaLayerConfig cfg;
  cfg.shape = shape;
  cfg.in_proj = init_params(2 * inner * C, rng, 1.0 / std::sqrt(static_cast<double>(C)));
  cfg.forward = random_branch(shape, rng);
  cfg.backward = random_branch(shape, rng);
  cfg.out_proj = init_params(C * inner, rng, 0.5 / std::sqrt(static_cast<double>(inner)));
  return cfg;
}

MambaLayerConfig MambaLayerConfig::zeros(const MambaLayerShape& shape) {
  const std::size_t C = shape.model_channels, inner = shape.inner();
  return {shape, std::vector<double>(2 * inner * C, 0.0), zero_branch(shape), zero_branch(shape),
          std::vector<double>(C * inner, 0.0)};
}

SequenceTensor scan_branch(const ScanBranch& branch, std::size_t conv_width,
                           const SequenceTensor& u) {
  const std::size_t inner = u.channels(), L = u.length();
  SequenceTensor v(inner, L);
  for (std::size_t ch = 0; ch < inner; ++ch) {
    const double* w = branch.conv_w.data() + ch * conv_width;
    for (std::size_t k = 0; k < L; ++k) {
      double acc = branch.conv_b[ch];
      for (std::size_t j = 0; j < conv_width; ++j) {
        const std::size_t back = conv_width - 1 - j;
        if (back > k) continue;
        acc += w[j] * u(ch, k - back);
      }
      v(ch, k) = silu(acc);
    }
  }
  SequenceTensor y = selective_scan(branch.scan, v);
  for (std::size_t ch = 0; ch < inner; ++ch)
    for (std::size_t k = 0; k < L; ++k) y(ch, k) += branch.d_skip[ch] * v(ch, k);
  return y;
}

SequenceTensor bimamba_layer(const SequenceTensor& x, const MambaLayerConfig& cfg) {
  cfg.validate();
  require(x.channels() == cfg.shape.model_channels, "bimamba: dimension mismatch");
  const std::size_t inner = cfg.shape.inner(), L = x.length();

  const SequenceTensor u = matmul(cfg.in_proj, inner, x, 0);
  const SequenceTensor z = matmul(cfg.in_proj, inner, x, inner);

  const SequenceTensor fwd = scan_branch(cfg.forward, cfg.shape.conv_width, u);
  const SequenceTensor bwd =
      scan_branch(cfg.backward, cfg.shape.conv_width, u.reversed()).reversed();

  SequenceTensor gated(inner, L);
  for (std::size_t ch = 0; ch < inner; ++ch)
    for (std::size_t k = 0; k < L; ++k)
      gated(ch, k) = (fwd(ch, k) + bwd(ch, k)) * silu(z(ch, k));

  return matmul(cfg.out_proj, cfg.shape.model_channels, gated);
}

}  // namespace rainmamba::ssm
