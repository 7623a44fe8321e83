#include "rainmamba/blocks.hpp"

#include <cmath>

namespace rainmamba::blocks {

MambaBlockParams MambaBlockParams::random(const ssm::MambaLayerShape& shape, Rng& rng) {
  const std::size_t C = shape.model_channels;
  MambaBlockParams p;
  p.norm1 = LayerNormParams::identity(C);
  p.mamba = ssm::MambaLayerConfig::random(shape, rng);
  p.norm2 = LayerNormParams::identity(C);
  p.conv.kernels = init_params(C * 27, rng, 0.5 / std::sqrt(27.0));
  p.conv.bias.assign(C, 0.0);
  return p;
}

MambaBlockParams MambaBlockParams::zeros(const ssm::MambaLayerShape& shape) {
  const std::size_t C = shape.model_channels;
  MambaBlockParams p;
  p.norm1 = {std::vector<double>(C, 0.0), std::vector<double>(C, 0.0), 1e-5};
  p.mamba = ssm::MambaLayerConfig::zeros(shape);
  p.norm2 = p.norm1;
  p.conv.kernels.assign(C * 27, 0.0);
  p.conv.bias.assign(C, 0.0);
  return p;
}

VideoTensor mamba_block(const VideoTensor& x, const sfc::ScanOrder& order,
                        const MambaBlockParams& params) {
  require(x.grid() == order.dims, "mamba_block: dimension mismatch between input and scan order");
  SequenceTensor seq = sfc::flatten(x, order);
  const SequenceTensor mixed = ssm::bimamba_layer(layer_norm(seq, params.norm1), params.mamba);
  for (std::size_t i = 0; i < seq.size(); ++i) seq.values()[i] += mixed.values()[i];

  VideoTensor v = sfc::unflatten(seq, order);
  const VideoTensor local = depthwise_conv3d(layer_norm(v, params.norm2), params.conv);
  add_inplace(v, local);
  return v;
}

VideoTensor gmb(const VideoTensor& x, const MambaBlockParams& params) {
  return mamba_block(x, sfc::zigzag_order(x.time(), x.height(), x.width()), params);
}

VideoTensor lmb(const VideoTensor& x, const MambaBlockParams& params, sfc::Direction direction) {
  return mamba_block(x, sfc::hilbert_order_3d(x.time(), x.height(), x.width(), direction),
                     params);
}

CfmParams CfmParams::random(const ssm::MambaLayerShape& shape, std::size_t scales, Rng& rng) {
  CfmParams p;
  for (std::size_t s = 0; s < scales; ++s) {
    p.global.push_back(MambaBlockParams::random(shape, rng));
    p.local.push_back(MambaBlockParams::random(shape, rng));
  }
  return p;
}

CfmParams CfmParams::zeros(const ssm::MambaLayerShape& shape, std::size_t scales) {
  CfmParams p;
  for (std::size_t s = 0; s < scales; ++s) {
    p.global.push_back(MambaBlockParams::zeros(shape));
    p.local.push_back(MambaBlockParams::zeros(shape));
  }
  return p;
}

VideoTensor cfm(const VideoTensor& x, const CfmConfig& cfg, const CfmParams& params) {
  require(cfg.scales >= 1, "cfm: at least one scale is required");
  require(params.global.size() >= cfg.scales && params.local.size() >= cfg.scales,
          "cfm: parameters for every scale are required");
  const std::size_t multiple = std::size_t{1} << (cfg.scales - 1);
  require(x.height() % multiple == 0 && x.width() % multiple == 0,
          "cfm: height and width must be divisible by 2^(scales-1)");

  VideoTensor out = x;
  VideoTensor level = x;
  for (std::size_t s = 0; s < cfg.scales; ++s) {
    if (s > 0) level = down2(level);
    VideoTensor y = level;
    if (cfg.use_gmb) y = gmb(y, params.global[s]);
    if (cfg.use_lmb) y = lmb(y, params.local[s], cfg.direction);
    VideoTensor change = subtract(y, level);
    for (std::size_t k = 0; k < s; ++k) change = up2(change);
    add_inplace(out, change);
  }
  return out;
}

std::size_t ModelConfig::spatial_multiple() const {
  const std::size_t base = cfm.n2 > 0 ? 8 : 4;
  const std::size_t scale = cfm.scales >= 1 ? std::size_t{1} << (cfm.scales - 1) : 1;
  return std::max<std::size_t>(8, base * scale);
}

namespace {

Conv2dParams random_conv(std::size_t in, std::size_t out, std::size_t stride, Rng& rng) {
  Conv2dParams c{in, out, stride, {}, {}};
  c.weights = init_params(out * in * 9, rng, 1.0 / std::sqrt(static_cast<double>(in * 9)));
  c.bias = init_params(out, rng, 0.05);
  return c;
}

Conv2dParams zero_conv(std::size_t in, std::size_t out, std::size_t stride) {
  return {in, out, stride, std::vector<double>(out * in * 9, 0.0),
          std::vector<double>(out, 0.0)};
}

void validate_config(const ModelConfig& cfg) {
  require(cfg.channels >= 1, "model: channels must be >= 1");
  require(cfg.cfm.scales >= 1 && cfg.cfm.scales <= 4, "model: scales must be in [1, 4]");
}

}  // namespace

RainMambaModel RainMambaModel::random(const ModelConfig& cfg, std::uint64_t seed) {
  validate_config(cfg);
  Rng root(seed);
  Rng enc = root.fork(1), s1 = root.fork(2), s2 = root.fork(3), s3 = root.fork(4),
      dec = root.fork(5);
  const std::size_t C = cfg.channels;
  const auto shape = cfg.layer_shape();

  RainMambaModel m;
  m.config = cfg;
  m.encoder = {random_conv(3, C, 2, enc), random_conv(C, C, 2, enc), random_conv(C, C, 1, enc)};
  for (std::size_t i = 0; i < cfg.cfm.n1; ++i)
    m.stage1.push_back(CfmParams::random(shape, cfg.cfm.scales, s1));
  for (std::size_t i = 0; i < cfg.cfm.n2; ++i)
    m.stage2.push_back(CfmParams::random(shape, cfg.cfm.scales, s2));
  for (std::size_t i = 0; i < cfg.cfm.n3; ++i)
    m.stage3.push_back(CfmParams::random(shape, cfg.cfm.scales, s3));
  m.decoder.refine1 = {init_params(C * 27, dec, 0.5 / std::sqrt(27.0)), std::vector<double>(C, 0.0)};
  m.decoder.refine2 = {init_params(C * 27, dec, 0.5 / std::sqrt(27.0)), std::vector<double>(C, 0.0)};
  m.decoder.to_rgb = {C, 3, init_params(3 * C, dec, 0.1 / std::sqrt(static_cast<double>(C))),
                      std::vector<double>(3, 0.0)};
  return m;
}

RainMambaModel RainMambaModel::zeros(const ModelConfig& cfg) {
  validate_config(cfg);
  const std::size_t C = cfg.channels;
  const auto shape = cfg.layer_shape();
  RainMambaModel m;
  m.config = cfg;
  m.encoder = {zero_conv(3, C, 2), zero_conv(C, C, 2), zero_conv(C, C, 1)};
  m.stage1.assign(cfg.cfm.n1, CfmParams::zeros(shape, cfg.cfm.scales));
  m.stage2.assign(cfg.cfm.n2, CfmParams::zeros(shape, cfg.cfm.scales));
  m.stage3.assign(cfg.cfm.n3, CfmParams::zeros(shape, cfg.cfm.scales));
  m.decoder.refine1 = {std::vector<double>(C * 27, 0.0), std::vector<double>(C, 0.0)};
  m.decoder.refine2 = m.decoder.refine1;
  m.decoder.to_rgb = {C, 3, std::vector<double>(3 * C, 0.0), std::vector<double>(3, 0.0)};
  return m;
}

std::size_t RainMambaModel::parameter_count() {
  std::size_t n = 0;
  for_each_param([&](const std::vector<double>& v) { n += v.size(); });
  return n;
}

VideoTensor encode(const VideoTensor& frames, const RainMambaModel& model) {
  require(frames.channels() == 3, "encode: frames must have 3 channels");
  VideoTensor e = map(conv2d_3x3(frames, model.encoder.conv1), silu);
  e = map(conv2d_3x3(e, model.encoder.conv2), silu);
  return conv2d_3x3(e, model.encoder.conv3);
}

VideoTensor feature_pipeline(const VideoTensor& features, const RainMambaModel& model) {
  const CfmConfig& cfg = model.config.cfm;
  VideoTensor f = features;
  for (const auto& p : model.stage1) f = cfm(f, cfg, p);
  if (!model.stage2.empty()) {
    const VideoTensor coarse = down2(f);
    VideoTensor g = coarse;
    for (const auto& p : model.stage2) g = cfm(g, cfg, p);
    add_inplace(f, up2(subtract(g, coarse)));
  }
  for (const auto& p : model.stage3) f = cfm(f, cfg, p);
  return f;
}

VideoTensor decode(const VideoTensor& features, const RainMambaModel& model) {
  VideoTensor d = up2(map(depthwise_conv3d(features, model.decoder.refine1), silu));
  d = up2(map(depthwise_conv3d(d, model.decoder.refine2), silu));
  return pointwise(d, model.decoder.to_rgb);
}

VideoTensor model_forward(const VideoTensor& frames, const RainMambaModel& model) {
  require(frames.channels() == 3, "model_forward: frames must be 3 x T x H x W");
  require(frames.time() >= 1, "model_forward: at least one frame is required");
  const std::size_t multiple = model.config.spatial_multiple();
  require(frames.height() % multiple == 0 && frames.width() % multiple == 0,
          "model_forward: height and width must be divisible by " + std::to_string(multiple));
  require(model.stage1.size() == model.config.cfm.n1 &&
              model.stage2.size() == model.config.cfm.n2 &&
              model.stage3.size() == model.config.cfm.n3,
          "model_forward: stage sizes do not match config");

  const VideoTensor features = feature_pipeline(encode(frames, model), model);
  VideoTensor out = decode(features, model);
  add_inplace(out, frames);
  return out;
}

}  // namespace rainmamba::blocks
