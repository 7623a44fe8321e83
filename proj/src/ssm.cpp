#include "rainmamba/ssm.hpp"

#include "rainmamba/nn.hpp"

namespace rainmamba::ssm {

template <typename Real>
void LtiParams<Real>::validate() const {
  const std::size_t dn = channels * state;
  require(a.size() == dn && b.size() == dn && c.size() == dn && delta.size() == channels,
          "ssm: parameter shape mismatch");
  for (Real d : delta) require(d > Real(0), "ssm: delta must be > 0");
  for (Real v : a) require(std::isfinite(v), "ssm: A must be finite");
}

template <typename Real>
LtiParams<Real> LtiParams<Real>::random(std::size_t d, std::size_t n, Rng& rng, double dt_min,
                                        double dt_max) {
  LtiParams p;
  p.channels = d;
  p.state = n;
  p.a.resize(d * n);
  p.b.resize(d * n);
  p.c.resize(d * n);
  p.delta.resize(d);
  for (std::size_t ch = 0; ch < d; ++ch) {
    for (std::size_t s = 0; s < n; ++s) {
      p.a[ch * n + s] = static_cast<Real>(-static_cast<double>(s + 1));
      p.b[ch * n + s] = static_cast<Real>(rng.uniform(-1.0, 1.0));
      p.c[ch * n + s] = static_cast<Real>(rng.uniform(-1.0, 1.0));
    }
    const double log_dt = rng.uniform(std::log(dt_min), std::log(dt_max));
    p.delta[ch] = static_cast<Real>(std::exp(log_dt));
  }
  return p;
}

template <typename Real>
Discrete<Real> discretize_zoh(const LtiParams<Real>& p) {
  p.validate();
  Discrete<Real> out{p.channels, p.state, std::vector<Real>(p.a.size()),
                     std::vector<Real>(p.a.size())};
  for (std::size_t ch = 0; ch < p.channels; ++ch)
    for (std::size_t s = 0; s < p.state; ++s) {
      const std::size_t i = ch * p.state + s;
      zoh(p.a[i], p.delta[ch], p.b[i], out.a_bar[i], out.b_bar[i]);
    }
  return out;
}

namespace {

template <typename Real>
void check_scan_shapes(const Discrete<Real>& disc, std::span<const Real> c, std::size_t channels,
                       std::span<const Real> h0) {
  const std::size_t dn = disc.channels * disc.state;
  require(disc.a_bar.size() == dn && disc.b_bar.size() == dn, "ssm: discrete shape mismatch");
  require(c.size() == dn, "ssm: C shape mismatch");
  require(channels == disc.channels, "ssm: input channels do not match parameters");
  require(h0.empty() || h0.size() == dn, "ssm: h0 shape mismatch");
}

}  // namespace

template <typename Real>
BasicSequenceTensor<Real> scan_recurrent(const Discrete<Real>& disc, std::span<const Real> c,
                                         const BasicSequenceTensor<Real>& x,
                                         std::span<const Real> h0) {
  check_scan_shapes(disc, c, x.channels(), h0);
  const std::size_t N = disc.state, L = x.length();
  BasicSequenceTensor<Real> y(x.channels(), L);
  std::vector<Real> h(N);
  for (std::size_t ch = 0; ch < disc.channels; ++ch) {
    const Real* ab = disc.a_bar.data() + ch * N;
    const Real* bb = disc.b_bar.data() + ch * N;
    const Real* cc = c.data() + ch * N;
    if (h0.empty()) {
      std::fill(h.begin(), h.end(), Real(0));
    } else {
      std::copy_n(h0.data() + ch * N, N, h.begin());
    }
    for (std::size_t k = 0; k < L; ++k) {
      const Real xk = x(ch, k);
      Real acc = 0;
      for (std::size_t s = 0; s < N; ++s) {
        h[s] = ab[s] * h[s] + bb[s] * xk;
        acc += cc[s] * h[s];
      }
      y(ch, k) = acc;
    }
  }
  return y;
}

template <typename Real>
Kernel<Real> build_kernel(const Discrete<Real>& disc, std::span<const Real> c, std::size_t L) {
  check_scan_shapes(disc, c, disc.channels, {});
  const std::size_t N = disc.state;
  Kernel<Real> k{disc.channels, L, std::vector<Real>(disc.channels * L)};
  std::vector<Real> power(N);
  for (std::size_t ch = 0; ch < disc.channels; ++ch) {
    std::copy_n(disc.b_bar.data() + ch * N, N, power.begin());  // Ā^0 B̄
    for (std::size_t j = 0; j < L; ++j) {
      Real acc = 0;
      for (std::size_t s = 0; s < N; ++s) {
        acc += c[ch * N + s] * power[s];
        power[s] *= disc.a_bar[ch * N + s];
      }
      k.m[ch * L + j] = acc;
    }
  }
  return k;
}

template <typename Real>
Kernel<Real> build_kernel(const LtiParams<Real>& p, std::size_t L) {
  return build_kernel(discretize_zoh(p), std::span<const Real>(p.c), L);
}

template <typename Real>
BasicSequenceTensor<Real> convolve(const BasicSequenceTensor<Real>& x, const Kernel<Real>& kernel) {
  require(x.channels() == kernel.channels, "convolve: channel mismatch");
  require(x.length() <= kernel.length, "convolve: kernel shorter than input");
  const std::size_t L = x.length();
  BasicSequenceTensor<Real> y(x.channels(), L);
  for (std::size_t ch = 0; ch < x.channels(); ++ch) {
    const Real* m = kernel.m.data() + ch * kernel.length;
    for (std::size_t k = 0; k < L; ++k) {
      Real acc = 0;
      for (std::size_t j = 0; j <= k; ++j) acc += m[j] * x(ch, k - j);
      y(ch, k) = acc;
    }
  }
  return y;
}

template <typename Real>
ScanGradients<Real> scan_backward(const Discrete<Real>& disc, std::span<const Real> c,
                                  const BasicSequenceTensor<Real>& x,
                                  const BasicSequenceTensor<Real>& dy,
                                  std::span<const Real> h0) {
  check_scan_shapes(disc, c, x.channels(), h0);
  require(dy.same_shape(x), "scan_backward: dy shape mismatch");
  const std::size_t N = disc.state, L = x.length(), dn = disc.channels * N;

  ScanGradients<Real> g{BasicSequenceTensor<Real>(x.channels(), L), std::vector<Real>(dn),
                        std::vector<Real>(dn), std::vector<Real>(dn), std::vector<Real>(dn)};
  std::vector<Real> states((L + 1) * N);  // states[k+1] = h_k, states[0] = h0
  std::vector<Real> adj(N);

  for (std::size_t ch = 0; ch < disc.channels; ++ch) {
    const Real* ab = disc.a_bar.data() + ch * N;
    const Real* bb = disc.b_bar.data() + ch * N;
    const Real* cc = c.data() + ch * N;
    for (std::size_t s = 0; s < N; ++s) states[s] = h0.empty() ? Real(0) : h0[ch * N + s];
    for (std::size_t k = 0; k < L; ++k)
      for (std::size_t s = 0; s < N; ++s)
        states[(k + 1) * N + s] = ab[s] * states[k * N + s] + bb[s] * x(ch, k);

    // adj = dL/dh_k, swept right to left.
    std::fill(adj.begin(), adj.end(), Real(0));
    for (std::size_t k = L; k-- > 0;) {
      const Real gy = dy(ch, k);
      Real dx = 0;
      for (std::size_t s = 0; s < N; ++s) {
        const std::size_t i = ch * N + s;
        const Real h = states[(k + 1) * N + s];
        g.dc[i] += gy * h;
        adj[s] = cc[s] * gy + adj[s];
        dx += bb[s] * adj[s];
        g.db_bar[i] += adj[s] * x(ch, k);
        g.da_bar[i] += adj[s] * states[k * N + s];
        adj[s] *= ab[s];  // carry to h_{k-1}
      }
      g.dx(ch, k) = dx;
    }
    for (std::size_t s = 0; s < N; ++s) g.dh0[ch * N + s] = adj[s];
  }
  return g;
}

#define RAINMAMBA_SSM_INSTANTIATE(Real)                                                        \
  template struct LtiParams<Real>;                                                             \
  template Discrete<Real> discretize_zoh(const LtiParams<Real>&);                              \
  template BasicSequenceTensor<Real> scan_recurrent(const Discrete<Real>&,                     \
                                                    std::span<const Real>,                     \
                                                    const BasicSequenceTensor<Real>&,          \
                                                    std::span<const Real>);                    \
  template Kernel<Real> build_kernel(const Discrete<Real>&, std::span<const Real>, std::size_t); \
  template Kernel<Real> build_kernel(const LtiParams<Real>&, std::size_t);                     \
  template BasicSequenceTensor<Real> convolve(const BasicSequenceTensor<Real>&,                \
                                              const Kernel<Real>&);                            \
  template ScanGradients<Real> scan_backward(const Discrete<Real>&, std::span<const Real>,     \
                                             const BasicSequenceTensor<Real>&,                 \
                                             const BasicSequenceTensor<Real>&,                 \
                                             std::span<const Real>);

RAINMAMBA_SSM_INSTANTIATE(double)
RAINMAMBA_SSM_INSTANTIATE(float)
#undef RAINMAMBA_SSM_INSTANTIATE

void SelectiveParams::validate() const {
  const std::size_t d = channels, n = state;
  require(a.size() == d * n && w_b.size() == n * d && bias_b.size() == n &&
              w_c.size() == n * d && bias_c.size() == n && w_delta.size() == d * d &&
              bias_delta.size() == d,
          "selective_scan: parameter shape mismatch");
}

SelectiveParams SelectiveParams::zeros(std::size_t d, std::size_t n) {
  SelectiveParams p;
  p.channels = d;
  p.state = n;
  p.a.assign(d * n, 0.0);
  p.w_b.assign(n * d, 0.0);
  p.bias_b.assign(n, 0.0);
  p.w_c.assign(n * d, 0.0);
  p.bias_c.assign(n, 0.0);
  p.w_delta.assign(d * d, 0.0);
  p.bias_delta.assign(d, 0.0);
  return p;
}

SelectiveParams SelectiveParams::random(std::size_t d, std::size_t n, Rng& rng) {
  SelectiveParams p = zeros(d, n);
  for (std::size_t ch = 0; ch < d; ++ch)
    for (std::size_t s = 0; s < n; ++s) p.a[ch * n + s] = -static_cast<double>(s + 1);
  const double proj = 1.0 / std::sqrt(static_cast<double>(d));
  p.w_b = init_params(n * d, rng, proj);
  p.w_c = init_params(n * d, rng, proj);
  p.bias_b = init_params(n, rng, 0.5);
  p.bias_c = init_params(n, rng, 0.5);
  p.w_delta = init_params(d * d, rng, 0.1 * proj);
  for (double& b : p.bias_delta) {
    const double dt = std::exp(rng.uniform(std::log(0.01), std::log(0.1)));
    b = softplus_inverse(dt);
  }
  return p;
}

SequenceTensor selective_scan(const SelectiveParams& p, const SequenceTensor& x) {
  p.validate();
  require(x.channels() == p.channels, "selective_scan: input channels do not match parameters");
  const std::size_t d = p.channels, N = p.state, L = x.length();

  SequenceTensor y(d, L);
  std::vector<double> h(d * N, 0.0);
  std::vector<double> xk(d), bk(N), ck(N), dk(d);
  for (std::size_t k = 0; k < L; ++k) {
    for (std::size_t j = 0; j < d; ++j) xk[j] = x(j, k);
    for (std::size_t s = 0; s < N; ++s) {
      double sb = 0.0, sc = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        sb += p.w_b[s * d + j] * xk[j];
        sc += p.w_c[s * d + j] * xk[j];
      }
      bk[s] = sb + p.bias_b[s];
      ck[s] = sc + p.bias_c[s];
    }
    for (std::size_t ch = 0; ch < d; ++ch) {
      double sd = 0.0;
      for (std::size_t j = 0; j < d; ++j) sd += p.w_delta[ch * d + j] * xk[j];
      dk[ch] = softplus(sd + p.bias_delta[ch]);
    }
    for (std::size_t ch = 0; ch < d; ++ch) {
      double acc = 0.0;
      for (std::size_t s = 0; s < N; ++s) {
        double a_bar, b_bar;
        zoh(p.a[ch * N + s], dk[ch], bk[s], a_bar, b_bar);
        double& hs = h[ch * N + s];
        hs = a_bar * hs + b_bar * xk[ch];
        acc += ck[s] * hs;
      }
      y(ch, k) = acc;
    }
  }
  return y;
}

LtiParams<double> constant_projection_system(const SelectiveParams& p) {
  p.validate();
  LtiParams<double> lti;
  lti.channels = p.channels;
  lti.state = p.state;
  lti.a = p.a;
  lti.b.resize(p.channels * p.state);
  lti.c.resize(p.channels * p.state);
  lti.delta.resize(p.channels);
  for (std::size_t ch = 0; ch < p.channels; ++ch) {
    for (std::size_t s = 0; s < p.state; ++s) {
      lti.b[ch * p.state + s] = p.bias_b[s];
      lti.c[ch * p.state + s] = p.bias_c[s];
    }
    lti.delta[ch] = softplus(0.0 + p.bias_delta[ch]);
  }
  return lti;
}

Kernel<double> build_kernel(const SelectiveParams&, std::size_t) {
  throw Error("kernel form requires LTI");
}

}  // namespace rainmamba::ssm
