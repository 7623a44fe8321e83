#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "rainmamba/rng.hpp"
#include "rainmamba/tensor.hpp"

namespace rainmamba::ssm {

// All parameter arrays are row-major [channel][state] with a diagonal state
// matrix per channel.

template <typename Real>
struct LtiParams {
  std::size_t channels = 0;
  std::size_t state = 0;
  std::vector<Real> a;      // d x N, <= 0
  std::vector<Real> b;      // d x N
  std::vector<Real> c;      // d x N
  std::vector<Real> delta;  // d, > 0

  void validate() const;
  /// S4D-real initialization: a_n = -(n+1), Δ log-uniform in [dt_min, dt_max].
  static LtiParams random(std::size_t d, std::size_t n, Rng& rng, double dt_min = 1e-3,
                          double dt_max = 1e-1);
};

template <typename To, typename From>
LtiParams<To> cast_params(const LtiParams<From>& p) {
  auto conv = [](const std::vector<From>& v) { return std::vector<To>(v.begin(), v.end()); };
  return {p.channels, p.state, conv(p.a), conv(p.b), conv(p.c), conv(p.delta)};
}

template <typename Real>
struct Discrete {
  std::size_t channels = 0;
  std::size_t state = 0;
  std::vector<Real> a_bar;  // d x N
  std::vector<Real> b_bar;  // d x N
};

template <typename Real>
struct Kernel {
  std::size_t channels = 0;
  std::size_t length = 0;
  std::vector<Real> m;  // d x L
};

inline constexpr double kZohSeriesThreshold = 1e-8;

/// Zero-order hold for one diagonal entry. Exact formula, falling back to the
/// analytic limit Δ·b when |Δa| is below kZohSeriesThreshold.
template <typename Real>
inline void zoh(Real a, Real delta, Real b, Real& a_bar, Real& b_bar) {
  const Real da = delta * a;
  a_bar = std::exp(da);
  if (std::abs(da) < static_cast<Real>(kZohSeriesThreshold)) {
    b_bar = delta * b;
  } else {
    b_bar = (std::expm1(da) / a) * b;
  }
}

template <typename Real>
Discrete<Real> discretize_zoh(const LtiParams<Real>& p);

/// h_k = Ā h_{k-1} + B̄ x_k,  y_k = Σ_n C h_k.  x is (d, L); h0 is d x N or empty.
template <typename Real>
BasicSequenceTensor<Real> scan_recurrent(const Discrete<Real>& disc, std::span<const Real> c,
                                         const BasicSequenceTensor<Real>& x,
                                         std::span<const Real> h0 = {});

/// M̄_k = Σ_n C Ā^k B̄ for k < L.
template <typename Real>
Kernel<Real> build_kernel(const Discrete<Real>& disc, std::span<const Real> c, std::size_t L);
template <typename Real>
Kernel<Real> build_kernel(const LtiParams<Real>& p, std::size_t L);

/// Causal convolution y_k = Σ_{j<=k} M̄_j x_{k-j}.
template <typename Real>
BasicSequenceTensor<Real> convolve(const BasicSequenceTensor<Real>& x, const Kernel<Real>& kernel);

template <typename Real>
struct ScanGradients {
  BasicSequenceTensor<Real> dx;
  std::vector<Real> da_bar;
  std::vector<Real> db_bar;
  std::vector<Real> dc;
  std::vector<Real> dh0;
};

/// Adjoint of scan_recurrent for the upstream gradient dy (same shape as y).
template <typename Real>
ScanGradients<Real> scan_backward(const Discrete<Real>& disc, std::span<const Real> c,
                                  const BasicSequenceTensor<Real>& x,
                                  const BasicSequenceTensor<Real>& dy,
                                  std::span<const Real> h0 = {});

/// Input-dependent parameters. Per token k with channel vector x_k:
///   B_k = W_B x_k + bias_B,  C_k = W_C x_k + bias_C   (length N, shared by channels)
///   Δ_k = softplus(W_Δ x_k + bias_Δ)                  (length d)
struct SelectiveParams {
  std::size_t channels = 0;
  std::size_t state = 0;
  std::vector<double> a;           // d x N
  std::vector<double> w_b;         // N x d
  std::vector<double> bias_b;      // N
  std::vector<double> w_c;         // N x d
  std::vector<double> bias_c;      // N
  std::vector<double> w_delta;     // d x d
  std::vector<double> bias_delta;  // d

  void validate() const;
  static SelectiveParams random(std::size_t d, std::size_t n, Rng& rng);
  static SelectiveParams zeros(std::size_t d, std::size_t n);

  template <typename F>
  void for_each_param(F&& f) {
    f(a), f(w_b), f(bias_b), f(w_c), f(bias_c), f(w_delta), f(bias_delta);
  }
};

SequenceTensor selective_scan(const SelectiveParams& p, const SequenceTensor& x);

/// The LTI system a selective configuration reduces to when its projection
/// weights are zero.
LtiParams<double> constant_projection_system(const SelectiveParams& p);

/// The convolution form needs time-invariant parameters; always throws.
Kernel<double> build_kernel(const SelectiveParams& p, std::size_t L);

}  // namespace rainmamba::ssm
