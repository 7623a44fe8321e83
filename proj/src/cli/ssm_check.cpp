#include <algorithm>
#include <cmath>

#include "rainmamba/cli.hpp"
#include "rainmamba/ssm.hpp"

namespace rainmamba::cli {

namespace {

template <typename Real>
BasicSequenceTensor<Real> random_input(std::size_t d, std::size_t L, Rng& rng) {
  BasicSequenceTensor<Real> x(d, L);
  for (std::size_t ch = 0; ch < d; ++ch)
    for (auto& v : x.row(ch)) v = static_cast<Real>(rng.uniform(-1.0, 1.0));
  return x;
}

template <typename Real>
double max_rel_dev(const BasicSequenceTensor<Real>& a, const BasicSequenceTensor<Real>& b) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t ch = 0; ch < a.channels(); ++ch)
    for (std::size_t k = 0; k < a.length(); ++k) {
      diff = std::max(diff, std::abs(static_cast<double>(a(ch, k)) - static_cast<double>(b(ch, k))));
      scale = std::max(scale, std::abs(static_cast<double>(a(ch, k))));
    }
  return scale > 0.0 ? diff / scale : diff;
}

template <typename Real>
double recurrent_vs_convolution(const ssm::LtiParams<Real>& p, const BasicSequenceTensor<Real>& x) {
  const auto disc = ssm::discretize_zoh(p);
  const auto y_rec = ssm::scan_recurrent<Real>(disc, p.c, x);
  const auto y_conv = ssm::convolve(x, ssm::build_kernel(p, x.length()));
  return max_rel_dev(y_rec, y_conv);
}

// Per-entry relative error; the floor keeps exact zeros from dividing by zero.
double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

double weighted_output(const ssm::Discrete<double>& disc, const std::vector<double>& c,
                       const SequenceTensor& x, const std::vector<double>& h0,
                       const SequenceTensor& w) {
  const auto y = ssm::scan_recurrent<double>(disc, c, x, h0);
  double s = 0.0;
  for (std::size_t ch = 0; ch < y.channels(); ++ch)
    for (std::size_t k = 0; k < y.length(); ++k) s += w(ch, k) * y(ch, k);
  return s;
}

double gradient_instance(Rng& rng, double h) {
  const std::size_t d = 2, n = 4, L = 16;
  ssm::Discrete<double> disc{d, n, std::vector<double>(d * n), std::vector<double>(d * n)};
  std::vector<double> c(d * n), h0(d * n);
  for (auto& v : disc.a_bar) v = rng.uniform(0.5, 0.99);
  for (auto& v : disc.b_bar) v = rng.uniform(-1.0, 1.0);
  for (auto& v : c) v = rng.uniform(-1.0, 1.0);
  for (auto& v : h0) v = rng.uniform(-1.0, 1.0);
  auto x = random_input<double>(d, L, rng);
  const auto w = random_input<double>(d, L, rng);

  const auto g = ssm::scan_backward<double>(disc, c, x, w, h0);
  double worst = 0.0;
  auto probe = [&](double& slot, double analytic) {
    const double saved = slot;
    slot = saved + h;
    const double up = weighted_output(disc, c, x, h0, w);
    slot = saved - h;
    const double down = weighted_output(disc, c, x, h0, w);
    slot = saved;
    worst = std::max(worst, rel_err(analytic, (up - down) / (2.0 * h)));
  };
  for (std::size_t i = 0; i < d * n; ++i) {
    probe(disc.a_bar[i], g.da_bar[i]);
    probe(disc.b_bar[i], g.db_bar[i]);
    probe(c[i], g.dc[i]);
    probe(h0[i], g.dh0[i]);
  }
  for (std::size_t ch = 0; ch < d; ++ch)
    for (std::size_t k = 0; k < L; ++k) probe(x(ch, k), g.dx(ch, k));
  return worst;
}

double selective_instance(Rng& rng) {
  const std::size_t d = 4, n = 8, L = 32;
  auto p = ssm::SelectiveParams::random(d, n, rng);
  std::fill(p.w_b.begin(), p.w_b.end(), 0.0);
  std::fill(p.w_c.begin(), p.w_c.end(), 0.0);
  std::fill(p.w_delta.begin(), p.w_delta.end(), 0.0);
  for (auto& v : p.bias_b) v = rng.uniform(-1.0, 1.0);
  for (auto& v : p.bias_c) v = rng.uniform(-1.0, 1.0);
  const auto x = random_input<double>(d, L, rng);

  const auto y_sel = ssm::selective_scan(p, x);
  const auto lti = ssm::constant_projection_system(p);
  const auto y_lti = ssm::scan_recurrent<double>(ssm::discretize_zoh(lti), lti.c, x);
  double worst = 0.0;
  for (std::size_t ch = 0; ch < d; ++ch)
    for (std::size_t k = 0; k < L; ++k) worst = std::max(worst, std::abs(y_sel(ch, k) - y_lti(ch, k)));
  return worst;
}

}  // namespace

SsmCheckReport run_ssm_check(const SsmCheckOptions& options) {
  SsmCheckReport r;
  Rng root(options.seed);

  Rng eq_rng = root.fork(1);
  for (std::size_t i = 0; i < options.equivalence_systems; ++i) {
    const auto p = ssm::LtiParams<double>::random(4, 16, eq_rng);
    const auto x = random_input<double>(4, 64, eq_rng);
    r.equivalence_max_rel_err = std::max(r.equivalence_max_rel_err, recurrent_vs_convolution(p, x));

    const auto pf = ssm::cast_params<float>(p);
    BasicSequenceTensor<float> xf(4, 64);
    for (std::size_t ch = 0; ch < 4; ++ch)
      for (std::size_t k = 0; k < 64; ++k) xf(ch, k) = static_cast<float>(x(ch, k));
    r.equivalence_max_rel_err_f32 =
        std::max(r.equivalence_max_rel_err_f32, recurrent_vs_convolution(pf, xf));
  }

  Rng grad_rng = root.fork(2);
  for (std::size_t i = 0; i < options.gradient_instances; ++i)
    r.gradient_max_rel_err = std::max(r.gradient_max_rel_err, gradient_instance(grad_rng, options.fd_step));

  Rng sel_rng = root.fork(3);
  for (std::size_t i = 0; i < options.selective_instances; ++i)
    r.selective_max_abs_diff = std::max(r.selective_max_abs_diff, selective_instance(sel_rng));

  r.equivalence_pass = r.equivalence_max_rel_err <= options.equivalence_tol_f64;
  r.equivalence_f32_pass = r.equivalence_max_rel_err_f32 <= options.equivalence_tol_f32;
  r.gradient_pass = r.gradient_max_rel_err <= options.gradient_tol;
  r.selective_pass = r.selective_max_abs_diff == 0.0;
  return r;
}

}  // namespace rainmamba::cli
