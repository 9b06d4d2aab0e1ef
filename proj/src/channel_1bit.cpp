#include "onebit/channel_1bit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "onebit/numerics.hpp"

namespace onebit {

namespace {

void check_channel_args(double tau_q, double gamma_w) {
  if (!(tau_q > 0.0) || !std::isfinite(tau_q)) throw std::invalid_argument("nonpositive tau_q");
  if (!(gamma_w >= 0.0) || !std::isfinite(gamma_w)) throw std::invalid_argument("negative gamma_w");
}

}  // namespace

double h0(double q, double tau_q, double gamma_w) {
  check_channel_args(tau_q, gamma_w);
  const double v = tau_q + gamma_w;
  return num::std_cdf_neg(q / std::sqrt(v));
}

double h1(double q, double tau_q, double gamma_w) {
  check_channel_args(tau_q, gamma_w);
  const double v = tau_q + gamma_w;
  return q * h0(q, tau_q, gamma_w) - tau_q * num::normal_pdf(q, 0.0, v);
}

double h2(double q, double tau_q, double gamma_w) {
  check_channel_args(tau_q, gamma_w);
  const double v = tau_q + gamma_w;
  const double c = (tau_q * tau_q + 2.0 * tau_q * gamma_w) / v;
  return (q * q + tau_q) * h0(q, tau_q, gamma_w) - q * c * num::normal_pdf(q, 0.0, v);
}

ChannelMoments posterior_moments_z(const Eigen::Ref<const Eigen::VectorXd>& q, double tau_q,
                                   const Eigen::Ref<const Eigen::VectorXd>& y, double gamma_w) {
  check_channel_args(tau_q, gamma_w);
  if (q.size() != y.size()) throw std::invalid_argument("q and y size mismatch");
  const double v = tau_q + gamma_w;
  const double sv = std::sqrt(v);
  const double tq_over_sv = tau_q / sv;
  const double tq2_over_v = tau_q * tau_q / v;

  ChannelMoments out;
  out.mean_z.resize(q.size());
  out.var_z.resize(q.size());
  for (Eigen::Index m = 0; m < q.size(); ++m) {
    // g = -y q makes every downstream quantity a function of gbar alone,
    // so negating (q, y) negates mean_z bit-for-bit and fixes var_z.
    const double gbar = -y[m] * q[m] / sv;
    const double u = num::inv_mills(gbar);
    out.mean_z[m] = q[m] + y[m] * tq_over_sv * u;
    // Var = tau_q + (tau_q^2/v) u (gbar - u); cancellation-free form of
    // h2/h0 - (h1/h0)^2, lands in [0, tau_q] up to roundoff.
    const double var = tau_q + tq2_over_v * u * (gbar - u);
    out.var_z[m] = std::clamp(var, 0.0, tau_q);
    out.log_evidence += num::log_std_cdf_neg(gbar);
  }
  return out;
}

NoiseObjective noise_objective_and_derivatives(const Eigen::Ref<const Eigen::VectorXd>& q,
                                               double tau_q,
                                               const Eigen::Ref<const Eigen::VectorXd>& y,
                                               double gamma_w) {
  check_channel_args(tau_q, gamma_w);
  if (q.size() != y.size()) throw std::invalid_argument("q and y size mismatch");
  const double v = tau_q + gamma_w;
  const double sv = std::sqrt(v);

  NoiseObjective out;
  for (Eigen::Index m = 0; m < q.size(); ++m) {
    const double gbar = -y[m] * q[m] / sv;
    const double u = num::inv_mills(gbar);
    // (1/U0) dU0/dgamma_w and the log-domain second derivative.
    const double d1 = gbar * u / (2.0 * v);
    const double d2 = -d1 * d1 + (gbar * gbar * gbar - 3.0 * gbar) * u / (4.0 * v * v);
    out.g1 += num::log_std_cdf_neg(gbar);
    out.g1p += d1;
    out.g1pp += d2;
  }
  return out;
}

namespace {

double g1_value(const Eigen::Ref<const Eigen::VectorXd>& q, double tau_q,
                const Eigen::Ref<const Eigen::VectorXd>& y, double gamma_w) {
  const double sv = std::sqrt(tau_q + gamma_w);
  double g1 = 0.0;
  for (Eigen::Index m = 0; m < q.size(); ++m)
    g1 += num::log_std_cdf_neg(-y[m] * q[m] / sv);
  return g1;
}

}  // namespace

double estimate_noise_param(const Eigen::Ref<const Eigen::VectorXd>& q, double tau_q,
                            const Eigen::Ref<const Eigen::VectorXd>& y, double gamma_w_init,
                            int iters) {
  if (iters <= 0) return gamma_w_init;
  check_channel_args(tau_q, std::max(gamma_w_init, 0.0));
  double gamma = std::clamp(gamma_w_init, kGammaWFloor, kGammaWCeiling);
  for (int it = 0; it < iters; ++it) {
    const NoiseObjective obj = noise_objective_and_derivatives(q, tau_q, y, gamma);
    if (obj.g1p == 0.0) break;
    double step = obj.g1pp < 0.0 ? -obj.g1p / obj.g1pp
                                 : (obj.g1p > 0.0 ? 0.5 * gamma : -0.5 * gamma);
    double accepted = gamma;
    for (int k = 0; k < 20; ++k, step *= 0.5) {
      const double cand = std::clamp(gamma + step, kGammaWFloor, kGammaWCeiling);
      if (cand == gamma) continue;
      if (g1_value(q, tau_q, y, cand) >= obj.g1) {
        accepted = cand;
        break;
      }
    }
    if (accepted == gamma) break;  // no improving step left
    const bool settled = std::abs(accepted - gamma) <= 1e-9 * gamma;
    gamma = accepted;
    if (settled) break;
  }
  return gamma;
}

}  // namespace onebit
