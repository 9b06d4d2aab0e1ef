#include "onebit/prior_bgm.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "onebit/numerics.hpp"

namespace onebit {

namespace {

// Per-component constants for evaluating log membership terms of one entry:
//   l0(r)  = log(1-kappa) + log N(r | 0, tau_r)
//   l_i(r) = log(kappa xi_i) + log N(r | mu_i, gamma_x_i + tau_r)
struct LogTerms {
  double lc0;                    // log(1-kappa) - log sqrt(2 pi tau_r)
  double inv2t;                  // 0.5 / tau_r
  std::vector<double> lc;        // log(kappa xi_i) - log sqrt(2 pi v_i)
  std::vector<double> inv2v;     // 0.5 / v_i
  std::vector<double> mu;

  LogTerms(double tau_r, const SignalPriorParams& lambda) {
    if (!(tau_r > 0.0) || !std::isfinite(tau_r))
      throw std::invalid_argument("nonpositive tau_r");
    const double log_spike = lambda.kappa < 1.0 ? std::log1p(-lambda.kappa) : -num::kInf;
    lc0 = log_spike - num::kLogSqrt2Pi - 0.5 * std::log(tau_r);
    inv2t = 0.5 / tau_r;
    const int d = lambda.num_components();
    lc.resize(d);
    inv2v.resize(d);
    mu.resize(d);
    for (int i = 0; i < d; ++i) {
      const auto& c = lambda.components[i];
      const double v = c.variance + tau_r;
      const double kxi = lambda.kappa * c.weight;
      lc[i] = (kxi > 0.0 ? std::log(kxi) : -num::kInf) - num::kLogSqrt2Pi - 0.5 * std::log(v);
      inv2v[i] = 0.5 / v;
      mu[i] = c.mean;
    }
  }

  double l0(double r) const { return lc0 - r * r * inv2t; }
  double li(double r, int i) const {
    const double d = r - mu[i];
    return lc[i] - d * d * inv2v[i];
  }
};

}  // namespace

double psi_norm(double r, double tau_r, const SignalPriorParams& lambda) {
  require_valid_prior(lambda);
  LogTerms lt(tau_r, lambda);
  std::vector<double> logs(lambda.num_components() + 1);
  logs[0] = lt.l0(r);
  for (int i = 0; i < lambda.num_components(); ++i) logs[i + 1] = lt.li(r, i);
  return std::exp(num::logsumexp(logs));
}

double log_marginal(const Eigen::Ref<const Eigen::VectorXd>& r, double tau_r,
                    const SignalPriorParams& lambda) {
  require_valid_prior(lambda);
  LogTerms lt(tau_r, lambda);
  const int d = lambda.num_components();
  std::vector<double> logs(d + 1);
  double total = 0.0;
  for (Eigen::Index n = 0; n < r.size(); ++n) {
    logs[0] = lt.l0(r[n]);
    for (int i = 0; i < d; ++i) logs[i + 1] = lt.li(r[n], i);
    total += num::logsumexp(logs);
  }
  return total;
}

SignalMoments posterior_moments_x(const Eigen::Ref<const Eigen::VectorXd>& r, double tau_r,
                                  const SignalPriorParams& lambda) {
  require_valid_prior(lambda);
  LogTerms lt(tau_r, lambda);
  const int d = lambda.num_components();
  const Eigen::Index n_entries = r.size();

  // Shrinkage coefficients of each component posterior:
  //   m_i(r) = (mu_i tau_r + r gamma_i) / v_i,  c_i = gamma_i tau_r / v_i
  std::vector<double> a(d), b(d), cvar(d);
  for (int i = 0; i < d; ++i) {
    const double g = lambda.components[i].variance;
    const double v = g + tau_r;
    a[i] = lambda.components[i].mean * tau_r / v;
    b[i] = g / v;
    cvar[i] = g * tau_r / v;
  }

  SignalMoments out;
  out.x_hat.resize(n_entries);
  std::vector<double> logs(d + 1), prob(d), center(d);
  double var_sum = 0.0;
  for (Eigen::Index n = 0; n < n_entries; ++n) {
    const double rn = r[n];
    logs[0] = lt.l0(rn);
    for (int i = 0; i < d; ++i) logs[i + 1] = lt.li(rn, i);
    const double lz = num::logsumexp(logs);
    double mean = 0.0;
    for (int i = 0; i < d; ++i) {
      prob[i] = std::exp(logs[i + 1] - lz);
      center[i] = a[i] + b[i] * rn;
      mean += prob[i] * center[i];
    }
    out.x_hat[n] = mean;
    // Grouped central form of the mixture variance: every term is
    // nonnegative, so a tight posterior cannot lose the variance to
    // cancellation the way second_moment - mean^2 would.
    double var = std::exp(logs[0] - lz) * mean * mean;
    for (int i = 0; i < d; ++i) {
      const double dm = center[i] - mean;
      var += prob[i] * (cvar[i] + dm * dm);
    }
    var_sum += var;
  }
  out.tau_x = var_sum / static_cast<double>(n_entries);
  return out;
}

Responsibilities responsibilities(const Eigen::Ref<const Eigen::VectorXd>& r, double tau_r,
                                  const SignalPriorParams& lambda) {
  require_valid_prior(lambda);
  LogTerms lt(tau_r, lambda);
  const int d = lambda.num_components();
  const Eigen::Index n_entries = r.size();
  Responsibilities resp;
  resp.psi0.resize(n_entries);
  resp.psi.resize(n_entries, d);
  std::vector<double> logs(d + 1);
  for (Eigen::Index n = 0; n < n_entries; ++n) {
    logs[0] = lt.l0(r[n]);
    for (int i = 0; i < d; ++i) logs[i + 1] = lt.li(r[n], i);
    const double lz = num::logsumexp(logs);
    resp.psi0[n] = std::exp(logs[0] - lz);
    for (int i = 0; i < d; ++i) resp.psi(n, i) = std::exp(logs[i + 1] - lz);
  }
  return resp;
}

WeightsMeansUpdate em_update_weights_means(const Responsibilities& resp,
                                           const Eigen::Ref<const Eigen::VectorXd>& r,
                                           const SignalPriorParams& lambda) {
  const int d = static_cast<int>(resp.psi.cols());
  const Eigen::Index n_entries = r.size();
  const double starvation_floor = 1e-8 * static_cast<double>(n_entries);

  WeightsMeansUpdate out;
  out.xi.resize(d);
  out.mu.resize(d);
  out.starved.assign(d, 0);

  const double s0 = resp.psi0.sum();
  double total = 0.0;
  Eigen::VectorXd si(d), sri(d);
  for (int i = 0; i < d; ++i) {
    si[i] = resp.psi.col(i).sum();
    sri[i] = resp.psi.col(i).dot(r);
    total += si[i];
  }

  out.kappa = total / (s0 + total);
  for (int i = 0; i < d; ++i) {
    out.starved[i] = si[i] < starvation_floor ? 1 : 0;
    out.xi[i] = total > 0.0 ? si[i] / total : lambda.components[i].weight;
    out.mu[i] = out.starved[i] ? lambda.components[i].mean : sri[i] / si[i];
  }
  return out;
}

GmVarianceDerivs gm_variance_derivatives(const Eigen::Ref<const Eigen::VectorXd>& psi_i,
                                         const Eigen::Ref<const Eigen::VectorXd>& r, double tau_r,
                                         double gamma_x_i, double mu_i) {
  const double v = gamma_x_i + tau_r;
  const double inv_v = 1.0 / v;
  GmVarianceDerivs out;
  for (Eigen::Index n = 0; n < r.size(); ++n) {
    const double d2 = (r[n] - mu_i) * (r[n] - mu_i);
    out.first += psi_i[n] * (0.5 * d2 * inv_v * inv_v - 0.5 * inv_v);
    out.second += psi_i[n] * (-d2 * inv_v * inv_v * inv_v + 0.5 * inv_v * inv_v);
  }
  return out;
}

namespace {

// gamma-dependent part of the EM objective for one component.
double gm_variance_objective(const Eigen::Ref<const Eigen::VectorXd>& psi_i,
                             const Eigen::Ref<const Eigen::VectorXd>& r, double tau_r,
                             double gamma, double mu_i) {
  const double v = gamma + tau_r;
  const double lc = -num::kLogSqrt2Pi - 0.5 * std::log(v);
  const double inv2v = 0.5 / v;
  double f = 0.0;
  for (Eigen::Index n = 0; n < r.size(); ++n) {
    const double d = r[n] - mu_i;
    f += psi_i[n] * (lc - d * d * inv2v);
  }
  return f;
}

}  // namespace

double update_gm_variance(const Eigen::Ref<const Eigen::VectorXd>& psi_i,
                          const Eigen::Ref<const Eigen::VectorXd>& r, double tau_r,
                          double gamma_x_i, double mu_i, double variance_floor) {
  const GmVarianceDerivs d = gm_variance_derivatives(psi_i, r, tau_r, gamma_x_i, mu_i);
  if (d.second < 0.0) {
    const double cand = gamma_x_i - d.first / d.second;
    return std::max(cand, variance_floor);
  }
  if (d.first == 0.0) return std::max(gamma_x_i, variance_floor);
  // Non-concave point: move along the gradient, halving until the objective
  // improves.
  const double dir = d.first > 0.0 ? 1.0 : -1.0;
  const double f_cur = gm_variance_objective(psi_i, r, tau_r, gamma_x_i, mu_i);
  double step = 0.5 * gamma_x_i;
  for (int k = 0; k < 20; ++k, step *= 0.5) {
    const double cand = std::max(gamma_x_i + dir * step, variance_floor);
    if (cand == gamma_x_i) break;
    if (gm_variance_objective(psi_i, r, tau_r, cand, mu_i) > f_cur) return cand;
  }
  return std::max(gamma_x_i, variance_floor);
}

SignalPriorParams estimate_signal_params(const Eigen::Ref<const Eigen::VectorXd>& r, double tau_r,
                                         const SignalPriorParams& lambda, int iters,
                                         double variance_floor, EmReport* report) {
  require_valid_prior(lambda);
  SignalPriorParams cur = lambda;
  for (int it = 0; it < iters; ++it) {
    const Responsibilities resp = responsibilities(r, tau_r, cur);
    const WeightsMeansUpdate upd = em_update_weights_means(resp, r, cur);
    cur.kappa = upd.kappa;
    for (int i = 0; i < cur.num_components(); ++i) {
      cur.components[i].weight = upd.xi[i];
      cur.components[i].mean = upd.mu[i];
      if (upd.starved[i]) {
        if (report) ++report->starved_events;
        continue;  // freeze mean and variance of a starved component
      }
      cur.components[i].variance = update_gm_variance(resp.psi.col(i), r, tau_r,
                                                      cur.components[i].variance,
                                                      cur.components[i].mean, variance_floor);
    }
  }
  return cur;
}

}  // namespace onebit
