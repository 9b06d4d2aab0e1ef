#pragma once

// Bernoulli-Gaussian-mixture input channel: posterior moments of x given the
// pseudo-prior r ~ N(x, tau_r), and EM updates of the prior parameters.

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "onebit/model.hpp"

namespace onebit {

struct SignalMoments {
  Eigen::VectorXd x_hat;  // posterior means, length N
  double tau_x = 0.0;     // average posterior variance
};

// Per-entry membership probabilities: psi0 for the spike, psi(n,i) for
// component i. Rows sum to 1.
struct Responsibilities {
  Eigen::VectorXd psi0;  // length N
  Eigen::MatrixXd psi;   // N x D
};

// Marginal density of one pseudo-measurement r under the prior:
//   Psi(r) = (1-kappa) N(r|0,tau_r) + sum_i kappa xi_i N(r|mu_i, gamma_x_i + tau_r)
double psi_norm(double r, double tau_r, const SignalPriorParams& lambda);

// Sum over entries of log Psi(r_n); the EM objective for the signal side.
double log_marginal(const Eigen::Ref<const Eigen::VectorXd>& r, double tau_r,
                    const SignalPriorParams& lambda);

// Posterior mean and average posterior variance of x given r, tau_r.
SignalMoments posterior_moments_x(const Eigen::Ref<const Eigen::VectorXd>& r, double tau_r,
                                  const SignalPriorParams& lambda);

// Spike/component membership probabilities for each entry.
Responsibilities responsibilities(const Eigen::Ref<const Eigen::VectorXd>& r, double tau_r,
                                  const SignalPriorParams& lambda);

struct WeightsMeansUpdate {
  double kappa = 0.0;
  Eigen::VectorXd xi;            // length D
  Eigen::VectorXd mu;            // length D
  std::vector<std::uint8_t> starved;  // per component: responsibility mass below floor
};

// Closed-form EM ascent step for (kappa, xi, mu) at fixed responsibilities.
// Starved components keep their previous mean.
WeightsMeansUpdate em_update_weights_means(const Responsibilities& resp,
                                           const Eigen::Ref<const Eigen::VectorXd>& r,
                                           const SignalPriorParams& lambda);

struct GmVarianceDerivs {
  double first = 0.0;   // d f / d gamma_x_i at the current point
  double second = 0.0;  // d^2 f / d gamma_x_i^2
};

// Derivatives of the EM objective with respect to one component variance,
// holding responsibilities psi_i and the component mean fixed.
GmVarianceDerivs gm_variance_derivatives(const Eigen::Ref<const Eigen::VectorXd>& psi_i,
                                         const Eigen::Ref<const Eigen::VectorXd>& r, double tau_r,
                                         double gamma_x_i, double mu_i);

// One second-order ascent step on a component variance. Takes a Newton step
// when the curvature is negative; otherwise backtracks along sign(f') with up
// to 20 halvings starting from step gamma/2, accepting only an improvement.
// Result is clamped to at least variance_floor.
double update_gm_variance(const Eigen::Ref<const Eigen::VectorXd>& psi_i,
                          const Eigen::Ref<const Eigen::VectorXd>& r, double tau_r,
                          double gamma_x_i, double mu_i, double variance_floor = 1e-12);

struct EmReport {
  int starved_events = 0;  // component-rounds skipped due to responsibility starvation
};

// `iters` EM rounds on the signal prior: responsibilities, closed-form
// (kappa, xi, mu), then one variance step per component. iters = 0 returns
// lambda unchanged.
SignalPriorParams estimate_signal_params(const Eigen::Ref<const Eigen::VectorXd>& r, double tau_r,
                                         const SignalPriorParams& lambda, int iters,
                                         double variance_floor = 1e-12,
                                         EmReport* report = nullptr);

}  // namespace onebit
