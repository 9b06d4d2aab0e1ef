#include "onebit/engine.hpp"

#include <algorithm>
#include <cmath>

#include "onebit/prior_bgm.hpp"

namespace onebit {

std::pair<Eigen::VectorXd, double> output_nonlinear_from_moments(
    const ChannelMoments& moments, const Eigen::Ref<const Eigen::VectorXd>& q, double tau_q) {
  const double inv_tq = 1.0 / tau_q;
  Eigen::VectorXd s = (moments.mean_z - q) * inv_tq;
  double tau_s = 0.0;
  for (Eigen::Index m = 0; m < q.size(); ++m)
    tau_s += inv_tq * (1.0 - moments.var_z[m] * inv_tq);
  tau_s /= static_cast<double>(q.size());
  return {std::move(s), tau_s};
}

std::pair<Eigen::VectorXd, double> output_nonlinear_update(const GampState& state,
                                                           const Problem& problem,
                                                           const NoisePriorParams& theta) {
  const ChannelMoments moments =
      posterior_moments_z(state.q, state.tau_q, problem.y, theta.gamma_w);
  return output_nonlinear_from_moments(moments, state.q, state.tau_q);
}

std::pair<Eigen::VectorXd, double> input_linear_update(const GampState& state,
                                                       const Problem& problem) {
  if (!(state.tau_s > 0.0)) throw std::invalid_argument("nonpositive tau_s");
  const double tau_r = 1.0 / (problem.frob_sq / static_cast<double>(problem.n()) * state.tau_s);
  Eigen::VectorXd r = state.x_hat + tau_r * (problem.A.transpose() * state.s);
  return {std::move(r), tau_r};
}

std::pair<Eigen::VectorXd, double> output_linear_update(const GampState& state,
                                                        const Problem& problem) {
  if (!(state.tau_x > 0.0)) throw std::invalid_argument("nonpositive tau_x");
  const double tau_q = problem.frob_sq / static_cast<double>(problem.m()) * state.tau_x;
  Eigen::VectorXd q = problem.A * state.x_hat - tau_q * state.s;
  return {std::move(q), tau_q};
}

double damp(double fresh, double previous, double rate) {
  return rate * fresh + (1.0 - rate) * previous;
}

Eigen::VectorXd damp(const Eigen::VectorXd& fresh, const Eigen::VectorXd& previous, double rate) {
  return rate * fresh + (1.0 - rate) * previous;
}

SignalPriorParams default_signal_init(int num_components) {
  SignalPriorParams lambda;
  lambda.kappa = 0.5;
  lambda.components.resize(std::max(num_components, 1));
  for (auto& c : lambda.components) {
    c.weight = 1.0 / static_cast<double>(lambda.components.size());
    c.mean = 0.0;
    c.variance = 1.0;
  }
  return lambda;
}

NoisePriorParams default_noise_init() { return NoisePriorParams{1e-2}; }

namespace {

void check_config(const SolverConfig& c) {
  if (c.max_iters < 0) throw std::invalid_argument("invalid config: max_iters");
  if (!(c.damping_rate > 0.0 && c.damping_rate <= 1.0))
    throw std::invalid_argument("invalid config: damping_rate");
  if (!(c.convergence_tol > 0.0)) throw std::invalid_argument("invalid config: convergence_tol");
  if (c.em_inner_iters < 0) throw std::invalid_argument("invalid config: em_inner_iters");
  if (!(c.variance_floor > 0.0)) throw std::invalid_argument("invalid config: variance_floor");
}

bool state_finite(const GampState& st) {
  return st.x_hat.allFinite() && st.q.allFinite() && st.s.allFinite() && st.r.allFinite() &&
         std::isfinite(st.tau_x) && std::isfinite(st.tau_q) && std::isfinite(st.tau_s) &&
         std::isfinite(st.tau_r);
}

}  // namespace

SolveReport solve(const Problem& problem, const SignalPriorParams& lambda_init,
                  const NoisePriorParams& theta_init, const SolverConfig& config) {
  require_valid_prior(lambda_init);
  if (!(theta_init.gamma_w >= 0.0) || !std::isfinite(theta_init.gamma_w))
    throw std::invalid_argument("negative gamma_w");
  check_config(config);

  const int m = problem.m();
  const int n = problem.n();
  const double rate = config.damping_rate;
  const double floor = config.variance_floor;

  SignalPriorParams lambda = lambda_init;
  NoisePriorParams theta = theta_init;

  GampState st;
  st.x_hat = Eigen::VectorXd::Zero(n);
  const double prior_m2 = lambda.second_moment();
  st.tau_x = prior_m2 > 0.0 ? prior_m2 : 1.0;
  st.s = Eigen::VectorXd::Zero(m);
  st.tau_s = 0.0;
  st.r = st.x_hat;
  st.tau_r = 1.0;
  st.q = problem.A * st.x_hat;
  st.tau_q = problem.frob_sq / static_cast<double>(m) * st.tau_x;

  SolveReport report;
  report.residual_trace.reserve(std::min(config.max_iters, 256));

  for (int t = 0; t < config.max_iters; ++t) {
    auto [s_new, tau_s_new] = output_nonlinear_update(st, problem, theta);
    st.s = damp(s_new, st.s, rate);
    st.tau_s = std::max(damp(tau_s_new, st.tau_s, rate), floor);

    std::tie(st.r, st.tau_r) = input_linear_update(st, problem);

    if (config.estimate_signal_params)
      lambda = estimate_signal_params(st.r, st.tau_r, lambda, config.em_inner_iters, floor);

    const SignalMoments in = posterior_moments_x(st.r, st.tau_r, lambda);
    const Eigen::VectorXd x_prev = st.x_hat;
    st.x_hat = damp(in.x_hat, st.x_hat, rate);
    st.tau_x = std::max(damp(in.tau_x, st.tau_x, rate), floor);

    std::tie(st.q, st.tau_q) = output_linear_update(st, problem);

    if (config.estimate_noise_param)
      theta.gamma_w = estimate_noise_param(st.q, st.tau_q, problem.y, theta.gamma_w,
                                           kNoiseAscentIters);

    if (!state_finite(st)) throw DivergenceError(t);

    const double delta = (st.x_hat - x_prev).norm();
    const double residual = delta / std::max(x_prev.norm(), 1e-12);
    report.residual_trace.push_back(residual);
    report.iterations = t + 1;
    if (residual < config.convergence_tol) {
      report.converged = true;
      break;
    }
  }

  report.x_hat = st.x_hat;
  report.lambda_hat = lambda;
  report.theta_hat = theta;
  return report;
}

}  // namespace onebit
