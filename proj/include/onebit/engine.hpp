#pragma once

// Scalar-variance message-passing loop with interleaved parameter estimation.
// Per iteration: output nonlinear -> input linear -> signal-prior estimate ->
// input nonlinear -> output linear -> noise estimate -> convergence check.

#include <Eigen/Dense>
#include <stdexcept>
#include <utility>
#include <vector>

#include "onebit/channel_1bit.hpp"
#include "onebit/model.hpp"

namespace onebit {

struct SolveReport {
  Eigen::VectorXd x_hat;
  SignalPriorParams lambda_hat;
  NoisePriorParams theta_hat;
  int iterations = 0;
  bool converged = false;
  std::vector<double> residual_trace;  // relative change of x_hat per iteration
};

// Thrown when any state block turns non-finite.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(int iteration)
      : std::runtime_error("solver state diverged at iteration " + std::to_string(iteration)),
        iteration(iteration) {}
  int iteration;
};

// Score and its variance from already-computed channel moments:
//   s = (E[z] - q) / tau_q,  tau_s = mean((1 - Var[z]/tau_q) / tau_q)
std::pair<Eigen::VectorXd, double> output_nonlinear_from_moments(const ChannelMoments& moments,
                                                                 const Eigen::Ref<const Eigen::VectorXd>& q,
                                                                 double tau_q);

std::pair<Eigen::VectorXd, double> output_nonlinear_update(const GampState& state,
                                                           const Problem& problem,
                                                           const NoisePriorParams& theta);

// r = x_hat + tau_r A^T s with tau_r = 1 / ((||A||_F^2 / N) tau_s).
std::pair<Eigen::VectorXd, double> input_linear_update(const GampState& state,
                                                       const Problem& problem);

// q = A x_hat - tau_q s with tau_q = (||A||_F^2 / M) tau_x.
std::pair<Eigen::VectorXd, double> output_linear_update(const GampState& state,
                                                        const Problem& problem);

// Convex blend moving `rate` of the way to the fresh iterate (rate 1 keeps
// the fresh value unchanged).
double damp(double fresh, double previous, double rate);
Eigen::VectorXd damp(const Eigen::VectorXd& fresh, const Eigen::VectorXd& previous, double rate);

// Neutral starting points for parameter estimation.
SignalPriorParams default_signal_init(int num_components);
NoisePriorParams default_noise_init();

SolveReport solve(const Problem& problem, const SignalPriorParams& lambda_init,
                  const NoisePriorParams& theta_init, const SolverConfig& config);

}  // namespace onebit
