#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace onebit {

// One Gaussian component of the sparse signal prior.
struct GaussComponent {
  double weight = 1.0;    // xi_i, nonnegative, sums to 1 across components
  double mean = 0.0;      // mu_i
  double variance = 1.0;  // gamma_x_i > 0
};

// Bernoulli-Gaussian-mixture prior on each signal entry:
//   p(x) = (1 - kappa) * delta(x) + kappa * sum_i weight_i * N(x | mean_i, variance_i)
struct SignalPriorParams {
  double kappa = 0.5;
  std::vector<GaussComponent> components;

  int num_components() const { return static_cast<int>(components.size()); }

  // Prior second moment of one entry: kappa * sum_i xi_i (mu_i^2 + gamma_x_i).
  double second_moment() const {
    double s = 0.0;
    for (const auto& c : components) s += c.weight * (c.mean * c.mean + c.variance);
    return kappa * s;
  }
};

// Pre-quantization measurement noise variance.
struct NoisePriorParams {
  double gamma_w = 0.0;
};

// A fixed sign-measurement instance y = sign(A x + w), y in {-1, +1}^M.
struct Problem {
  Eigen::MatrixXd A;   // M x N
  Eigen::VectorXd y;   // M entries, each exactly +1 or -1
  double frob_sq = 0;  // ||A||_F^2, computed once at construction

  int m() const { return static_cast<int>(A.rows()); }
  int n() const { return static_cast<int>(A.cols()); }
};

// Scalar-variance iteration state. Variances are scalars shared across entries.
struct GampState {
  Eigen::VectorXd x_hat;  // length N
  double tau_x = 1.0;
  Eigen::VectorXd q;      // length M, pseudo-measurement mean
  double tau_q = 1.0;
  Eigen::VectorXd s;      // length M, output-side score
  double tau_s = 0.0;
  Eigen::VectorXd r;      // length N, pseudo-prior mean
  double tau_r = 1.0;
};

struct SolverConfig {
  int max_iters = 1000;
  double damping_rate = 0.1;       // fraction of the fresh iterate blended in
  double convergence_tol = 1e-6;   // relative change of x_hat
  int em_inner_iters = 1;
  bool estimate_signal_params = true;
  bool estimate_noise_param = true;
  double variance_floor = 1e-12;
  std::uint64_t seed = 0;
};

// Per-trial record produced by the benchmark harness.
struct TrialResult {
  double snr_db = 0.0;
  double snr_scaled_db = 0.0;  // after optimal scalar rescaling of x_hat
  int iterations_used = 0;
  SignalPriorParams lambda_hat;
  NoisePriorParams theta_hat;
};

// Returns the name of the first violated prior invariant, or nullopt if valid.
std::optional<std::string> validate_prior(const SignalPriorParams& lambda);

// Throws std::invalid_argument with the violation name if the prior is invalid.
void require_valid_prior(const SignalPriorParams& lambda);

// Validates dimensions and sign entries, computes ||A||_F^2.
// Throws std::invalid_argument on dimension mismatch or non-sign y entries.
Problem build_problem(Eigen::MatrixXd A, Eigen::VectorXd y);

}  // namespace onebit
