#pragma once

// Sign-measurement output channel with optional pre-quantization Gaussian
// noise gamma_w: y = sign(z + w), w ~ N(0, gamma_w). Posterior moments of z
// given q ~ N(z, tau_q), and a second-order ascent estimator for gamma_w.

#include <Eigen/Dense>

#include "onebit/model.hpp"

namespace onebit {

inline constexpr double kGammaWFloor = 1e-10;
inline constexpr double kGammaWCeiling = 1e4;
inline constexpr int kNoiseAscentIters = 5;

// Partial Gaussian moments against the negative half-line, with
// v = tau_q + gamma_w:
//   h0 = Phi(-q / sqrt(v))
//   h1 = q h0 - tau_q N(q | 0, v)
//   h2 = (q^2 + tau_q) h0 - q (tau_q^2 + 2 tau_q gamma_w) / v * N(q | 0, v)
double h0(double q, double tau_q, double gamma_w);
double h1(double q, double tau_q, double gamma_w);
double h2(double q, double tau_q, double gamma_w);

struct ChannelMoments {
  Eigen::VectorXd mean_z;   // E[z_m | y_m, q_m]
  Eigen::VectorXd var_z;    // Var[z_m | y_m, q_m], each in [0, tau_q]
  double log_evidence = 0;  // sum_m log Pr(y_m | q_m)
};

// Per-measurement posterior mean/variance of z. All computations route
// through g = -y q so the result is exactly sign-equivariant in (q, y).
ChannelMoments posterior_moments_z(const Eigen::Ref<const Eigen::VectorXd>& q, double tau_q,
                                   const Eigen::Ref<const Eigen::VectorXd>& y, double gamma_w);

struct NoiseObjective {
  double g1 = 0.0;   // sum_m log Pr(y_m | q_m), as a function of gamma_w
  double g1p = 0.0;  // d g1 / d gamma_w
  double g1pp = 0.0; // d^2 g1 / d gamma_w^2
};

NoiseObjective noise_objective_and_derivatives(const Eigen::Ref<const Eigen::VectorXd>& q,
                                               double tau_q,
                                               const Eigen::Ref<const Eigen::VectorXd>& y,
                                               double gamma_w);

// Up to `iters` guarded Newton steps on g1(gamma_w). Falls back to halving
// steps along sign(g1') when curvature is nonnegative; a candidate is
// accepted only if g1 does not decrease. Result stays within
// [kGammaWFloor, kGammaWCeiling]. iters = 0 returns gamma_w_init unchanged.
double estimate_noise_param(const Eigen::Ref<const Eigen::VectorXd>& q, double tau_q,
                            const Eigen::Ref<const Eigen::VectorXd>& y, double gamma_w_init,
                            int iters);

}  // namespace onebit
