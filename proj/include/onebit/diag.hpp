#pragma once

// Self-check batteries. Expected values come from independent oracles:
// adaptive quadrature of the defining integrals (with its own CDF quadrature,
// no shared kernels with the solver path) and central finite differences.
// Hooks allow injecting a corrupted function to prove a battery can fail.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "onebit/channel_1bit.hpp"
#include "onebit/model.hpp"

namespace onebit::diag {

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol);

// Phi(-t) by quadrature of the standard normal density; relative accuracy
// ~1e-11 including far tails.
double oracle_std_cdf_neg(double t);

struct SignalQuad {
  double psi = 0.0;       // marginal density of r
  double mean = 0.0;      // E[x | r]
  double second = 0.0;    // E[x^2 | r]
  double variance = 0.0;  // Var[x | r], integrated as a central moment
};
SignalQuad quad_signal_posterior(double r, double tau_r, const SignalPriorParams& lambda);

struct ChannelQuad {
  double h0 = 0.0, h1 = 0.0, h2 = 0.0;  // partial moments against y = -1
  double u0 = 0.0;                      // evidence for the requested y
  double mean = 0.0, second = 0.0;      // posterior moments for the requested y
  double variance = 0.0;                // Var[z | y], integrated as a central moment
};
ChannelQuad quad_channel(double q, double tau_q, double gamma_w, double y);

struct BatteryResult {
  std::string name;
  bool passed = false;
  int instances = 0;
  double worst_err = 0.0;
  std::string detail;  // empty unless failed
};

struct ChannelHooks {
  std::function<double(double, double, double)> h0;
  std::function<double(double, double, double)> h1;
  std::function<double(double, double, double)> h2;
};

BatteryResult battery_signal_quadrature(int instances, std::uint64_t seed, double tol);
BatteryResult battery_channel_quadrature(int instances, std::uint64_t seed, double tol,
                                         const ChannelHooks* hooks = nullptr);
BatteryResult battery_signal_derivatives(int instances, std::uint64_t seed, double tol_first,
                                         double tol_second);
BatteryResult battery_noise_derivatives(int instances, std::uint64_t seed, double tol_first,
                                        double tol_second);
BatteryResult battery_em_monotonic(int instances, std::uint64_t seed);
BatteryResult battery_sign_symmetry(int instances, std::uint64_t seed);

// The cmd-check suite: every battery at reduced instance counts.
std::vector<BatteryResult> run_all_batteries();

}  // namespace onebit::diag
