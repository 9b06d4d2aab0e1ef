#pragma once

// Synthetic-problem generation and the benchmark grid harness. Everything
// here is deterministic given the top-level seed: per-trial seeds are derived
// from (seed, cell index, trial index) only, so results do not depend on
// execution order or worker count.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "onebit/model.hpp"

namespace onebit {

struct GeneratedProblem {
  Eigen::VectorXd x_true;
  Problem problem;
  SignalPriorParams lambda_true;  // kappa = S/N, single component N(0, 1)
  NoisePriorParams theta_true;
};

// Columns of A are unit-norm Gaussian; x has S entries drawn N(0,1) on a
// uniformly random support; y = sign(A x + w) with w ~ N(0, gamma_w).
GeneratedProblem generate_problem(int n, int s, int m, double gamma_w, std::uint64_t seed);

// Element-wise sign of z + w with sign(0) = -1.
Eigen::VectorXd quantize(const Eigen::Ref<const Eigen::VectorXd>& z,
                         const Eigen::Ref<const Eigen::VectorXd>& w);

struct SnrPair {
  double plain_db = 0.0;
  double scaled_db = 0.0;  // error minimized over a scalar rescaling of x_hat
};

// Reconstruction SNR in dB, capped at 300 (exact recovery).
SnrPair snr_db(const Eigen::Ref<const Eigen::VectorXd>& x_true,
               const Eigen::Ref<const Eigen::VectorXd>& x_hat);

struct GridConfig {
  int n = 256;
  std::vector<double> sparsity_levels{0.1, 0.5, 1.0};
  std::vector<double> oversampling_ratios{1, 2, 3, 4, 5, 6};
  std::vector<double> noise_variances{0.0, 0.02, 0.1};
  int trials = 20;
  std::uint64_t seed = 1;
  std::vector<std::string> arms{"amp-pe", "amp-oracle"};
  int num_components = 1;  // mixture size used by the estimating arm
  SolverConfig solver;
};

// Names of every invalid field, empty when the config is runnable.
std::vector<std::string> validate_grid_config(const GridConfig& config);

struct GridRow {
  double sparsity = 0.0;
  double ratio = 0.0;
  double gamma_w = 0.0;
  std::string arm;
  double mean_snr_db = 0.0;
  double std_snr_db = 0.0;
  double mean_iters = 0.0;
  int trials_diverged = 0;
  double mean_snr_scaled_db = 0.0;  // kept for the plot files, not in grid.csv
};

struct TrialRecord {
  int cell_index = 0;
  int arm_index = 0;
  int trial = 0;
  bool converged = false;
  bool diverged = false;
  TrialResult result;
};

struct GridResult {
  std::vector<GridRow> rows;       // one per (cell, arm), cells ordered
                                   // sparsity -> ratio -> gamma_w
  std::vector<TrialRecord> trials;
};

std::uint64_t trial_seed(std::uint64_t base, int cell_index, int trial_index);

using ProgressFn = std::function<void(int cells_done, int cells_total)>;

// Runs every (cell, arm, trial) and aggregates. Diverged trials are excluded
// from the mean/std/iteration aggregates and counted in trials_diverged.
GridResult run_grid(const GridConfig& config, int jobs = 1, const ProgressFn& progress = {});

// CSV renderings, all with %.9g fields and '\n' line endings.
std::string grid_csv(const GridResult& result);
std::string trials_csv(const GridResult& result, const GridConfig& config);
// One plot-ready file per (sparsity, gamma_w): ratio column plus per-arm
// plain and rescaled SNR columns. Key is the file name.
std::map<std::string, std::string> curve_csvs(const GridResult& result, const GridConfig& config);

std::string fmt_g9(double v);

}  // namespace onebit
