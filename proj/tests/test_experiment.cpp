#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "onebit/channel_1bit.hpp"
#include "onebit/experiment.hpp"
#include "onebit/model.hpp"

using namespace onebit;

namespace {

GridConfig tiny_grid() {
  GridConfig cfg;
  cfg.n = 16;
  cfg.sparsity_levels = {0.25, 0.5};
  cfg.oversampling_ratios = {1, 2};
  cfg.noise_variances = {0.0, 0.02};
  cfg.trials = 2;
  cfg.seed = 9;
  cfg.solver.max_iters = 25;
  return cfg;
}

int count_lines(const std::string& s) {
  return static_cast<int>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_CASE("quantize: signs, tie at zero, odd symmetry") {
  Eigen::VectorXd z(3), w(3);
  z << 0.5, -0.3, 0.0;
  w << 0.0, 0.0, 0.0;
  const Eigen::VectorXd y = quantize(z, w);
  CHECK(y[0] == 1.0);
  CHECK(y[1] == -1.0);
  CHECK(y[2] == -1.0);  // exact zero maps to -1

  Eigen::VectorXd z2(4), w2(4);
  z2 << 1.4, -0.2, 0.6, -3.0;
  w2 << -0.3, -0.1, 0.9, 2.0;
  const Eigen::VectorXd a = quantize(z2, w2);
  const Eigen::VectorXd b = quantize(-z2, -w2);
  for (int i = 0; i < 4; ++i) CHECK(b[i] == -a[i]);  // no exact zeros here

  Eigen::VectorXd wbad(2);
  CHECK_THROWS_AS(quantize(z2, wbad), std::invalid_argument);
}

TEST_CASE("generate_problem: support size, unit columns, reported parameters") {
  const int n = 64, s = 9, m = 128;
  GeneratedProblem gen = generate_problem(n, s, m, 0.05, 13);

  CHECK(gen.problem.m() == m);
  CHECK(gen.problem.n() == n);
  int nonzeros = 0;
  for (int i = 0; i < n; ++i) nonzeros += gen.x_true[i] != 0.0 ? 1 : 0;
  CHECK(nonzeros == s);
  for (int j = 0; j < n; ++j)
    CHECK(gen.problem.A.col(j).norm() == doctest::Approx(1.0).epsilon(1e-12));
  for (int i = 0; i < m; ++i) CHECK(std::abs(gen.problem.y[i]) == 1.0);

  CHECK(gen.lambda_true.kappa == doctest::Approx(static_cast<double>(s) / n).epsilon(1e-15));
  REQUIRE(gen.lambda_true.num_components() == 1);
  CHECK(gen.lambda_true.components[0].weight == 1.0);
  CHECK(gen.lambda_true.components[0].mean == 0.0);
  CHECK(gen.lambda_true.components[0].variance == 1.0);
  CHECK(gen.theta_true.gamma_w == 0.05);

  // Determinism in the seed, variation across seeds.
  GeneratedProblem again = generate_problem(n, s, m, 0.05, 13);
  CHECK((gen.problem.A - again.problem.A).norm() == 0.0);
  CHECK((gen.x_true - again.x_true).norm() == 0.0);
  CHECK((gen.problem.y - again.problem.y).norm() == 0.0);
  GeneratedProblem other = generate_problem(n, s, m, 0.05, 14);
  CHECK((gen.problem.A - other.problem.A).norm() > 0.0);

  CHECK_THROWS_AS(generate_problem(0, 1, 4, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(generate_problem(8, 9, 4, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(generate_problem(8, 2, 0, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(generate_problem(8, 2, 4, -0.1, 1), std::invalid_argument);
}

TEST_CASE("generated sign flips concentrate at the channel-predicted rate") {
  // With z = A x fixed, Pr(y_m = +1) = 1 - Phi(-z_m / sqrt(gamma_w)). The
  // empirical +1 fraction over 100000 rows must sit within 3 standard
  // deviations of the model prediction; this ties the generator's noise
  // wiring to the channel's half-line mass.
  const double gw = 0.1;
  GeneratedProblem gen = generate_problem(32, 8, 100000, gw, 77);
  const Eigen::VectorXd z = gen.problem.A * gen.x_true;
  const int m = gen.problem.m();
  double pred = 0.0, var = 0.0;
  for (int i = 0; i < m; ++i) {
    const double p = 1.0 - h0(z[i], 1e-12, gw);  // h0 requires tau_q > 0
    pred += p;
    var += p * (1.0 - p);
  }
  pred /= m;
  const double sigma = std::sqrt(var) / m;
  const double frac = (gen.problem.y.array() > 0.0).count() / static_cast<double>(m);
  INFO("frac=", frac, " pred=", pred, " sigma=", sigma);
  CHECK(std::abs(frac - pred) <= 3.0 * sigma);
}

TEST_CASE("snr_db reference points") {
  Eigen::VectorXd x(3);
  x << 1.0, -2.0, 0.5;

  const SnrPair exact = snr_db(x, x);
  CHECK(exact.plain_db == 300.0);
  CHECK(exact.scaled_db == 300.0);

  const SnrPair zero = snr_db(x, Eigen::VectorXd::Zero(3));
  CHECK(zero.plain_db == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(zero.scaled_db == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));

  // A doubled estimate has 0 dB plain SNR but is perfect after rescaling.
  const SnrPair doubled = snr_db(x, 2.0 * x);
  CHECK(doubled.plain_db == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(doubled.scaled_db == 300.0);

  // Rescaling never hurts.
  Eigen::VectorXd h(3);
  h << 0.8, -1.1, 0.9;
  const SnrPair pair = snr_db(x, h);
  CHECK(pair.scaled_db >= pair.plain_db - 1e-9);

  Eigen::VectorXd wrong(2);
  CHECK_THROWS_AS(snr_db(x, wrong), std::invalid_argument);
}

TEST_CASE("trial seeds are deterministic and collision-free") {
  std::set<std::uint64_t> seen;
  for (int cell = 0; cell < 20; ++cell)
    for (int t = 0; t < 50; ++t) seen.insert(trial_seed(1, cell, t));
  CHECK(seen.size() == 20u * 50u);
  CHECK(trial_seed(1, 3, 5) == trial_seed(1, 3, 5));
  CHECK(trial_seed(1, 0, 0) != trial_seed(2, 0, 0));
}

TEST_CASE("grid config validation names each offending field") {
  CHECK(validate_grid_config(GridConfig{}).empty());

  GridConfig ok = tiny_grid();
  ok.solver.damping_rate = 1.0;  // undamped is a legal setting
  CHECK(validate_grid_config(ok).empty());

  GridConfig bad;
  bad.n = 0;
  bad.sparsity_levels = {0.0};
  bad.oversampling_ratios = {0.5};
  bad.noise_variances = {-1.0};
  bad.trials = 0;
  bad.arms = {"bogus"};
  bad.num_components = 0;
  bad.solver.max_iters = 0;
  bad.solver.damping_rate = 0.0;
  bad.solver.convergence_tol = 0.0;
  bad.solver.em_inner_iters = -1;
  bad.solver.variance_floor = 0.0;
  const std::vector<std::string> got = validate_grid_config(bad);
  const std::vector<std::string> want = {
      "n",          "sparsity_levels", "oversampling_ratios",
      "noise_variances", "trials",     "arms",
      "num_components",  "solver.max_iters", "solver.damping_rate",
      "solver.convergence_tol", "solver.em_inner_iters", "solver.variance_floor"};
  for (const auto& name : want)
    CHECK(std::find(got.begin(), got.end(), name) != got.end());
  CHECK(got.size() == want.size());
}

TEST_CASE("grid rows are ordered sparsity, ratio, noise, then arm") {
  GridConfig cfg = tiny_grid();
  const GridResult res = run_grid(cfg);
  REQUIRE(res.rows.size() == 2u * 2u * 2u * 2u);  // cells x arms
  std::size_t k = 0;
  for (double sp : cfg.sparsity_levels)
    for (double ra : cfg.oversampling_ratios)
      for (double gw : cfg.noise_variances)
        for (const auto& arm : cfg.arms) {
          CAPTURE(k);
          CHECK(res.rows[k].sparsity == sp);
          CHECK(res.rows[k].ratio == ra);
          CHECK(res.rows[k].gamma_w == gw);
          CHECK(res.rows[k].arm == arm);
          ++k;
        }

  // The oracle arm reports the generating parameters untouched.
  for (const auto& rec : res.trials) {
    if (cfg.arms[rec.arm_index] != "amp-oracle") continue;
    const GridRow& row = res.rows[rec.cell_index * cfg.arms.size() + rec.arm_index];
    CHECK(rec.result.theta_hat.gamma_w == row.gamma_w);
    CHECK(rec.result.lambda_hat.kappa == doctest::Approx(row.sparsity).epsilon(1e-15));
  }
}

TEST_CASE("grid runs are deterministic and independent of worker count") {
  GridConfig cfg = tiny_grid();
  const GridResult a = run_grid(cfg, 1);
  const GridResult b = run_grid(cfg, 1);
  const GridResult c = run_grid(cfg, 3);
  CHECK(grid_csv(a) == grid_csv(b));
  CHECK(grid_csv(a) == grid_csv(c));
  CHECK(trials_csv(a, cfg) == trials_csv(b, cfg));
  CHECK(trials_csv(a, cfg) == trials_csv(c, cfg));
}

TEST_CASE("csv renderings: headers, line counts, curve files") {
  GridConfig cfg = tiny_grid();
  const GridResult res = run_grid(cfg);

  const std::string grid = grid_csv(res);
  CHECK(grid.rfind("sparsity,ratio,gamma_w,arm,mean_snr_db,std_snr_db,mean_iters,"
                   "trials_diverged\n", 0) == 0);
  CHECK(count_lines(grid) == 1 + 16);

  const std::string trials = trials_csv(res, cfg);
  CHECK(trials.rfind("sparsity,ratio,gamma_w,arm,trial,snr_db,snr_scaled_db,iterations,"
                     "converged,diverged,kappa_hat,components_hat,gamma_w_hat\n", 0) == 0);
  CHECK(count_lines(trials) == 1 + 16 * cfg.trials);

  const auto curves = curve_csvs(res, cfg);
  REQUIRE(curves.size() == 4u);  // sparsity x noise
  CHECK(curves.count("curve_s0.25_gw0.csv") == 1u);
  CHECK(curves.count("curve_s0.25_gw0.02.csv") == 1u);
  CHECK(curves.count("curve_s0.5_gw0.csv") == 1u);
  CHECK(curves.count("curve_s0.5_gw0.02.csv") == 1u);
  for (const auto& [name, body] : curves) {
    CAPTURE(name);
    std::istringstream is(body);
    std::string header;
    std::getline(is, header);
    CHECK(header == "ratio,amp-pe_snr_db,amp-pe_snr_scaled_db,"
                    "amp-oracle_snr_db,amp-oracle_snr_scaled_db");
    CHECK(count_lines(body) == 1 + 2);  // one line per ratio
  }
}

TEST_CASE("fmt_g9 renders with nine significant digits") {
  CHECK(fmt_g9(1.0) == "1");
  CHECK(fmt_g9(0.02) == "0.02");
  CHECK(fmt_g9(0.123456789) == "0.123456789");
  CHECK(fmt_g9(1e-9) == "1e-09");
  CHECK(fmt_g9(-2.5) == "-2.5");
}
