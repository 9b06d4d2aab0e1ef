#include "onebit/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "onebit/engine.hpp"

namespace onebit {

GeneratedProblem generate_problem(int n, int s, int m, double gamma_w, std::uint64_t seed) {
  if (n <= 0) throw std::invalid_argument("n must be positive");
  if (s <= 0 || s > n) throw std::invalid_argument("s must be in [1, n]");
  if (m <= 0) throw std::invalid_argument("m must be positive");
  if (!(gamma_w >= 0.0)) throw std::invalid_argument("negative gamma_w");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Eigen::MatrixXd a(m, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < m; ++i) a(i, j) = normal(rng);
    a.col(j) /= a.col(j).norm();
  }

  // Uniform support via partial Fisher-Yates, then sorted for readability.
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (int k = 0; k < s; ++k) {
    std::uniform_int_distribution<int> pick(k, n - 1);
    std::swap(idx[k], idx[pick(rng)]);
  }
  std::sort(idx.begin(), idx.begin() + s);

  GeneratedProblem out;
  out.x_true = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < s; ++k) out.x_true[idx[k]] = normal(rng);

  Eigen::VectorXd z = a * out.x_true;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
  if (gamma_w > 0.0) {
    const double sd = std::sqrt(gamma_w);
    for (int i = 0; i < m; ++i) w[i] = sd * normal(rng);
  }

  out.problem = build_problem(std::move(a), quantize(z, w));
  out.lambda_true.kappa = static_cast<double>(s) / static_cast<double>(n);
  out.lambda_true.components = {GaussComponent{1.0, 0.0, 1.0}};
  out.theta_true.gamma_w = gamma_w;
  return out;
}

Eigen::VectorXd quantize(const Eigen::Ref<const Eigen::VectorXd>& z,
                         const Eigen::Ref<const Eigen::VectorXd>& w) {
  if (z.size() != w.size()) throw std::invalid_argument("z and w size mismatch");
  Eigen::VectorXd y(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) y[i] = (z[i] + w[i]) > 0.0 ? 1.0 : -1.0;
  return y;
}

SnrPair snr_db(const Eigen::Ref<const Eigen::VectorXd>& x_true,
               const Eigen::Ref<const Eigen::VectorXd>& x_hat) {
  if (x_true.size() != x_hat.size()) throw std::invalid_argument("x size mismatch");
  constexpr double kCapDb = 300.0;
  const double sig = x_true.squaredNorm();
  const auto to_db = [&](double err) {
    if (err <= 0.0) return kCapDb;
    return std::min(10.0 * std::log10(sig / err), kCapDb);
  };
  SnrPair out;
  out.plain_db = to_db((x_true - x_hat).squaredNorm());
  const double hh = x_hat.squaredNorm();
  const double alpha = hh > 0.0 ? x_hat.dot(x_true) / hh : 0.0;
  out.scaled_db = to_db((x_true - alpha * x_hat).squaredNorm());
  return out;
}

std::vector<std::string> validate_grid_config(const GridConfig& c) {
  std::vector<std::string> bad;
  if (c.n <= 0) bad.push_back("n");
  if (c.sparsity_levels.empty() ||
      std::any_of(c.sparsity_levels.begin(), c.sparsity_levels.end(),
                  [](double s) { return !(s > 0.0 && s <= 1.0); }))
    bad.push_back("sparsity_levels");
  if (c.oversampling_ratios.empty() ||
      std::any_of(c.oversampling_ratios.begin(), c.oversampling_ratios.end(),
                  [](double r) { return !(r >= 1.0); }))
    bad.push_back("oversampling_ratios");
  if (c.noise_variances.empty() ||
      std::any_of(c.noise_variances.begin(), c.noise_variances.end(),
                  [](double g) { return !(g >= 0.0); }))
    bad.push_back("noise_variances");
  if (c.trials <= 0) bad.push_back("trials");
  if (c.arms.empty() || std::any_of(c.arms.begin(), c.arms.end(), [](const std::string& a) {
        return a != "amp-pe" && a != "amp-oracle";
      }))
    bad.push_back("arms");
  if (c.num_components <= 0) bad.push_back("num_components");
  if (c.solver.max_iters <= 0) bad.push_back("solver.max_iters");
  if (!(c.solver.damping_rate > 0.0 && c.solver.damping_rate <= 1.0))
    bad.push_back("solver.damping_rate");
  if (!(c.solver.convergence_tol > 0.0)) bad.push_back("solver.convergence_tol");
  if (c.solver.em_inner_iters < 0) bad.push_back("solver.em_inner_iters");
  if (!(c.solver.variance_floor > 0.0)) bad.push_back("solver.variance_floor");
  return bad;
}

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct CellSpec {
  double sparsity, ratio, gamma_w;
  int s, m;
};

std::vector<CellSpec> enumerate_cells(const GridConfig& c) {
  std::vector<CellSpec> cells;
  for (double sp : c.sparsity_levels)
    for (double ra : c.oversampling_ratios)
      for (double gw : c.noise_variances) {
        CellSpec cell;
        cell.sparsity = sp;
        cell.ratio = ra;
        cell.gamma_w = gw;
        cell.s = std::max(1, static_cast<int>(std::llround(sp * c.n)));
        cell.m = std::max(1, static_cast<int>(std::llround(ra * c.n)));
        cells.push_back(cell);
      }
  return cells;
}

TrialRecord run_one_trial(const GridConfig& config, const CellSpec& cell, int cell_index,
                          int arm_index, int trial) {
  const bool oracle = config.arms[arm_index] == "amp-oracle";
  const GeneratedProblem gen = generate_problem(config.n, cell.s, cell.m, cell.gamma_w,
                                                trial_seed(config.seed, cell_index, trial));
  SolverConfig sc = config.solver;
  sc.estimate_signal_params = !oracle;
  sc.estimate_noise_param = !oracle;
  const SignalPriorParams lambda0 =
      oracle ? gen.lambda_true : default_signal_init(config.num_components);
  const NoisePriorParams theta0 = oracle ? gen.theta_true : default_noise_init();

  TrialRecord rec;
  rec.cell_index = cell_index;
  rec.arm_index = arm_index;
  rec.trial = trial;
  try {
    const SolveReport rep = solve(gen.problem, lambda0, theta0, sc);
    const SnrPair snr = snr_db(gen.x_true, rep.x_hat);
    rec.converged = rep.converged;
    rec.result.snr_db = snr.plain_db;
    rec.result.snr_scaled_db = snr.scaled_db;
    rec.result.iterations_used = rep.iterations;
    rec.result.lambda_hat = rep.lambda_hat;
    rec.result.theta_hat = rep.theta_hat;
  } catch (const DivergenceError& e) {
    rec.diverged = true;
    rec.result.snr_db = std::numeric_limits<double>::quiet_NaN();
    rec.result.snr_scaled_db = std::numeric_limits<double>::quiet_NaN();
    rec.result.iterations_used = e.iteration + 1;
    rec.result.lambda_hat = lambda0;
    rec.result.theta_hat = theta0;
  }
  return rec;
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t base, int cell_index, int trial_index) {
  std::uint64_t h = splitmix64(base ^ (0xD1B54A32D192ED03ULL * (cell_index + 1)));
  return splitmix64(h ^ (0x8CB92BA72F3D8DD7ULL * (trial_index + 1)));
}

GridResult run_grid(const GridConfig& config, int jobs, const ProgressFn& progress) {
  const auto bad = validate_grid_config(config);
  if (!bad.empty()) {
    std::string msg = "invalid grid config:";
    for (const auto& f : bad) msg += " " + f;
    throw std::invalid_argument(msg);
  }
  const std::vector<CellSpec> cells = enumerate_cells(config);
  const int n_arms = static_cast<int>(config.arms.size());
  const int n_trials = config.trials;
  const int per_cell = n_arms * n_trials;
  const int workers = std::max(jobs, 1);

  GridResult out;
  out.trials.resize(cells.size() * static_cast<std::size_t>(per_cell));

  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    TrialRecord* base = out.trials.data() + ci * per_cell;
    const auto task = [&, base, ci](int k) {
      const int arm = k / n_trials;
      const int trial = k % n_trials;
      base[k] = run_one_trial(config, cells[ci], static_cast<int>(ci), arm, trial);
    };
    if (workers == 1) {
      for (int k = 0; k < per_cell; ++k) task(k);
    } else {
      std::atomic<int> next{0};
      std::exception_ptr first_error;
      std::mutex err_mu;
      std::vector<std::thread> pool;
      const int nthreads = std::min(workers, per_cell);
      pool.reserve(nthreads);
      for (int w = 0; w < nthreads; ++w) {
        pool.emplace_back([&] {
          for (int k = next.fetch_add(1); k < per_cell; k = next.fetch_add(1)) {
            try {
              task(k);
            } catch (...) {
              std::lock_guard<std::mutex> lock(err_mu);
              if (!first_error) first_error = std::current_exception();
            }
          }
        });
      }
      for (auto& th : pool) th.join();
      if (first_error) std::rethrow_exception(first_error);
    }
    if (progress) progress(static_cast<int>(ci) + 1, static_cast<int>(cells.size()));
  }

  // Aggregate in fixed (cell, arm) order so output is independent of jobs.
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    for (int a = 0; a < n_arms; ++a) {
      GridRow row;
      row.sparsity = cells[ci].sparsity;
      row.ratio = cells[ci].ratio;
      row.gamma_w = cells[ci].gamma_w;
      row.arm = config.arms[a];
      double sum = 0.0, sum_scaled = 0.0, sum_iters = 0.0;
      int kept = 0;
      const TrialRecord* recs = out.trials.data() + ci * per_cell + a * n_trials;
      for (int t = 0; t < n_trials; ++t) {
        if (recs[t].diverged) {
          ++row.trials_diverged;
          continue;
        }
        sum += recs[t].result.snr_db;
        sum_scaled += recs[t].result.snr_scaled_db;
        sum_iters += recs[t].result.iterations_used;
        ++kept;
      }
      const double nan = std::numeric_limits<double>::quiet_NaN();
      if (kept > 0) {
        row.mean_snr_db = sum / kept;
        row.mean_snr_scaled_db = sum_scaled / kept;
        row.mean_iters = sum_iters / kept;
        double ss = 0.0;
        for (int t = 0; t < n_trials; ++t) {
          if (recs[t].diverged) continue;
          const double d = recs[t].result.snr_db - row.mean_snr_db;
          ss += d * d;
        }
        row.std_snr_db = std::sqrt(ss / kept);
      } else {
        row.mean_snr_db = row.mean_snr_scaled_db = row.mean_iters = row.std_snr_db = nan;
      }
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

std::string fmt_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string grid_csv(const GridResult& result) {
  std::ostringstream os;
  os << "sparsity,ratio,gamma_w,arm,mean_snr_db,std_snr_db,mean_iters,trials_diverged\n";
  for (const auto& row : result.rows) {
    os << fmt_g9(row.sparsity) << ',' << fmt_g9(row.ratio) << ',' << fmt_g9(row.gamma_w) << ','
       << row.arm << ',' << fmt_g9(row.mean_snr_db) << ',' << fmt_g9(row.std_snr_db) << ','
       << fmt_g9(row.mean_iters) << ',' << row.trials_diverged << '\n';
  }
  return os.str();
}

std::string trials_csv(const GridResult& result, const GridConfig& config) {
  const std::vector<CellSpec> cells = enumerate_cells(config);
  std::ostringstream os;
  os << "sparsity,ratio,gamma_w,arm,trial,snr_db,snr_scaled_db,iterations,converged,diverged,"
        "kappa_hat,components_hat,gamma_w_hat\n";
  for (const auto& rec : result.trials) {
    const CellSpec& cell = cells[rec.cell_index];
    os << fmt_g9(cell.sparsity) << ',' << fmt_g9(cell.ratio) << ',' << fmt_g9(cell.gamma_w) << ','
       << config.arms[rec.arm_index] << ',' << rec.trial << ',' << fmt_g9(rec.result.snr_db) << ','
       << fmt_g9(rec.result.snr_scaled_db) << ',' << rec.result.iterations_used << ','
       << (rec.converged ? 1 : 0) << ',' << (rec.diverged ? 1 : 0) << ','
       << fmt_g9(rec.result.lambda_hat.kappa) << ',';
    for (std::size_t i = 0; i < rec.result.lambda_hat.components.size(); ++i) {
      const auto& c = rec.result.lambda_hat.components[i];
      if (i) os << ';';
      os << fmt_g9(c.weight) << ':' << fmt_g9(c.mean) << ':' << fmt_g9(c.variance);
    }
    os << ',' << fmt_g9(rec.result.theta_hat.gamma_w) << '\n';
  }
  return os.str();
}

std::map<std::string, std::string> curve_csvs(const GridResult& result, const GridConfig& config) {
  std::map<std::string, std::string> files;
  const int n_gw = static_cast<int>(config.noise_variances.size());
  const int n_ra = static_cast<int>(config.oversampling_ratios.size());
  const int n_arms = static_cast<int>(config.arms.size());
  for (std::size_t si = 0; si < config.sparsity_levels.size(); ++si) {
    for (int gi = 0; gi < n_gw; ++gi) {
      std::ostringstream os;
      os << "ratio";
      for (const auto& arm : config.arms) os << ',' << arm << "_snr_db," << arm << "_snr_scaled_db";
      os << '\n';
      for (int ri = 0; ri < n_ra; ++ri) {
        const std::size_t cell = (si * n_ra + ri) * n_gw + gi;
        os << fmt_g9(config.oversampling_ratios[ri]);
        for (int a = 0; a < n_arms; ++a) {
          const GridRow& row = result.rows[cell * n_arms + a];
          os << ',' << fmt_g9(row.mean_snr_db) << ',' << fmt_g9(row.mean_snr_scaled_db);
        }
        os << '\n';
      }
      files["curve_s" + fmt_g9(config.sparsity_levels[si]) + "_gw" +
            fmt_g9(config.noise_variances[gi]) + ".csv"] = os.str();
    }
  }
  return files;
}

}  // namespace onebit
