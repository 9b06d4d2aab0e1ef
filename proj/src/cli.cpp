#include "onebit/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include "onebit/diag.hpp"
#include "onebit/engine.hpp"
#include "onebit/experiment.hpp"

namespace onebit::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string fmt17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::optional<json> load_json(const std::string& path, std::ostream& err) {
  std::ifstream in(path);
  if (!in) {
    err << "cannot open config file " << path << "\n";
    return std::nullopt;
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    err << "config file " << path << ": " << e.what() << "\n";
    return std::nullopt;
  }
}

// --set key=value with dotted paths; value is JSON if it parses, otherwise a
// comma list of scalars, otherwise a bare string.
bool apply_set(json& cfg, const std::string& kv, std::ostream& err) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) {
    err << "--set expects key=value, got '" << kv << "'\n";
    return false;
  }
  const std::string key = kv.substr(0, eq);
  const std::string raw = kv.substr(eq + 1);

  const auto scalar = [](const std::string& tok) -> json {
    try {
      return json::parse(tok);
    } catch (const json::parse_error&) {
      return json(tok);
    }
  };
  json value;
  if (raw.find(',') != std::string::npos && raw.find('[') == std::string::npos) {
    value = json::array();
    std::stringstream ss(raw);
    std::string tok;
    while (std::getline(ss, tok, ',')) value.push_back(scalar(tok));
  } else {
    value = scalar(raw);
  }

  json* node = &cfg;
  std::string part;
  std::stringstream path(key);
  std::vector<std::string> parts;
  while (std::getline(path, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) node = &((*node)[parts[i]]);
  (*node)[parts.back()] = value;
  return true;
}

// Collects the names of wrongly-typed or unknown fields instead of throwing.
struct Reader {
  const json& j;
  std::vector<std::string>& bad;
  std::string prefix;

  template <typename T>
  void get(const char* key, T& out) const {
    if (!j.contains(key)) return;
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception&) {
      bad.push_back(prefix + key);
    }
  }

  void get_list(const char* key, std::vector<double>& out) const {
    if (!j.contains(key)) return;
    try {
      if (j.at(key).is_array())
        out = j.at(key).get<std::vector<double>>();
      else
        out = {j.at(key).get<double>()};
    } catch (const json::exception&) {
      bad.push_back(prefix + key);
    }
  }

  void get_list(const char* key, std::vector<std::string>& out) const {
    if (!j.contains(key)) return;
    try {
      if (j.at(key).is_array())
        out = j.at(key).get<std::vector<std::string>>();
      else
        out = {j.at(key).get<std::string>()};
    } catch (const json::exception&) {
      bad.push_back(prefix + key);
    }
  }
};

void check_known_keys(const json& j, const std::vector<std::string>& known,
                      const std::string& prefix, std::vector<std::string>& bad) {
  if (!j.is_object()) return;
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      bad.push_back(prefix + key + " (unknown)");
  }
}

SolverConfig solver_from_json(const json& root, std::vector<std::string>& bad) {
  SolverConfig sc;
  if (!root.contains("solver")) return sc;
  const json& j = root.at("solver");
  check_known_keys(j,
                   {"max_iters", "damping_rate", "convergence_tol", "em_inner_iters",
                    "estimate_signal_params", "estimate_noise_param", "variance_floor", "seed"},
                   "solver.", bad);
  Reader rd{j, bad, "solver."};
  rd.get("max_iters", sc.max_iters);
  rd.get("damping_rate", sc.damping_rate);
  rd.get("convergence_tol", sc.convergence_tol);
  rd.get("em_inner_iters", sc.em_inner_iters);
  rd.get("estimate_signal_params", sc.estimate_signal_params);
  rd.get("estimate_noise_param", sc.estimate_noise_param);
  rd.get("variance_floor", sc.variance_floor);
  rd.get("seed", sc.seed);
  return sc;
}

GridConfig grid_from_json(const json& j, std::vector<std::string>& bad) {
  GridConfig gc;
  check_known_keys(j,
                   {"n", "sparsity_levels", "oversampling_ratios", "noise_variances", "trials",
                    "seed", "arms", "num_components", "solver"},
                   "", bad);
  Reader rd{j, bad, ""};
  rd.get("n", gc.n);
  rd.get_list("sparsity_levels", gc.sparsity_levels);
  rd.get_list("oversampling_ratios", gc.oversampling_ratios);
  rd.get_list("noise_variances", gc.noise_variances);
  rd.get("trials", gc.trials);
  rd.get("seed", gc.seed);
  rd.get_list("arms", gc.arms);
  rd.get("num_components", gc.num_components);
  gc.solver = solver_from_json(j, bad);
  return gc;
}

bool write_file(const fs::path& path, const std::string& content, std::ostream& err) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    err << "cannot write " << path.string() << "\n";
    return false;
  }
  out << content;
  return true;
}

std::optional<Eigen::MatrixXd> read_matrix_csv(const std::string& path, std::ostream& err) {
  std::ifstream in(path);
  if (!in) {
    err << "cannot open matrix file " << path << "\n";
    return std::nullopt;
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    int col = 0;
    while (std::getline(ss, field, ',')) {
      ++col;
      try {
        std::size_t used = 0;
        const double v = std::stod(field, &used);
        while (used < field.size() && std::isspace(static_cast<unsigned char>(field[used])))
          ++used;
        if (used != field.size()) throw std::invalid_argument(field);
        row.push_back(v);
      } catch (const std::exception&) {
        err << "matrix file " << path << " line " << lineno << " column " << col
            << ": cannot parse '" << field << "' as a real number\n";
        return std::nullopt;
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      err << "matrix file " << path << " line " << lineno << ": expected " << rows.front().size()
          << " fields, got " << row.size() << "\n";
      return std::nullopt;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    err << "matrix file " << path << " line 1: empty matrix\n";
    return std::nullopt;
  }
  Eigen::MatrixXd a(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < rows[i].size(); ++k) a(i, k) = rows[i][k];
  return a;
}

std::optional<Eigen::VectorXd> read_measurements(const std::string& path, std::ostream& err) {
  std::ifstream in(path);
  if (!in) {
    err << "cannot open measurements file " << path << "\n";
    return std::nullopt;
  }
  std::vector<double> vals;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string tok = line;
    tok.erase(0, tok.find_first_not_of(" \t\r"));
    if (!tok.empty()) tok.erase(tok.find_last_not_of(" \t\r") + 1);
    if (tok.empty()) continue;
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      err << "measurements file " << path << " line " << lineno << " column 1: cannot parse '"
          << tok << "'\n";
      return std::nullopt;
    }
    if (v != 1.0 && v != -1.0) {
      err << "measurements file " << path << " line " << lineno << ": expected +1 or -1, got '"
          << tok << "'\n";
      return std::nullopt;
    }
    vals.push_back(v);
  }
  Eigen::VectorXd y(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) y[i] = vals[i];
  return y;
}

int resolve_jobs(int jobs_flag, std::ostream& err, bool& ok) {
  ok = true;
  if (jobs_flag > 0) return jobs_flag;
  if (const char* env = std::getenv("ONEBIT_AMP_JOBS")) {
    try {
      const int j = std::stoi(env);
      if (j < 1) throw std::invalid_argument(env);
      return j;
    } catch (const std::exception&) {
      err << "invalid ONEBIT_AMP_JOBS value '" << env << "'\n";
      ok = false;
      return 1;
    }
  }
  return 1;
}

int cmd_solve(const std::string& matrix_path, const std::string& meas_path, const json& cfg,
              const std::string& out_dir, std::ostream& out, std::ostream& err) {
  const auto a = read_matrix_csv(matrix_path, err);
  if (!a) return 1;
  const auto y = read_measurements(meas_path, err);
  if (!y) return 1;

  std::vector<std::string> bad;
  check_known_keys(cfg,
                   {"solver", "num_components", "kappa_init", "xi_init", "mu_init", "gamma_x_init",
                    "gamma_w_init"},
                   "", bad);
  SolverConfig sc = solver_from_json(cfg, bad);
  int num_components = 1;
  double kappa_init = 0.5, gamma_w_init = 1e-2;
  std::vector<double> xi_init, mu_init, gamma_x_init;
  Reader rd{cfg, bad, ""};
  rd.get("num_components", num_components);
  rd.get("kappa_init", kappa_init);
  rd.get("gamma_w_init", gamma_w_init);
  rd.get_list("xi_init", xi_init);
  rd.get_list("mu_init", mu_init);
  rd.get_list("gamma_x_init", gamma_x_init);
  if (!bad.empty()) {
    for (const auto& f : bad) err << "invalid config field: " << f << "\n";
    return 1;
  }

  SignalPriorParams lambda = default_signal_init(num_components);
  lambda.kappa = kappa_init;
  const auto fill = [&](const std::vector<double>& src, auto member) -> bool {
    if (src.empty()) return true;
    if (static_cast<int>(src.size()) != lambda.num_components()) return false;
    for (int i = 0; i < lambda.num_components(); ++i) lambda.components[i].*member = src[i];
    return true;
  };
  if (!fill(xi_init, &GaussComponent::weight) || !fill(mu_init, &GaussComponent::mean) ||
      !fill(gamma_x_init, &GaussComponent::variance)) {
    err << "init arrays must have num_components entries\n";
    return 1;
  }

  try {
    const Problem problem = build_problem(*a, *y);
    const SolveReport rep = solve(problem, lambda, NoisePriorParams{gamma_w_init}, sc);

    fs::create_directories(out_dir);
    std::string xs;
    for (Eigen::Index i = 0; i < rep.x_hat.size(); ++i) xs += fmt17(rep.x_hat[i]) + "\n";
    if (!write_file(fs::path(out_dir) / "x_hat.txt", xs, err)) return 1;
    std::string ps = "kappa = " + fmt17(rep.lambda_hat.kappa) + "\n";
    for (int i = 0; i < rep.lambda_hat.num_components(); ++i) {
      const auto& c = rep.lambda_hat.components[i];
      const std::string idx = std::to_string(i + 1);
      ps += "xi_" + idx + " = " + fmt17(c.weight) + "\n";
      ps += "mu_" + idx + " = " + fmt17(c.mean) + "\n";
      ps += "gamma_x_" + idx + " = " + fmt17(c.variance) + "\n";
    }
    ps += "gamma_w = " + fmt17(rep.theta_hat.gamma_w) + "\n";
    if (!write_file(fs::path(out_dir) / "params.txt", ps, err)) return 1;

    char res[32];
    std::snprintf(res, sizeof(res), "%.3e",
                  rep.residual_trace.empty() ? std::numeric_limits<double>::quiet_NaN()
                                             : rep.residual_trace.back());
    out << "iterations=" << rep.iterations << " converged=" << (rep.converged ? "true" : "false")
        << " final_residual=" << res << "\n";
    return rep.converged ? 0 : 2;
  } catch (const DivergenceError& e) {
    out << "diverged at iteration " << e.iteration << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    err << e.what() << "\n";
    return 1;
  }
}

int cmd_bench(const json& cfg, const std::string& out_dir, int jobs, std::ostream& out,
              std::ostream& err) {
  std::vector<std::string> bad;
  GridConfig gc = grid_from_json(cfg, bad);
  for (const auto& f : validate_grid_config(gc)) bad.push_back(f);
  if (!bad.empty()) {
    for (const auto& f : bad) err << "invalid config field: " << f << "\n";
    return 1;
  }

  const GridResult result = run_grid(gc, jobs, [&](int done, int total) {
    err << "cell " << done << "/" << total << " done\n";
  });

  fs::create_directories(out_dir);
  if (!write_file(fs::path(out_dir) / "grid.csv", grid_csv(result), err)) return 1;
  if (!write_file(fs::path(out_dir) / "trials.csv", trials_csv(result, gc), err)) return 1;
  for (const auto& [name, content] : curve_csvs(result, gc))
    if (!write_file(fs::path(out_dir) / name, content, err)) return 1;

  out << "wrote " << (fs::path(out_dir) / "grid.csv").string() << " (" << result.rows.size()
      << " rows)\n";
  return 0;
}

int cmd_check(std::ostream& out) {
  bool all = true;
  for (const auto& b : diag::run_all_batteries()) {
    all = all && b.passed;
    out << (b.passed ? "[PASS] " : "[FAIL] ") << b.name << " (instances=" << b.instances
        << ", worst err=" << b.worst_err << ")";
    if (!b.passed && !b.detail.empty()) out << " -- " << b.detail;
    out << "\n";
  }
  return all ? 0 : 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"1-bit compressive sensing solver: approximate message passing with built-in "
               "parameter estimation"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".";
  std::vector<std::string> sets;
  long long seed_flag = -1;
  int jobs_flag = 0;

  auto* solve_cmd = app.add_subcommand("solve", "Recover a sparse signal from sign measurements");
  std::string matrix_path, meas_path;
  solve_cmd->add_option("matrix", matrix_path, "CSV measurement matrix, M rows x N columns")
      ->required();
  solve_cmd->add_option("measurements", meas_path, "sign measurements, one +1/-1 per line")
      ->required();

  auto* bench_cmd = app.add_subcommand("bench", "Run the benchmark grid and write CSV summaries");
  auto* check_cmd = app.add_subcommand("check", "Run numeric self-check batteries");

  for (auto* cmd : {solve_cmd, bench_cmd}) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--seed", seed_flag, "override the top-level seed");
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--set", sets, "override a config key, e.g. --set solver.max_iters=200");
  }
  bench_cmd->add_option("--jobs", jobs_flag, "worker threads (or env ONEBIT_AMP_JOBS)");

  try {
    std::vector<const char*> argv;
    argv.push_back("onebit_amp");
    for (const auto& a : args) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    std::stringstream so, se;
    const int code = app.exit(e, so, se);
    out << so.str();
    err << se.str();
    return code == 0 ? 0 : 1;
  }

  json cfg = json::object();
  if (!config_path.empty()) {
    const auto loaded = load_json(config_path, err);
    if (!loaded) return 1;
    if (!loaded->is_object()) {
      err << "config file " << config_path << ": top level must be an object\n";
      return 1;
    }
    cfg = *loaded;
  }
  for (const auto& kv : sets)
    if (!apply_set(cfg, kv, err)) return 1;
  if (seed_flag >= 0) {
    cfg["seed"] = static_cast<std::uint64_t>(seed_flag);
    if (app.got_subcommand(solve_cmd)) cfg["solver"]["seed"] = static_cast<std::uint64_t>(seed_flag);
  }

  if (app.got_subcommand(check_cmd)) return cmd_check(out);
  if (app.got_subcommand(solve_cmd)) {
    json solve_cfg = cfg;
    solve_cfg.erase("seed");  // grid-level key; solve uses solver.seed
    return cmd_solve(matrix_path, meas_path, solve_cfg, out_dir, out, err);
  }
  bool jobs_ok = true;
  const int jobs = resolve_jobs(jobs_flag, err, jobs_ok);
  if (!jobs_ok) return 1;
  return cmd_bench(cfg, out_dir, jobs, out, err);
}

}  // namespace onebit::cli
