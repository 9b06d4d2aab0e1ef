#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "onebit/cli.hpp"

namespace fs = std::filesystem;
using onebit::cli::run;

namespace {

struct RunResult {
  int code = -1;
  std::string out, err;
};

RunResult cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  RunResult r;
  r.code = run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "onebit_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary);
  f << content;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int count_lines(const std::string& s) {
  return static_cast<int>(std::count(s.begin(), s.end(), '\n'));
}

// A small well-posed instance: 4x4 identity sensing matrix.
fs::path make_identity_instance(const fs::path& dir) {
  write_file(dir / "A.csv", "1,0,0,0\n0,1,0,0\n0,0,1,0\n0,0,0,1\n");
  write_file(dir / "y.txt", "1\n-1\n1\n-1\n");
  return dir;
}

const std::string kTinyBench = R"({
  "n": 16,
  "sparsity_levels": [0.25],
  "oversampling_ratios": [1, 2],
  "noise_variances": [0.0],
  "trials": 2,
  "seed": 5,
  "solver": {"max_iters": 25}
})";

}  // namespace

TEST_CASE("cli: no arguments or unknown subcommand is an input error") {
  const RunResult none = cli({});
  CHECK(none.code == 1);
  CHECK(!none.err.empty());

  const RunResult unk = cli({"frobnicate"});
  CHECK(unk.code == 1);
  CHECK(!unk.err.empty());
}

TEST_CASE("cli: check runs every battery and reports PASS") {
  const RunResult r = cli({"check"});
  CHECK(r.code == 0);
  CHECK(count_lines(r.out) == 6);
  std::istringstream is(r.out);
  std::string line;
  while (std::getline(is, line)) {
    CAPTURE(line);
    CHECK(line.rfind("[PASS] ", 0) == 0);
    CHECK(line.find("instances=") != std::string::npos);
  }
}

TEST_CASE("cli: solve writes estimates and reports convergence status") {
  const fs::path dir = fresh_dir("solve_ok");
  make_identity_instance(dir);
  const fs::path out1 = dir / "run1";
  const RunResult r = cli({"solve", (dir / "A.csv").string(), (dir / "y.txt").string(),
                           "--out", out1.string(), "--set", "solver.max_iters=50"});
  CHECK((r.code == 0 || r.code == 2));
  CHECK(r.out.find("iterations=") != std::string::npos);
  CHECK(r.out.find("converged=") != std::string::npos);
  CHECK(r.out.find("final_residual=") != std::string::npos);

  const std::string xs = read_file(out1 / "x_hat.txt");
  CHECK(count_lines(xs) == 4);
  const std::string ps = read_file(out1 / "params.txt");
  CHECK(ps.find("kappa = ") != std::string::npos);
  CHECK(ps.find("xi_1 = ") != std::string::npos);
  CHECK(ps.find("mu_1 = ") != std::string::npos);
  CHECK(ps.find("gamma_x_1 = ") != std::string::npos);
  CHECK(ps.find("gamma_w = ") != std::string::npos);

  // Byte-identical on rerun.
  const fs::path out2 = dir / "run2";
  const RunResult r2 = cli({"solve", (dir / "A.csv").string(), (dir / "y.txt").string(),
                            "--out", out2.string(), "--set", "solver.max_iters=50"});
  CHECK(r2.code == r.code);
  CHECK(read_file(out2 / "x_hat.txt") == xs);
  CHECK(read_file(out2 / "params.txt") == ps);
}

TEST_CASE("cli: solve that cannot converge in one iteration exits with 2") {
  const fs::path dir = fresh_dir("solve_noconv");
  make_identity_instance(dir);
  const RunResult r = cli({"solve", (dir / "A.csv").string(), (dir / "y.txt").string(),
                           "--out", (dir / "out").string(), "--set", "solver.max_iters=1"});
  CHECK(r.code == 2);
  CHECK(r.out.find("converged=false") != std::string::npos);
}

TEST_CASE("cli: solve input errors carry file, line, and column context") {
  const fs::path dir = fresh_dir("solve_bad");
  make_identity_instance(dir);

  // Non-sign measurement value.
  write_file(dir / "y0.txt", "0\n1\n1\n1\n");
  const RunResult ybad = cli({"solve", (dir / "A.csv").string(), (dir / "y0.txt").string(),
                              "--out", (dir / "o1").string()});
  CHECK(ybad.code == 1);
  CHECK(ybad.err.find("expected +1 or -1") != std::string::npos);
  CHECK(ybad.err.find("line 1") != std::string::npos);

  // Unparsable matrix entry.
  write_file(dir / "Abad.csv", "1,0\n3,abc\n");
  write_file(dir / "y2.txt", "1\n-1\n");
  const RunResult abad = cli({"solve", (dir / "Abad.csv").string(), (dir / "y2.txt").string(),
                              "--out", (dir / "o2").string()});
  CHECK(abad.code == 1);
  CHECK(abad.err.find("line 2") != std::string::npos);
  CHECK(abad.err.find("column 2") != std::string::npos);
  CHECK(abad.err.find("abc") != std::string::npos);

  // Ragged row.
  write_file(dir / "Arag.csv", "1,2\n3\n");
  const RunResult rag = cli({"solve", (dir / "Arag.csv").string(), (dir / "y2.txt").string(),
                             "--out", (dir / "o3").string()});
  CHECK(rag.code == 1);
  CHECK(rag.err.find("expected 2 fields, got 1") != std::string::npos);

  // Missing file.
  const RunResult miss = cli({"solve", (dir / "nope.csv").string(), (dir / "y2.txt").string(),
                              "--out", (dir / "o4").string()});
  CHECK(miss.code == 1);
  CHECK(miss.err.find("cannot open matrix file") != std::string::npos);

  // Dimension mismatch between A and y.
  write_file(dir / "y3.txt", "1\n-1\n1\n");
  const RunResult dim = cli({"solve", (dir / "A.csv").string(), (dir / "y3.txt").string(),
                             "--out", (dir / "o5").string()});
  CHECK(dim.code == 1);
  CHECK(!dim.err.empty());
}

TEST_CASE("cli: bench writes the full CSV set deterministically") {
  const fs::path dir = fresh_dir("bench_ok");
  write_file(dir / "cfg.json", kTinyBench);

  const fs::path out1 = dir / "b1";
  const RunResult r = cli({"bench", "--config", (dir / "cfg.json").string(),
                           "--out", out1.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("grid.csv") != std::string::npos);
  CHECK(r.out.find("(4 rows)") != std::string::npos);  // 2 cells x 2 arms

  const std::string grid = read_file(out1 / "grid.csv");
  const std::string trials = read_file(out1 / "trials.csv");
  CHECK(count_lines(grid) == 1 + 4);
  CHECK(count_lines(trials) == 1 + 4 * 2);
  CHECK(fs::exists(out1 / "curve_s0.25_gw0.csv"));

  // Rerun and a different worker count must be byte-identical.
  const fs::path out2 = dir / "b2";
  CHECK(cli({"bench", "--config", (dir / "cfg.json").string(), "--out", out2.string()}).code == 0);
  CHECK(read_file(out2 / "grid.csv") == grid);
  CHECK(read_file(out2 / "trials.csv") == trials);

  const fs::path out3 = dir / "b3";
  CHECK(cli({"bench", "--config", (dir / "cfg.json").string(), "--out", out3.string(),
             "--jobs", "3"}).code == 0);
  CHECK(read_file(out3 / "grid.csv") == grid);
  CHECK(read_file(out3 / "trials.csv") == trials);

  // A different seed produces different trials.
  const fs::path out4 = dir / "b4";
  CHECK(cli({"bench", "--config", (dir / "cfg.json").string(), "--out", out4.string(),
             "--seed", "123"}).code == 0);
  CHECK(read_file(out4 / "trials.csv") != trials);
}

TEST_CASE("cli: bench --set overrides take effect") {
  const fs::path dir = fresh_dir("bench_set");
  write_file(dir / "cfg.json", kTinyBench);
  const fs::path out = dir / "b";
  const RunResult r = cli({"bench", "--config", (dir / "cfg.json").string(),
                           "--out", out.string(), "--set", "trials=3"});
  CHECK(r.code == 0);
  CHECK(count_lines(read_file(out / "trials.csv")) == 1 + 4 * 3);
}

TEST_CASE("cli: bench rejects invalid configs, naming every bad field") {
  const fs::path dir = fresh_dir("bench_bad");

  write_file(dir / "bad.json",
             R"({"n": 0, "trials": 0, "sparsity_levels": [2.0], "solver": {"max_iters": 0}})");
  const RunResult r = cli({"bench", "--config", (dir / "bad.json").string(),
                           "--out", (dir / "o").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("invalid config field: n") != std::string::npos);
  CHECK(r.err.find("invalid config field: trials") != std::string::npos);
  CHECK(r.err.find("invalid config field: sparsity_levels") != std::string::npos);
  CHECK(r.err.find("invalid config field: solver.max_iters") != std::string::npos);

  // Unknown keys are named rather than silently ignored.
  write_file(dir / "unk.json", R"({"n": 16, "bogus_key": 1})");
  const RunResult unk = cli({"bench", "--config", (dir / "unk.json").string(),
                             "--out", (dir / "o2").string()});
  CHECK(unk.code == 1);
  CHECK(unk.err.find("bogus_key (unknown)") != std::string::npos);

  // Wrongly-typed field.
  write_file(dir / "typ.json", R"({"n": "many"})");
  const RunResult typ = cli({"bench", "--config", (dir / "typ.json").string(),
                             "--out", (dir / "o3").string()});
  CHECK(typ.code == 1);
  CHECK(typ.err.find("invalid config field: n") != std::string::npos);
}

TEST_CASE("cli: oracle arm records the generating parameters in trials.csv") {
  const fs::path dir = fresh_dir("bench_oracle");
  write_file(dir / "cfg.json", R"({
    "n": 16,
    "sparsity_levels": [0.25],
    "oversampling_ratios": [2],
    "noise_variances": [0.0],
    "trials": 2,
    "seed": 5,
    "arms": ["amp-oracle"],
    "solver": {"max_iters": 25}
  })");
  const fs::path out = dir / "b";
  CHECK(cli({"bench", "--config", (dir / "cfg.json").string(), "--out", out.string()}).code == 0);
  const std::string trials = read_file(out / "trials.csv");
  std::istringstream is(trials);
  std::string line;
  std::getline(is, line);  // header
  int rows = 0;
  while (std::getline(is, line)) {
    ++rows;
    // ...,kappa_hat,components_hat,gamma_w_hat
    CHECK(line.find(",amp-oracle,") != std::string::npos);
    CHECK(line.find(",0.25,1:0:1,0") != std::string::npos);
  }
  CHECK(rows == 2);
}
