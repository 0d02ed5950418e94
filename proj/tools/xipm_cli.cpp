// Command-line front end: solve, bench, profile, gen.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "xipm/xipm.hpp"

namespace {

using nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int fail(const std::string& kind, const std::string& message, int code = 1) {
  std::cerr << json{{"error", {{"type", kind}, {"message", message}}}}.dump() << '\n';
  return code;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw xipm::Error("cannot write '" + path + "'");
  out << content;
  if (!out) throw xipm::Error("failed writing '" + path + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw xipm::Error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json to_json(const xipm::Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

struct SolveOptions {
  std::string file;
  std::string algo = "extrapolation";
  std::optional<int> order;
  std::optional<double> kappa;
  std::optional<double> mu0;
  double tol = 1e-8;
  double timeout = 60.0;
  bool dense = false;
  bool sparse = false;
  bool as_json = false;
  bool trace = false;
  std::string warm_start;
};

xipm::SolverConfig make_config(const SolveOptions& o) {
  const auto algo = xipm::parse_algorithm(o.algo);
  if (!algo) throw UsageError("unknown algorithm '" + o.algo + "'");
  xipm::SolverConfig cfg;
  cfg.algorithm = *algo;
  const bool newton = *algo == xipm::Algorithm::newton_baseline;
  cfg.order = o.order.value_or(newton ? 1 : 4);
  cfg.kappa = o.kappa.value_or(newton ? 2.0 : cfg.order + 1.0);
  cfg.mu0 = o.mu0;
  cfg.kkt_tol = o.tol;
  cfg.time_limit_seconds = o.timeout;
  if (o.dense) cfg.factorization = xipm::FactorizationMode::dense;
  if (o.sparse) cfg.factorization = xipm::FactorizationMode::sparse;
  cfg.validate();
  return cfg;
}

int run_solve(const SolveOptions& o) {
  const xipm::SolverConfig cfg = make_config(o);
  const xipm::RawQp raw = xipm::read_qps_file(o.file);
  const xipm::PreparedProblem prepared = xipm::prepare(raw);
  xipm::StartingPoint start = prepared.start;
  int warm_iterations = 0;
  if (!o.warm_start.empty()) {
    const auto ws =
        xipm::warm_start_phase(prepared.problem, start, xipm::parse_warm_start(o.warm_start));
    if (!ws.start) throw xipm::Error(ws.failure);
    start = *ws.start;
    warm_iterations = ws.iterations;
  }
  const xipm::SolveResult r = xipm::run_solver(prepared.problem, start, cfg);
  const xipm::Vector x = prepared.report.restore(r.w.x);
  const xipm::Vector shifts = prepared.report.shift_values(r.w.x);

  if (o.as_json) {
    json out{{"problem", raw.name},
             {"algorithm", std::string(xipm::to_string(cfg.algorithm))},
             {"order", cfg.order},
             {"kappa", cfg.kappa},
             {"status", std::string(xipm::to_string(r.status))},
             {"objective", r.objective},
             {"kkt_inf", r.kkt_inf},
             {"mu", r.mu},
             {"outer_iterations", r.outer_iterations},
             {"inner_iterations", r.inner_iterations},
             {"warm_start_iterations", warm_iterations},
             {"seconds", r.seconds},
             {"x", to_json(x)},
             {"shift_values", to_json(shifts)},
             {"warnings", r.warnings}};
    if (o.trace) {
      json t = json::array();
      for (const auto& rec : r.trace) {
        t.push_back({{"k", rec.k},
                     {"mu", rec.mu},
                     {"inner_iterations", rec.inner_iterations},
                     {"newton_moves", rec.newton_moves},
                     {"label", std::string(xipm::to_string(rec.label))},
                     {"theta", rec.theta},
                     {"merit_before", rec.merit_before},
                     {"merit_after", rec.merit_after},
                     {"residual_mu_inf", rec.residual_mu_inf},
                     {"residual0_inf", rec.residual0_inf},
                     {"seconds", rec.seconds}});
      }
      out["trace"] = std::move(t);
    }
    std::cout << out.dump(2) << '\n';
  } else {
    std::cout << raw.name << ": " << xipm::to_string(r.status) << "\n"
              << "  objective         " << std::setprecision(12) << r.objective << "\n"
              << "  ||F0||_inf        " << r.kkt_inf << "\n"
              << "  outer/inner iters " << r.outer_iterations << " / " << r.inner_iterations << "\n"
              << "  time              " << r.seconds << " s\n";
    for (const auto& w : r.warnings) std::cout << "  warning: " << w << "\n";
    if (shifts.size() > 0 && shifts.lpNorm<Eigen::Infinity>() > cfg.kkt_tol) {
      std::cout << "  warning: nonzero shift variables at exit\n";
    }
    if (o.trace) {
      for (const auto& rec : r.trace) {
        std::cout << "  k=" << rec.k << " mu=" << rec.mu << " inner=" << rec.inner_iterations
                  << " step=" << xipm::to_string(rec.label) << " theta=" << rec.theta
                  << " |F0|=" << rec.residual0_inf << "\n";
      }
    }
  }
  return r.status == xipm::SolveStatus::optimal ? 0 : 3;
}

struct BenchOptions {
  std::string dir;
  std::string random;
  std::string solvers = "extrapolation,newton,mehrotra";
  int reps = 3;
  std::string warm_start;
  double timeout = 60.0;
  std::string out = "results.csv";
  std::string summary;
};

std::vector<xipm::SolverSpec> select_solvers(const std::string& list) {
  const auto all = xipm::default_solvers();
  std::vector<xipm::SolverSpec> out;
  std::istringstream in(list);
  std::string name;
  while (std::getline(in, name, ',')) {
    auto it = std::find_if(all.begin(), all.end(), [&](const auto& s) { return s.label == name; });
    if (it == all.end()) throw UsageError("unknown solver '" + name + "'");
    out.push_back(*it);
  }
  return out;
}

int run_bench(const BenchOptions& o) {
  xipm::BenchPlan plan;
  plan.solvers = select_solvers(o.solvers);
  plan.repetitions = o.reps;
  plan.timeout_seconds = o.timeout;
  if (!o.warm_start.empty()) plan.warm_start = xipm::parse_warm_start(o.warm_start);
  if (!o.random.empty() && !o.dir.empty()) throw UsageError("use either --dir or --random");
  if (!o.random.empty()) {
    xipm::RandomGrid grid;
    try {
      grid = xipm::parse_random_grid(o.random);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    plan.instances = grid.instances();
    plan.repetitions = grid.repetitions;
  } else {
    const auto dir = o.dir.empty() ? xipm::fixture_directory("") : std::filesystem::path(o.dir);
    if (dir.empty()) throw UsageError("bench needs --dir, --random or XIPM_FIXTURE_DIR");
    plan.instances = xipm::directory_instances(dir);
  }
  const auto outcome = xipm::run_bench(plan);
  write_file(o.out, xipm::to_csv(outcome.rows));
  if (!o.summary.empty()) {
    write_file(o.summary, xipm::summary_csv(xipm::summarize_grid(outcome.rows)));
  }
  json excluded = json::array();
  for (const auto& e : outcome.excluded) excluded.push_back({{"problem", e.problem}, {"reason", e.reason}});
  std::cout << json{{"results", o.out},
                    {"rows", outcome.rows.size()},
                    {"instances", plan.instances.size()},
                    {"excluded", excluded}}
                   .dump(2)
            << '\n';
  return 0;
}

int run_profile(const std::string& results, const std::string& svg, const std::string& out) {
  const auto data = xipm::build_profile(xipm::parse_csv(read_file(results)));
  if (!svg.empty()) write_file(svg, xipm::profile_svg(data));
  const std::string table = xipm::profile_csv(data);
  if (out.empty()) {
    std::cout << table;
  } else {
    write_file(out, table);
  }
  if (!data.excluded_problems.empty()) {
    std::cerr << data.excluded_problems.size() << " problem(s) unsolved by every solver excluded\n";
  }
  return 0;
}

int run_gen(int n, double t, std::uint64_t seed, const std::string& out) {
  xipm::RawQp raw = xipm::to_raw(xipm::random_qp({n, t, seed}));
  const std::string text = xipm::write_qps(raw);
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_file(out, text);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interior-point QP solver with higher-order extrapolation"};
  app.require_subcommand(1);

  SolveOptions solve;
  auto* s = app.add_subcommand("solve", "Solve one QPS file");
  s->add_option("file", solve.file, "QPS/MPS file")->required();
  s->add_option("--algo", solve.algo, "extrapolation | newton | mehrotra");
  s->add_option("--p", solve.order, "Extrapolation order (1-10)");
  s->add_option("--kappa", solve.kappa, "Barrier decrease exponent");
  s->add_option("--mu0", solve.mu0, "Initial barrier value");
  s->add_option("--tol", solve.tol, "KKT stop tolerance (scaled by 1 + max |data|)");
  s->add_option("--timeout", solve.timeout, "Wall-clock budget in seconds");
  auto* dense = s->add_flag("--dense", solve.dense, "Dense LU");
  auto* sparse = s->add_flag("--sparse", solve.sparse, "Sparse LU");
  dense->excludes(sparse);
  s->add_flag("--json", solve.as_json, "JSON output");
  s->add_flag("--trace", solve.trace, "Include the per-iteration trace");
  s->add_option("--warmstart", solve.warm_start, "e.g. mehrotra:meancompl<1");

  BenchOptions bench;
  auto* b = app.add_subcommand("bench", "Benchmark solvers over a directory or random grid");
  b->add_option("--dir", bench.dir, "Directory of QPS files");
  b->add_option("--random", bench.random, "Grid, e.g. n=50:100,t-rule=n/100,reps=3,seed=7");
  b->add_option("--solvers", bench.solvers, "Comma-separated solver list");
  b->add_option("--reps", bench.reps, "Repetitions per cell")->check(CLI::PositiveNumber);
  b->add_option("--warmstart", bench.warm_start, "Initial phase, e.g. mehrotra:meancompl<1");
  b->add_option("--timeout", bench.timeout, "Measured-phase budget in seconds");
  b->add_option("--out", bench.out, "Results CSV");
  b->add_option("--summary", bench.summary, "Mean/std summary CSV per (n, solver)");

  std::string results, svg, profile_out;
  auto* p = app.add_subcommand("profile", "Performance profile from a results CSV");
  p->add_option("results", results, "Results CSV")->required();
  p->add_option("--svg", svg, "Write an SVG plot");
  p->add_option("--out", profile_out, "Write curve points as CSV (default stdout)");

  int n = 0;
  double t = 1.0;
  std::uint64_t seed = 0;
  std::string gen_out;
  auto* g = app.add_subcommand("gen", "Generate a random positivity-constrained QP");
  g->add_option("--n", n, "Dimension")->required()->check(CLI::PositiveNumber);
  g->add_option("--t", t, "Condition number (>= 1)")->required();
  g->add_option("--seed", seed, "Seed");
  g->add_option("--out", gen_out, "Output QPS file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    if (s->parsed()) return run_solve(solve);
    if (b->parsed()) return run_bench(bench);
    if (p->parsed()) return run_profile(results, svg, profile_out);
    if (g->parsed()) return run_gen(n, t, seed, gen_out);
  } catch (const UsageError& e) {
    return fail("usage", e.what(), 2);
  } catch (const xipm::ParseError& e) {
    return fail("parse", e.what());
  } catch (const xipm::Error& e) {
    return fail("error", e.what());
  } catch (const std::invalid_argument& e) {
    return fail("invalid-argument", e.what(), 2);
  } catch (const std::exception& e) {
    return fail("error", e.what());
  }
  return 0;
}
