#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "xipm/qp_model.hpp"
#include "xipm/qps.hpp"
#include "xipm/random_qp.hpp"
#include "xipm/solver.hpp"

namespace xipm {

/// Named problem source; loaded lazily so directory benches stay lean.
struct BenchInstance {
  std::string name;
  std::function<RawQp()> load;
};

struct SolverSpec {
  std::string label;
  SolverConfig config;
};

/// Initial phase: Mehrotra until the mean complementarity drops below the
/// threshold; the measured phase then starts from its (x, λ).
struct WarmStartRule {
  bool enabled = false;
  double mean_compl_threshold = 1.0;
  double time_limit_seconds = 60.0;
};

struct BenchPlan {
  std::vector<BenchInstance> instances;
  std::vector<SolverSpec> solvers;
  int repetitions = 3;
  WarmStartRule warm_start;
  double timeout_seconds = 60.0;
  PrepareOptions prepare;

  void validate() const {
    if (solvers.empty()) throw std::invalid_argument("bench plan needs at least one solver");
    if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  }
};

/// Default solver line-up: extrapolation (p = 4, κ = 5), Newton baseline
/// (κ = 2) and Mehrotra predictor-corrector.
inline std::vector<SolverSpec> default_solvers() {
  SolverConfig ext;
  ext.algorithm = Algorithm::extrapolation;
  ext.order = 4;
  ext.kappa = 5.0;
  SolverConfig newton;
  newton.algorithm = Algorithm::newton_baseline;
  newton.order = 1;
  newton.kappa = 2.0;
  SolverConfig mehrotra;
  mehrotra.algorithm = Algorithm::mehrotra;
  return {{"extrapolation", ext}, {"newton", newton}, {"mehrotra", mehrotra}};
}

/// One row per (problem, solver, rep).
struct BenchRow {
  std::string problem;
  std::string solver;
  int rep = 0;
  std::string status;
  int outer_iterations = 0;
  int inner_iterations = 0;
  double time_ms = 0.0;
  double kkt_inf = 0.0;
  double objective = 0.0;
};

struct Exclusion {
  std::string problem;
  std::string reason;
};

struct BenchOutcome {
  std::vector<BenchRow> rows;
  std::vector<Exclusion> excluded;
};

struct WarmStartResult {
  std::optional<StartingPoint> start;
  int iterations = 0;
  std::string failure;
};

/**
 * Runs Mehrotra from `from` until the mean complementarity is below the
 * rule's threshold and hands over the final (x, λ), with μ0 set to that
 * mean complementarity. Any other outcome leaves `start` empty.
 */
inline WarmStartResult warm_start_phase(const QpProblem& p, const StartingPoint& from,
                                        const WarmStartRule& rule) {
  WarmStartResult out;
  if (p.num_ineq() == 0) {
    out.start = from;
    return out;
  }
  const double initial = mean_complementarity(p, from.x, from.lambda);
  if (initial < rule.mean_compl_threshold) {
    out.start = from;
    out.start->mu = initial;
    return out;
  }
  SolverConfig cfg;
  cfg.algorithm = Algorithm::mehrotra;
  cfg.stop_mean_compl = rule.mean_compl_threshold;
  cfg.time_limit_seconds = rule.time_limit_seconds;
  const SolveResult r = solve_mehrotra(p, from, cfg);
  out.iterations = r.outer_iterations;
  const double mc = mean_complementarity(p, r.w.x, r.w.lambda);
  if ((r.status == SolveStatus::threshold_reached || r.status == SolveStatus::optimal) &&
      mc < rule.mean_compl_threshold && mc > 0.0 && is_interior(p, r.w)) {
    out.start = StartingPoint{r.w.x, r.w.lambda, mc};
  } else {
    out.failure = "no starting point (initial phase " + std::string(to_string(r.status)) + ")";
  }
  return out;
}

/// Runs every (instance, solver, rep) cell sequentially. Only the measured
/// phase is timed. Instances that fail to load, preprocess or warm start
/// are excluded and reported, never aborting the batch.
inline BenchOutcome run_bench(const BenchPlan& plan) {
  plan.validate();
  BenchOutcome out;
  for (const auto& inst : plan.instances) {
    PreparedProblem prepared;
    try {
      prepared = prepare(inst.load(), plan.prepare);
    } catch (const std::exception& e) {
      out.excluded.push_back({inst.name, std::string("preprocessing failed: ") + e.what()});
      continue;
    }
    StartingPoint start = prepared.start;
    if (plan.warm_start.enabled) {
      WarmStartResult ws;
      try {
        ws = warm_start_phase(prepared.problem, prepared.start, plan.warm_start);
      } catch (const std::exception& e) {
        ws.failure = std::string("initial phase failed: ") + e.what();
      }
      if (!ws.start) {
        out.excluded.push_back({inst.name, ws.failure});
        continue;
      }
      start = *ws.start;
    }
    for (const auto& solver : plan.solvers) {
      SolverConfig cfg = solver.config;
      cfg.time_limit_seconds = plan.timeout_seconds;
      for (int rep = 0; rep < plan.repetitions; ++rep) {
        BenchRow row;
        row.problem = inst.name;
        row.solver = solver.label;
        row.rep = rep;
        const auto t0 = std::chrono::steady_clock::now();
        try {
          const SolveResult r = run_solver(prepared.problem, start, cfg);
          row.status = std::string(to_string(r.status));
          row.outer_iterations = r.outer_iterations;
          row.inner_iterations = r.inner_iterations;
          row.kkt_inf = r.kkt_inf;
          row.objective = r.objective;
        } catch (const std::exception&) {
          row.status = "error";
        }
        row.time_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
        out.rows.push_back(row);
      }
    }
  }
  return out;
}

inline const char* kBenchCsvHeader =
    "problem,solver,rep,status,outer_iterations,inner_iterations,time_ms,kkt_inf,objective";

namespace detail {

inline std::string csv_number(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace detail

inline std::string to_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  out << kBenchCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.problem << ',' << r.solver << ',' << r.rep << ',' << r.status << ','
        << r.outer_iterations << ',' << r.inner_iterations << ','
        << detail::csv_number(r.time_ms) << ',' << detail::csv_number(r.kkt_inf)
        << ',' << detail::csv_number(r.objective) << '\n';
  }
  return out.str();
}

inline std::vector<BenchRow> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("problem,solver,rep,status", 0) != 0) {
    throw Error("results CSV: missing or unexpected header");
  }
  std::vector<BenchRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() < 7) {
      throw Error("results CSV line " + std::to_string(line_no) + ": expected at least 7 cells");
    }
    try {
      BenchRow r;
      r.problem = cells[0];
      r.solver = cells[1];
      r.rep = std::stoi(cells[2]);
      r.status = cells[3];
      r.outer_iterations = std::stoi(cells[4]);
      r.inner_iterations = std::stoi(cells[5]);
      r.time_ms = std::stod(cells[6]);
      if (cells.size() > 7) r.kkt_inf = std::stod(cells[7]);
      if (cells.size() > 8) r.objective = std::stod(cells[8]);
      rows.push_back(r);
    } catch (const std::logic_error&) {
      throw Error("results CSV line " + std::to_string(line_no) + ": bad number");
    }
  }
  return rows;
}

/// Performance profile over problems solved by at least one solver.
struct ProfileData {
  std::vector<std::string> problems;
  std::vector<std::string> solvers;
  Matrix best_time;  // problems × solvers, +inf when unsolved
  Matrix ratios;     // best_time / per-problem best, +inf when unsolved
  std::vector<double> taus;                  // sorted distinct finite ratios
  std::vector<std::vector<double>> curves;   // curves[s][i] at taus[i]
  std::vector<std::string> excluded_problems;

  int solver_index(const std::string& s) const {
    auto it = std::find(solvers.begin(), solvers.end(), s);
    if (it == solvers.end()) throw std::out_of_range("unknown solver " + s);
    return static_cast<int>(it - solvers.begin());
  }

  /// Fraction of problems solver s solved within factor tau of the best.
  double fraction_at(const std::string& solver, double tau) const {
    const int s = solver_index(solver);
    int count = 0;
    for (Eigen::Index p = 0; p < ratios.rows(); ++p) count += ratios(p, s) <= tau ? 1 : 0;
    return problems.empty() ? 0.0 : static_cast<double>(count) / static_cast<double>(problems.size());
  }
};

/// A cell counts as solved when any of its reps reports status optimal; its
/// time is the best over those reps.
inline ProfileData build_profile(const std::vector<BenchRow>& rows) {
  if (rows.empty()) throw Error("performance profile: empty results");
  std::vector<std::string> problems, solvers;
  std::map<std::pair<std::string, std::string>, double> best;
  for (const auto& r : rows) {
    if (std::find(problems.begin(), problems.end(), r.problem) == problems.end()) {
      problems.push_back(r.problem);
    }
    if (std::find(solvers.begin(), solvers.end(), r.solver) == solvers.end()) {
      solvers.push_back(r.solver);
    }
    auto& cell = best.try_emplace({r.problem, r.solver}, kInfinity).first->second;
    if (r.status == "optimal") cell = std::min(cell, r.time_ms);
  }

  ProfileData out;
  out.solvers = solvers;
  for (const auto& p : problems) {
    bool any = false;
    for (const auto& s : solvers) {
      auto it = best.find({p, s});
      any = any || (it != best.end() && std::isfinite(it->second));
    }
    (any ? out.problems : out.excluded_problems).push_back(p);
  }
  if (out.problems.empty()) throw Error("performance profile: no problem solved by any solver");

  const auto np = static_cast<Eigen::Index>(out.problems.size());
  const auto ns = static_cast<Eigen::Index>(solvers.size());
  out.best_time = Matrix::Constant(np, ns, kInfinity);
  out.ratios = Matrix::Constant(np, ns, kInfinity);
  std::set<double> taus{1.0};
  for (Eigen::Index p = 0; p < np; ++p) {
    for (Eigen::Index s = 0; s < ns; ++s) {
      auto it = best.find({out.problems[static_cast<std::size_t>(p)],
                           solvers[static_cast<std::size_t>(s)]});
      if (it != best.end()) out.best_time(p, s) = it->second;
    }
    const double row_best = out.best_time.row(p).minCoeff();
    for (Eigen::Index s = 0; s < ns; ++s) {
      if (!std::isfinite(out.best_time(p, s))) continue;
      // A zero best time would make every ratio infinite; treat ties at 0 as 1.
      const double ratio = row_best > 0.0 ? out.best_time(p, s) / row_best
                                          : (out.best_time(p, s) > 0.0 ? kInfinity : 1.0);
      out.ratios(p, s) = ratio;
      if (std::isfinite(ratio)) taus.insert(ratio);
    }
  }
  out.taus.assign(taus.begin(), taus.end());
  out.curves.assign(solvers.size(), std::vector<double>(out.taus.size(), 0.0));
  for (std::size_t s = 0; s < solvers.size(); ++s) {
    for (std::size_t i = 0; i < out.taus.size(); ++i) {
      out.curves[s][i] = out.fraction_at(solvers[s], out.taus[i]);
    }
  }
  return out;
}

inline std::string profile_csv(const ProfileData& d) {
  std::ostringstream out;
  out << "tau";
  for (const auto& s : d.solvers) out << ',' << s;
  out << '\n';
  for (std::size_t i = 0; i < d.taus.size(); ++i) {
    out << detail::csv_number(d.taus[i]);
    for (std::size_t s = 0; s < d.solvers.size(); ++s) {
      out << ',' << detail::csv_number(d.curves[s][i]);
    }
    out << '\n';
  }
  return out.str();
}

/// Static SVG of the profile: log2(τ) on x, step curves per solver.
inline std::string profile_svg(const ProfileData& d, const std::string& title = "Performance profile") {
  constexpr double kWidth = 720, kHeight = 440;
  constexpr double kLeft = 70, kRight = 170, kTop = 40, kBottom = 60;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const double x_max = std::max(1.0, std::ceil(std::log2(d.taus.back()) * 1.05 + 1e-12));
  auto px = [&](double tau) { return kLeft + plot_w * std::log2(tau) / x_max; };
  auto py = [&](double frac) { return kTop + plot_h * (1.0 - frac); };
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

  std::ostringstream s;
  s << std::fixed << std::setprecision(2);
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
    << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"24\" text-anchor=\"middle\" "
    << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";
  s << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w
    << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 10; i += 2) {
    const double f = i / 10.0;
    s << "<line x1=\"" << kLeft - 4 << "\" y1=\"" << py(f) << "\" x2=\"" << kLeft
      << "\" y2=\"" << py(f) << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << kLeft - 8 << "\" y=\"" << py(f) + 4
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << f
      << "</text>\n";
  }
  const int x_ticks = static_cast<int>(x_max);
  const int step = std::max(1, x_ticks / 8);
  for (int k = 0; k <= x_ticks; k += step) {
    const double x = px(std::exp2(k));
    s << "<line x1=\"" << x << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << x << "\" y2=\""
      << kTop + plot_h + 4 << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << x << "\" y=\"" << kTop + plot_h + 18
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << k
      << "</text>\n";
  }
  s << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 18
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">log2(tau)</text>\n";
  s << "<text transform=\"translate(18," << kTop + plot_h / 2
    << ") rotate(-90)\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
    << "fraction of problems</text>\n";

  for (std::size_t k = 0; k < d.solvers.size(); ++k) {
    const char* color = kColors[k % 8];
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    double prev = d.curves[k].front();
    s << px(d.taus.front()) << ',' << py(prev);
    for (std::size_t i = 1; i < d.taus.size(); ++i) {
      s << ' ' << px(d.taus[i]) << ',' << py(prev);
      prev = d.curves[k][i];
      s << ' ' << px(d.taus[i]) << ',' << py(prev);
    }
    s << ' ' << px(std::exp2(x_max)) << ',' << py(prev) << "\"/>\n";
    const double ly = kTop + 20.0 + 20.0 * static_cast<double>(k);
    s << "<line x1=\"" << kWidth - kRight + 15 << "\" y1=\"" << ly << "\" x2=\""
      << kWidth - kRight + 40 << "\" y2=\"" << ly << "\" stroke=\"" << color
      << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << kWidth - kRight + 46 << "\" y=\"" << ly + 4
      << "\" font-family=\"sans-serif\" font-size=\"12\">" << d.solvers[k] << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

/**
 * Random-instance grid: for each n, `count` instances with seeds
 * seed, seed + 1, ... and t = max(1, rule(n)). The rule is either a
 * constant ("1000"), "n*<s>" or "n/<d>".
 */
struct RandomGrid {
  std::vector<int> dims;
  std::string t_rule = "n/100";
  int count = 1;
  int repetitions = 3;
  std::uint64_t seed = 1;

  double t_for(int n) const {
    double t = 0.0;
    try {
      if (t_rule.rfind("n*", 0) == 0) {
        t = n * std::stod(t_rule.substr(2));
      } else if (t_rule.rfind("n/", 0) == 0) {
        t = n / std::stod(t_rule.substr(2));
      } else if (t_rule == "n") {
        t = n;
      } else {
        t = std::stod(t_rule);
      }
    } catch (const std::logic_error&) {
      throw std::invalid_argument("invalid t-rule '" + t_rule + "'");
    }
    if (!(t > 0.0)) throw std::invalid_argument("t-rule must give a positive value");
    return std::max(1.0, t);
  }

  std::vector<BenchInstance> instances() const {
    std::vector<BenchInstance> out;
    for (int n : dims) {
      const double t = t_for(n);
      for (int i = 0; i < count; ++i) {
        RandomSpec spec{n, t, seed + static_cast<std::uint64_t>(i)};
        std::ostringstream name;
        name << "rand_n" << n << "_t" << detail::csv_number(t) << "_s" << spec.seed;
        out.push_back({name.str(), [spec] { return to_raw(random_qp(spec)); }});
      }
    }
    return out;
  }
};

/// Parses "n=50:100:200,t-rule=n/100,count=2,reps=3,seed=7".
inline RandomGrid parse_random_grid(const std::string& text) {
  RandomGrid g;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("grid item without '=': " + item);
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    try {
      if (key == "n") {
        std::istringstream dims(value);
        std::string d;
        while (std::getline(dims, d, ':')) g.dims.push_back(std::stoi(d));
      } else if (key == "t-rule" || key == "t") {
        g.t_rule = value;
      } else if (key == "count") {
        g.count = std::stoi(value);
      } else if (key == "reps") {
        g.repetitions = std::stoi(value);
      } else if (key == "seed") {
        g.seed = std::stoull(value);
      } else {
        throw std::invalid_argument("unknown grid key '" + key + "'");
      }
    } catch (const std::logic_error& e) {
      if (dynamic_cast<const std::invalid_argument*>(&e) &&
          std::string(e.what()).rfind("unknown grid key", 0) == 0) {
        throw;
      }
      throw std::invalid_argument("invalid value for grid key '" + key + "'");
    }
  }
  if (g.dims.empty()) throw std::invalid_argument("grid needs n=<dims>");
  for (int n : g.dims) {
    if (n < 1) throw std::invalid_argument("grid dimensions must be positive");
  }
  if (g.count < 1 || g.repetitions < 1) {
    throw std::invalid_argument("grid count and reps must be >= 1");
  }
  (void)g.t_for(g.dims.front());
  return g;
}

/// Parses "mehrotra:meancompl<THRESHOLD".
inline WarmStartRule parse_warm_start(const std::string& text) {
  const std::string prefix = "mehrotra:meancompl<";
  if (text.rfind(prefix, 0) != 0) {
    throw std::invalid_argument("warm start must look like mehrotra:meancompl<1");
  }
  WarmStartRule rule;
  rule.enabled = true;
  try {
    rule.mean_compl_threshold = std::stod(text.substr(prefix.size()));
  } catch (const std::logic_error&) {
    throw std::invalid_argument("invalid warm-start threshold");
  }
  if (!(rule.mean_compl_threshold > 0.0)) {
    throw std::invalid_argument("warm-start threshold must be positive");
  }
  return rule;
}

/// XIPM_FIXTURE_DIR when set and non-empty, else the fallback.
inline std::filesystem::path fixture_directory(const std::filesystem::path& fallback) {
  const char* env = std::getenv("XIPM_FIXTURE_DIR");
  return env && *env ? std::filesystem::path(env) : fallback;
}

/// Instances from every *.qps / *.mps file in a directory, sorted by name.
inline std::vector<BenchInstance> directory_instances(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error("not a directory: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".qps" || ext == ".mps") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<BenchInstance> out;
  for (const auto& f : files) {
    out.push_back({f.stem().string(), [f] { return read_qps_file(f.string()); }});
  }
  return out;
}

/// Mean ± one standard deviation of the measured time per (n, solver) over
/// every solved rep of a random grid run.
struct GridSummaryRow {
  int n = 0;
  std::string solver;
  int runs = 0;
  int solved = 0;
  double mean_ms = 0.0;
  double std_ms = 0.0;
};

inline std::vector<GridSummaryRow> summarize_grid(const std::vector<BenchRow>& rows) {
  std::map<std::pair<int, std::string>, std::vector<double>> times;
  std::map<std::pair<int, std::string>, int> runs;
  for (const auto& r : rows) {
    const auto pos = r.problem.find("_n");
    if (pos == std::string::npos) continue;
    const int n = std::atoi(r.problem.c_str() + pos + 2);
    runs[{n, r.solver}] += 1;
    if (r.status == "optimal") times[{n, r.solver}].push_back(r.time_ms);
  }
  std::vector<GridSummaryRow> out;
  for (const auto& [key, count] : runs) {
    GridSummaryRow row;
    row.n = key.first;
    row.solver = key.second;
    row.runs = count;
    const auto& t = times[key];
    row.solved = static_cast<int>(t.size());
    if (!t.empty()) {
      double sum = 0.0;
      for (double v : t) sum += v;
      row.mean_ms = sum / static_cast<double>(t.size());
      double sq = 0.0;
      for (double v : t) sq += (v - row.mean_ms) * (v - row.mean_ms);
      row.std_ms = t.size() > 1 ? std::sqrt(sq / static_cast<double>(t.size() - 1)) : 0.0;
    }
    out.push_back(row);
  }
  return out;
}

inline std::string summary_csv(const std::vector<GridSummaryRow>& rows) {
  std::ostringstream out;
  out << "n,solver,runs,solved,mean_ms,std_ms\n";
  for (const auto& r : rows) {
    out << r.n << ',' << r.solver << ',' << r.runs << ',' << r.solved << ','
        << detail::csv_number(r.mean_ms) << ',' << detail::csv_number(r.std_ms) << '\n';
  }
  return out.str();
}

}  // namespace xipm
