#include <gtest/gtest.h>

#include <cstdlib>

#include "support.hpp"

using namespace xipm;

namespace {

BenchRow row(const std::string& problem, const std::string& solver, double ms,
             const std::string& status = "optimal", int rep = 0) {
  BenchRow r;
  r.problem = problem;
  r.solver = solver;
  r.time_ms = ms;
  r.status = status;
  r.rep = rep;
  return r;
}

std::string strip_timing(const std::vector<BenchRow>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += r.problem + ',' + r.solver + ',' + std::to_string(r.rep) + ',' + r.status + ',' +
           std::to_string(r.outer_iterations) + ',' + std::to_string(r.inner_iterations) + '\n';
  }
  return out;
}

BenchInstance toy_instance() {
  return {"toy", [] { return read_qps_file(test::data_path("toy.qps")); }};
}

}  // namespace

TEST(BuildProfile, HandExample) {
  const auto d = build_profile({row("p1", "A", 1), row("p1", "B", 2), row("p2", "A", 4), row("p2", "B", 2)});
  EXPECT_EQ(d.fraction_at("A", 1.0), 0.5);
  EXPECT_EQ(d.fraction_at("B", 1.0), 0.5);
  EXPECT_EQ(d.fraction_at("A", 2.0), 1.0);
  EXPECT_EQ(d.fraction_at("B", 2.0), 1.0);
  EXPECT_EQ(d.taus, (std::vector<double>{1.0, 2.0}));
  EXPECT_EQ(d.curves[0], (std::vector<double>{0.5, 1.0}));
  EXPECT_EQ(d.curves[1], (std::vector<double>{0.5, 1.0}));
}

TEST(BuildProfile, BestOfRepetitions) {
  const auto d = build_profile({row("p", "A", 5, "optimal", 0), row("p", "A", 3, "optimal", 1),
                                row("p", "A", 1, "timeout", 2), row("p", "B", 6)});
  EXPECT_EQ(d.best_time(0, 0), 3.0);
  EXPECT_EQ(d.ratios(0, 1), 2.0);
}

TEST(BuildProfile, SingleSolverIsFlatAtOne) {
  const auto d = build_profile({row("p1", "A", 1), row("p2", "A", 7)});
  EXPECT_EQ(d.taus, (std::vector<double>{1.0}));
  EXPECT_EQ(d.fraction_at("A", 1.0), 1.0);
}

TEST(BuildProfile, FailingSolverStaysAtZero) {
  const auto d = build_profile({row("p1", "A", 1), row("p1", "B", 1, "timeout"),
                                row("p2", "A", 2), row("p2", "B", 3, "stagnation")});
  for (double v : d.curves[1]) EXPECT_EQ(v, 0.0);
  EXPECT_TRUE(std::isinf(d.ratios(0, 1)));
  EXPECT_EQ(d.fraction_at("B", 1e300), 0.0);
}

TEST(BuildProfile, ExcludesProblemsUnsolvedByAll) {
  const auto d = build_profile({row("p1", "A", 1), row("p2", "A", 1, "timeout")});
  EXPECT_EQ(d.problems, (std::vector<std::string>{"p1"}));
  EXPECT_EQ(d.excluded_problems, (std::vector<std::string>{"p2"}));
}

TEST(BuildProfile, Errors) {
  EXPECT_THROW(build_profile({}), Error);
  EXPECT_THROW(build_profile({row("p", "A", 1, "timeout")}), Error);
}

TEST(BuildProfile, CurvesMonotoneAndBounded) {
  Rng rng(3);
  std::vector<BenchRow> rows;
  const std::vector<std::string> solvers = {"A", "B", "C"};
  for (int p = 0; p < 30; ++p) {
    for (const auto& s : solvers) {
      const bool solved = rng.uniform01() < 0.8;
      rows.push_back(row("p" + std::to_string(p), s, rng.uniform(1, 100), solved ? "optimal" : "timeout"));
    }
  }
  const auto d = build_profile(rows);
  for (std::size_t s = 0; s < solvers.size(); ++s) {
    for (std::size_t i = 0; i < d.taus.size(); ++i) {
      EXPECT_GE(d.curves[s][i], 0.0);
      EXPECT_LE(d.curves[s][i], 1.0);
      if (i > 0) EXPECT_GE(d.curves[s][i], d.curves[s][i - 1]);
    }
    bool all = true;
    for (Eigen::Index p = 0; p < d.ratios.rows(); ++p) all = all && std::isfinite(d.ratios(p, s));
    if (all) EXPECT_EQ(d.curves[s].back(), 1.0);
  }
}

TEST(ProfileOutput, SvgHasOneCurvePerSolver) {
  const auto d = build_profile({row("p1", "A", 1), row("p1", "B", 2), row("p2", "A", 4), row("p2", "B", 2)});
  const std::string svg = profile_svg(d);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  std::size_t count = 0, pos = 0;
  while ((pos = svg.find("<polyline", pos)) != std::string::npos) {
    ++count;
    ++pos;
  }
  EXPECT_EQ(count, 2u);
  EXPECT_NE(svg.find("log2(tau)"), std::string::npos);
  EXPECT_EQ(profile_csv(d), "tau,A,B\n1,0.5,0.5\n2,1,1\n");
}

TEST(ResultsCsv, RoundTrip) {
  std::vector<BenchRow> rows = {row("p1", "A", 1.25), row("p2", "B", 3.5, "timeout", 2)};
  rows[0].outer_iterations = 7;
  rows[0].inner_iterations = 3;
  rows[0].kkt_inf = 1e-9;
  rows[0].objective = -4.6818181818181817;
  const auto back = parse_csv(to_csv(rows));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].outer_iterations, 7);
  EXPECT_EQ(back[0].objective, rows[0].objective);
  EXPECT_EQ(back[1].status, "timeout");
  EXPECT_EQ(back[1].rep, 2);
  EXPECT_EQ(to_csv(back), to_csv(rows));
}

TEST(ResultsCsv, RejectsBadInput) {
  EXPECT_THROW(parse_csv("nope\n"), Error);
  EXPECT_THROW(parse_csv(std::string(kBenchCsvHeader) + "\np,A,0,optimal,x,1,2\n"), Error);
  EXPECT_THROW(parse_csv(std::string(kBenchCsvHeader) + "\np,A,0\n"), Error);
}

TEST(RandomGrid, Parse) {
  const auto g = parse_random_grid("n=50:100,t-rule=n/100,count=2,reps=3,seed=7");
  EXPECT_EQ(g.dims, (std::vector<int>{50, 100}));
  EXPECT_EQ(g.count, 2);
  EXPECT_EQ(g.repetitions, 3);
  EXPECT_EQ(g.seed, 7u);
  EXPECT_EQ(g.t_for(50), 1.0);  // n/100 = 0.5 raised to the minimum 1
  EXPECT_EQ(g.t_for(400), 4.0);
  EXPECT_EQ(g.instances().size(), 4u);
  EXPECT_EQ(parse_random_grid("n=10,t=1000").t_for(10), 1000.0);
  EXPECT_EQ(parse_random_grid("n=10,t-rule=n*2").t_for(10), 20.0);
}

TEST(RandomGrid, RejectsInvalid) {
  EXPECT_THROW(parse_random_grid("t-rule=n/100"), std::invalid_argument);
  EXPECT_THROW(parse_random_grid("n=0"), std::invalid_argument);
  EXPECT_THROW(parse_random_grid("n=5,bogus=1"), std::invalid_argument);
  EXPECT_THROW(parse_random_grid("n=5,t-rule=abc"), std::invalid_argument);
  EXPECT_THROW(parse_random_grid("n=5,reps=0"), std::invalid_argument);
  EXPECT_THROW(parse_random_grid("n=x"), std::invalid_argument);
}

TEST(WarmStart, ParseRule) {
  const auto r = parse_warm_start("mehrotra:meancompl<1");
  EXPECT_TRUE(r.enabled);
  EXPECT_EQ(r.mean_compl_threshold, 1.0);
  EXPECT_THROW(parse_warm_start("newton:meancompl<1"), std::invalid_argument);
  EXPECT_THROW(parse_warm_start("mehrotra:meancompl<-1"), std::invalid_argument);
}

TEST(WarmStart, ToyEndsBelowThresholdAndInterior) {
  const auto prepared = prepare(read_qps_file(test::data_path("toy.qps")));
  WarmStartRule rule;
  rule.enabled = true;
  const auto ws = warm_start_phase(prepared.problem, prepared.start, rule);
  ASSERT_TRUE(ws.start.has_value()) << ws.failure;
  EXPECT_GT(ws.iterations, 0);
  const double mc = mean_complementarity(prepared.problem, ws.start->x, ws.start->lambda);
  EXPECT_LT(mc, 1.0);
  EXPECT_EQ(ws.start->mu, mc);
  EXPECT_TRUE(is_interior(prepared.problem, {ws.start->x, ws.start->lambda}));
}

TEST(WarmStart, AlreadyBelowThresholdTakesNoIterations) {
  const auto p = test::toy_problem();
  const StartingPoint s{Vector::Constant(1, 2.0), Vector::Constant(1, 0.5), 0.5};
  WarmStartRule rule;
  rule.enabled = true;
  const auto ws = warm_start_phase(p, s, rule);
  ASSERT_TRUE(ws.start.has_value());
  EXPECT_EQ(ws.iterations, 0);
}

TEST(WarmStart, TimeoutExcludesInstanceWithoutAbortingBatch) {
  BenchPlan plan;
  plan.instances = {toy_instance(),
                    {"broken", [] { return read_qps_file(test::data_path("unsupported_marker.qps")); }}};
  plan.solvers = default_solvers();
  plan.repetitions = 1;
  plan.warm_start.enabled = true;
  plan.warm_start.time_limit_seconds = -1.0;
  const auto out = run_bench(plan);
  EXPECT_TRUE(out.rows.empty());
  ASSERT_EQ(out.excluded.size(), 2u);
  EXPECT_NE(out.excluded[0].reason.find("no starting point"), std::string::npos);
  EXPECT_NE(out.excluded[1].reason.find("preprocessing failed"), std::string::npos);
}

TEST(RunBench, FixturesWithWarmStart) {
  BenchPlan plan;
  plan.instances = directory_instances(XIPM_TEST_DATA_DIR);
  plan.solvers = default_solvers();
  plan.repetitions = 2;
  plan.warm_start = parse_warm_start("mehrotra:meancompl<1");
  const auto out = run_bench(plan);
  // unsupported_marker is excluded, hs51 has no inequalities and starts as is.
  EXPECT_EQ(out.excluded.size(), 1u);
  EXPECT_EQ(out.rows.size(), (plan.instances.size() - 1) * 3 * 2);
  for (const auto& r : out.rows) EXPECT_EQ(r.status, "optimal") << r.problem << ' ' << r.solver;
  const auto d = build_profile(out.rows);
  EXPECT_EQ(d.problems.size(), plan.instances.size() - 1);
}

TEST(RunBench, DeterministicApartFromTiming) {
  BenchPlan plan;
  plan.instances = parse_random_grid("n=10:20,count=2,seed=5").instances();
  plan.solvers = default_solvers();
  plan.repetitions = 2;
  const auto a = run_bench(plan);
  const auto b = run_bench(plan);
  EXPECT_EQ(strip_timing(a.rows), strip_timing(b.rows));
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].objective, b.rows[i].objective);
    EXPECT_EQ(a.rows[i].kkt_inf, b.rows[i].kkt_inf);
  }
}

TEST(GridSummary, MeanAndStd) {
  const auto s = summarize_grid({row("rand_n10_t1_s1", "A", 1), row("rand_n10_t1_s2", "A", 3),
                                 row("rand_n10_t1_s3", "A", 9, "timeout"), row("rand_n20_t1_s1", "A", 4)});
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].n, 10);
  EXPECT_EQ(s[0].runs, 3);
  EXPECT_EQ(s[0].solved, 2);
  EXPECT_DOUBLE_EQ(s[0].mean_ms, 2.0);
  EXPECT_DOUBLE_EQ(s[0].std_ms, std::sqrt(2.0));
  EXPECT_EQ(s[1].std_ms, 0.0);
}

TEST(Fixtures, DirectoryOverride) {
  ::setenv("XIPM_FIXTURE_DIR", "/some/where", 1);
  EXPECT_EQ(fixture_directory("fallback"), std::filesystem::path("/some/where"));
  ::unsetenv("XIPM_FIXTURE_DIR");
  EXPECT_EQ(fixture_directory("fallback"), std::filesystem::path("fallback"));
  EXPECT_THROW(directory_instances("/definitely/not/here"), Error);
}
