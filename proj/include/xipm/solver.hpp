#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "xipm/extrapolation.hpp"
#include "xipm/kkt.hpp"
#include "xipm/qp_model.hpp"

namespace xipm {

enum class Algorithm { extrapolation, newton_baseline, mehrotra };

enum class SolveStatus {
  optimal,
  timeout,
  stagnation,
  linear_algebra_failure,
  iteration_limit,
  threshold_reached,  // Mehrotra stopped on its mean-complementarity cutoff
};

inline constexpr std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::extrapolation: return "extrapolation";
    case Algorithm::newton_baseline: return "newton";
    case Algorithm::mehrotra: return "mehrotra";
  }
  return "extrapolation";
}

inline std::optional<Algorithm> parse_algorithm(std::string_view s) {
  if (s == "extrapolation") return Algorithm::extrapolation;
  if (s == "newton" || s == "newton-baseline") return Algorithm::newton_baseline;
  if (s == "mehrotra") return Algorithm::mehrotra;
  return std::nullopt;
}

inline constexpr std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::timeout: return "timeout";
    case SolveStatus::stagnation: return "stagnation";
    case SolveStatus::linear_algebra_failure: return "linear-algebra-failure";
    case SolveStatus::iteration_limit: return "iteration-limit";
    case SolveStatus::threshold_reached: return "threshold-reached";
  }
  return "optimal";
}

struct SolverConfig {
  Algorithm algorithm = Algorithm::extrapolation;
  int order = 4;
  double kappa = 5.0;
  std::optional<double> mu0;  // defaults to the starting point's μ
  double mu_floor = 1e-12;
  double mu_divisor = 4.0;
  double inner_tol_factor = 1.0;  // ε(μ) = inner_tol_factor · μ in the ∞-norm

  double armijo = 1e-9;
  double backtrack = 0.5;
  int max_backtracks = 60;
  int max_inner_iterations = 100;
  int max_outer_iterations = 500;

  double kkt_tol = 1e-8;
  bool scale_tol_by_data = true;  // tolerance × (1 + largest data entry)
  double stagnation_tol = 1e-14;
  int stagnation_window = 3;
  double time_limit_seconds = 60.0;

  FactorizationMode factorization = FactorizationMode::automatic;
  bool extrapolate_every_inner = true;
  ThetaScaling theta_scaling = ThetaScaling::per_order;
  double interior_floor = kSmallestNormal;
  double singular_shift = 1e-10;  // × μ on the complementarity diagonal

  // Mehrotra predictor-corrector.
  double centering_exponent = 3.0;
  double boundary_fraction = 0.995;
  double stop_mean_compl = 0.0;  // > 0: stop once the mean complementarity drops below

  bool record_iterates = false;  // keep w_{k+1} in every trace record

  void validate() const {
    if (order < 1 || order > kMaxOrder) {
      throw std::invalid_argument("order p must be in [1, 10]");
    }
    if (!(kappa > 1.0)) throw std::invalid_argument("kappa must exceed 1");
    if (algorithm == Algorithm::extrapolation && kappa > order + 1) {
      throw std::invalid_argument("kappa must not exceed p + 1");
    }
    if (!(mu_floor > 0.0) || !(mu_divisor > 1.0)) {
      throw std::invalid_argument("mu floor must be positive and divisor above 1");
    }
    if (!(backtrack > 0.0 && backtrack < 1.0)) {
      throw std::invalid_argument("backtrack factor must lie in (0, 1)");
    }
    if (mu0 && !(*mu0 > 0.0)) throw std::invalid_argument("mu0 must be positive");
  }

  std::vector<std::string> warnings() const {
    std::vector<std::string> out;
    if (algorithm == Algorithm::extrapolation && kappa == order + 1) {
      out.emplace_back("kappa = p + 1 is the closed end of the admissible interval");
    }
    return out;
  }
};

/// One outer iteration (one barrier value) of a solve.
struct TraceRecord {
  int k = 0;
  double mu = 0.0;
  int inner_iterations = 0;  // moves after the first one
  int newton_moves = 0;      // moves, first included, won by the Newton step
  StepLabel label = StepLabel::none;
  double theta = 0.0;
  double merit_before = 0.0;
  double merit_after = 0.0;
  double residual_mu_inf = 0.0;  // ‖F^{μ_k}(w_{k+1})‖∞
  double residual0_inf = 0.0;    // ‖F^0(w_{k+1})‖∞
  double seconds = 0.0;
  bool inner_converged = false;
  Vector iterate;  // stacked w_{k+1}; empty unless record_iterates
};

struct SolveResult {
  SolveStatus status = SolveStatus::iteration_limit;
  Iterate w;
  double mu = 0.0;
  double objective = 0.0;
  double kkt_inf = 0.0;
  int outer_iterations = 0;
  int inner_iterations = 0;
  double seconds = 0.0;
  std::vector<TraceRecord> trace;
  std::vector<std::string> warnings;
};

/// μ_{k+1} = max(floor, min(μ^κ, μ / divisor)).
inline double update_mu(double mu, const SolverConfig& cfg) {
  return std::max(cfg.mu_floor, std::min(std::pow(mu, cfg.kappa), mu / cfg.mu_divisor));
}

inline double kkt_tolerance(const QpProblem& p, const SolverConfig& cfg) {
  return cfg.kkt_tol * (cfg.scale_tol_by_data ? 1.0 + p.data_norm() : 1.0);
}

namespace detail {

using Clock = std::chrono::steady_clock;

struct Move {
  Iterate next;
  StepLabel label = StepLabel::none;
  double theta = 0.0;
  double merit = kInfinity;
  bool failed = false;  // linear algebra failure
};

/// Shared machinery for the Newton and extrapolation moves.
class StepTaker {
 public:
  StepTaker(const QpProblem& p, const SolverConfig& cfg) : p_(p), cfg_(cfg) {}

  /**
   * One move from w at barrier value μ: a ratio-test-capped, Armijo
   * backtracked Newton step, compared (when use_extrapolation) against the
   * order-p extrapolation step at the largest feasible θ. The candidate
   * with the smaller merit wins; ties go to the extrapolation step.
   */
  Move take(const Iterate& w, double mu, bool use_extrapolation) const {
    Move move;
    move.next = w;
    const double merit_w = merit(residual(p_, w, mu));
    move.merit = merit_w;

    KktFactorization fac = jacobian(p_, w, cfg_.factorization);
    if (fac.singular()) {
      use_extrapolation = false;
      fac = jacobian(p_, w, cfg_.factorization, cfg_.singular_shift * mu);
      if (fac.singular()) {
        move.failed = true;
        return move;
      }
    }
    const TaylorTerms terms =
        compute_terms(p_, fac, w, mu, use_extrapolation ? cfg_.order : 1);

    StepCandidate newton = line_searched_newton(w, terms.terms.front(), mu, merit_w);
    StepCandidate best = newton;

    if (use_extrapolation) {
      const double theta =
          feasible_theta(p_, terms, cfg_.interior_floor, cfg_.theta_scaling);
      if (theta > 0.0) {
        StepCandidate ext;
        ext.target = assemble(terms, theta, cfg_.theta_scaling);
        ext.theta = theta;
        ext.order = cfg_.order;
        ext.label = StepLabel::extrapolation;
        ext.merit = merit(residual(p_, ext.target, mu));
        if (ext.merit <= best.merit) best = std::move(ext);
      }
    }
    if (best.label == StepLabel::none) return move;  // nothing acceptable
    move.next = std::move(best.target);
    move.label = best.label;
    move.theta = best.theta;
    move.merit = best.merit;
    return move;
  }

 private:
  StepCandidate line_searched_newton(const Iterate& w, const Vector& direction,
                                     double mu, double merit_w) const {
    StepCandidate c;
    c.order = 1;
    double alpha = max_feasible_scaling(p_, w, direction, cfg_.interior_floor);
    for (int i = 0; i <= cfg_.max_backtracks && alpha > 0.0; ++i, alpha *= cfg_.backtrack) {
      Iterate trial = w.moved(direction, alpha);
      if (!is_interior(p_, trial, cfg_.interior_floor)) continue;
      const double m = merit(residual(p_, trial, mu));
      if (m <= (1.0 - cfg_.armijo * alpha) * merit_w) {
        c.target = std::move(trial);
        c.theta = alpha;
        c.label = StepLabel::newton;
        c.merit = m;
        return c;
      }
    }
    return c;
  }

  const QpProblem& p_;
  const SolverConfig& cfg_;
};

/// Counts consecutive moves with negligible iterate and merit change.
class StagnationMonitor {
 public:
  explicit StagnationMonitor(const SolverConfig& cfg) : cfg_(cfg) {}

  bool update(const Iterate& before, const Iterate& after, double merit_before,
              double merit_after) {
    const Vector wb = before.stacked();
    const double step = inf_norm(after.stacked() - wb) / (1.0 + inf_norm(wb));
    const double dm = std::abs(merit_after - merit_before) / std::max(1.0, merit_before);
    count_ = (step < cfg_.stagnation_tol && dm < cfg_.stagnation_tol) ? count_ + 1 : 0;
    return count_ >= cfg_.stagnation_window;
  }

 private:
  const SolverConfig& cfg_;
  int count_ = 0;
};

inline double elapsed(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

inline void finish(const QpProblem& p, SolveResult& r, Clock::time_point start) {
  r.objective = p.objective(r.w.x);
  r.kkt_inf = residual(p, r.w, 0.0).norm_inf();
  r.outer_iterations = static_cast<int>(r.trace.size());
  r.inner_iterations = 0;
  for (const auto& t : r.trace) r.inner_iterations += t.inner_iterations;
  r.seconds = elapsed(start);
}

inline void check_start(const QpProblem& p, const StartingPoint& start,
                        const SolverConfig& cfg) {
  p.validate();
  cfg.validate();
  if (start.x.size() != p.num_vars() || start.lambda.size() != p.num_constraints()) {
    throw std::invalid_argument("starting point dimensions do not match the problem");
  }
  if (!is_interior(p, {start.x, start.lambda}, cfg.interior_floor)) {
    throw std::invalid_argument("starting point is not strictly interior");
  }
}

}  // namespace detail

struct InnerResult {
  Iterate w;
  int iterations = 0;
  SolveStatus status = SolveStatus::optimal;
};

/**
 * Newton iterations on F^μ until ‖F^μ(w)‖∞ ≤ ε(μ). Status is optimal when
 * the criterion is met, otherwise iteration-limit, stagnation or
 * linear-algebra-failure.
 */
inline InnerResult inner_newton(const QpProblem& p, const Iterate& w, double mu,
                                const SolverConfig& cfg) {
  detail::StepTaker stepper(p, cfg);
  detail::StagnationMonitor stagnation(cfg);
  InnerResult out{w, 0, SolveStatus::optimal};
  double m = merit(residual(p, out.w, mu));
  while (residual(p, out.w, mu).norm_inf() > cfg.inner_tol_factor * mu) {
    if (out.iterations >= cfg.max_inner_iterations) {
      out.status = SolveStatus::iteration_limit;
      return out;
    }
    detail::Move move = stepper.take(out.w, mu, false);
    if (move.failed) {
      out.status = SolveStatus::linear_algebra_failure;
      return out;
    }
    ++out.iterations;
    const bool stalled = stagnation.update(out.w, move.next, m, move.merit);
    out.w = std::move(move.next);
    m = move.merit;
    if (stalled) {
      out.status = SolveStatus::stagnation;
      return out;
    }
  }
  return out;
}

/**
 * Extrapolation primal-dual interior-point method (algorithm = extrapolation)
 * or its Newton-only baseline (algorithm = newton_baseline).
 *
 * Per outer iteration k at barrier value μ_k: one first move (extrapolation
 * vs. line-searched Newton, smaller merit wins), then inner moves until
 * ‖F^{μ_k}‖∞ ≤ μ_k, then μ_{k+1} = min(μ_k^κ, μ_k / 4). The global stop
 * ‖F^0‖∞ ≤ tol is checked before the first iteration and after every move.
 */
inline SolveResult solve(const QpProblem& p, const StartingPoint& start,
                         const SolverConfig& cfg) {
  detail::check_start(p, start, cfg);
  if (cfg.algorithm == Algorithm::mehrotra) {
    throw std::invalid_argument("use solve_mehrotra for the Mehrotra algorithm");
  }
  const auto t0 = detail::Clock::now();
  const bool extrapolate = cfg.algorithm == Algorithm::extrapolation;
  const double tol = kkt_tolerance(p, cfg);

  SolveResult result;
  result.warnings = cfg.warnings();
  result.w = {start.x, start.lambda};
  double mu = cfg.mu0.value_or(start.mu);
  result.mu = mu;

  auto globally_optimal = [&](const Iterate& w) {
    return residual(p, w, 0.0).norm_inf() <= tol;
  };
  if (globally_optimal(result.w)) {
    result.status = SolveStatus::optimal;
    detail::finish(p, result, t0);
    return result;
  }

  detail::StepTaker stepper(p, cfg);
  detail::StagnationMonitor stagnation(cfg);
  std::optional<SolveStatus> stop;

  for (int k = 0; k < cfg.max_outer_iterations && !stop; ++k) {
    TraceRecord rec;
    rec.k = k;
    rec.mu = mu;
    double m = merit(residual(p, result.w, mu));
    rec.merit_before = m;

    // First move after setting μ_k.
    detail::Move first = stepper.take(result.w, mu, extrapolate);
    if (first.failed) {
      stop = SolveStatus::linear_algebra_failure;
    } else {
      rec.label = first.label;
      rec.theta = first.theta;
      rec.newton_moves += first.label == StepLabel::newton ? 1 : 0;
      const bool stalled = stagnation.update(result.w, first.next, m, first.merit);
      result.w = std::move(first.next);
      m = first.merit;
      if (globally_optimal(result.w)) {
        stop = SolveStatus::optimal;
      } else if (stalled) {
        stop = SolveStatus::stagnation;
      }
    }

    // Inner minimization.
    while (!stop) {
      if (residual(p, result.w, mu).norm_inf() <= cfg.inner_tol_factor * mu) {
        rec.inner_converged = true;
        break;
      }
      if (detail::elapsed(t0) > cfg.time_limit_seconds) {
        stop = SolveStatus::timeout;
        break;
      }
      if (rec.inner_iterations >= cfg.max_inner_iterations) {
        stop = SolveStatus::iteration_limit;
        break;
      }
      detail::Move move =
          stepper.take(result.w, mu, extrapolate && cfg.extrapolate_every_inner);
      if (move.failed) {
        stop = SolveStatus::linear_algebra_failure;
        break;
      }
      ++rec.inner_iterations;
      rec.newton_moves += move.label == StepLabel::newton ? 1 : 0;
      const bool stalled = stagnation.update(result.w, move.next, m, move.merit);
      result.w = std::move(move.next);
      m = move.merit;
      if (globally_optimal(result.w)) {
        stop = SolveStatus::optimal;
      } else if (stalled) {
        stop = SolveStatus::stagnation;
      }
    }

    const Residual r_mu = residual(p, result.w, mu);
    rec.inner_converged = rec.inner_converged ||
                          r_mu.norm_inf() <= cfg.inner_tol_factor * mu;
    rec.merit_after = merit(r_mu);
    rec.residual_mu_inf = r_mu.norm_inf();
    rec.residual0_inf = residual(p, result.w, 0.0).norm_inf();
    rec.seconds = detail::elapsed(t0);
    if (cfg.record_iterates) rec.iterate = result.w.stacked();
    result.trace.push_back(rec);
    result.mu = mu;

    if (!stop && rec.residual0_inf <= tol) stop = SolveStatus::optimal;
    if (!stop && rec.seconds > cfg.time_limit_seconds) stop = SolveStatus::timeout;
    mu = update_mu(mu, cfg);
  }

  result.status = stop.value_or(SolveStatus::iteration_limit);
  detail::finish(p, result, t0);
  return result;
}

/**
 * Mehrotra predictor-corrector on the same KKT system: affine-scaling
 * predictor, centering σ = (μ_aff / μ)^3, combined corrector, single step
 * length with fraction-to-boundary 0.995. One factorization per iteration.
 * The trace records the mean complementarity as μ.
 */
inline SolveResult solve_mehrotra(const QpProblem& p, const StartingPoint& start,
                                  const SolverConfig& cfg) {
  detail::check_start(p, start, cfg);
  const auto t0 = detail::Clock::now();
  const double tol = kkt_tolerance(p, cfg);
  const int n = p.num_vars();
  const int m_i = p.num_ineq();

  SolveResult result;
  result.w = {start.x, start.lambda};
  detail::StagnationMonitor stagnation(cfg);
  std::optional<SolveStatus> stop;

  auto largest_step = [&](const Iterate& w, const Vector& d) {
    Vector value(2 * m_i), rate(2 * m_i);
    value << p.ineq_values(w.x), w.lambda.head(m_i);
    rate << p.a_ineq * d.head(n), d.segment(n, m_i);
    double alpha = kInfinity;
    for (Eigen::Index i = 0; i < value.size(); ++i) {
      if (rate[i] < 0.0) alpha = std::min(alpha, value[i] / -rate[i]);
    }
    return alpha;
  };

  for (int k = 0; !stop; ++k) {
    const Residual r0 = residual(p, result.w, 0.0);
    const double mu = mean_complementarity(p, result.w.x, result.w.lambda);
    result.mu = mu;
    if (r0.norm_inf() <= tol) {
      stop = SolveStatus::optimal;
      break;
    }
    if (cfg.stop_mean_compl > 0.0 && m_i > 0 && mu < cfg.stop_mean_compl) {
      stop = SolveStatus::threshold_reached;
      break;
    }
    if (detail::elapsed(t0) > cfg.time_limit_seconds) {
      stop = SolveStatus::timeout;
      break;
    }
    if (k >= cfg.max_outer_iterations) {
      stop = SolveStatus::iteration_limit;
      break;
    }

    KktFactorization fac = jacobian(p, result.w, cfg.factorization);
    if (fac.singular()) {
      fac = jacobian(p, result.w, cfg.factorization,
                     cfg.singular_shift * std::max(mu, cfg.mu_floor));
      if (fac.singular()) {
        stop = SolveStatus::linear_algebra_failure;
        break;
      }
    }

    const Vector affine = fac.solve(-r0.stacked());
    Vector rhs;
    if (m_i > 0) {
      const double alpha_aff = std::min(1.0, largest_step(result.w, affine));
      const Vector c_aff = p.ineq_values(result.w.x) +
                           alpha_aff * (p.a_ineq * affine.head(n));
      const Vector l_aff = result.w.lambda.head(m_i) + alpha_aff * affine.segment(n, m_i);
      const double mu_aff = c_aff.dot(l_aff) / m_i;
      const double sigma = std::pow(std::max(mu_aff, 0.0) / mu, cfg.centering_exponent);
      rhs = -residual(p, result.w, sigma * mu).stacked();
      rhs.segment(n, m_i) -=
          affine.segment(n, m_i).cwiseProduct(p.a_ineq * affine.head(n));
    } else {
      rhs = -r0.stacked();
    }
    const Vector d = fac.solve(rhs);
    const double alpha = std::min(1.0, cfg.boundary_fraction * largest_step(result.w, d));

    TraceRecord rec;
    rec.k = k;
    rec.mu = mu;
    rec.label = StepLabel::newton;
    rec.theta = alpha;
    rec.merit_before = merit(r0);
    Iterate next = result.w.moved(d, alpha);
    const Residual r_next = residual(p, next, 0.0);
    rec.merit_after = merit(r_next);
    rec.residual0_inf = r_next.norm_inf();
    rec.residual_mu_inf = rec.residual0_inf;
    rec.inner_converged = true;
    const bool stalled =
        stagnation.update(result.w, next, rec.merit_before, rec.merit_after);
    result.w = std::move(next);
    rec.seconds = detail::elapsed(t0);
    if (cfg.record_iterates) rec.iterate = result.w.stacked();
    result.trace.push_back(rec);
    if (stalled) stop = SolveStatus::stagnation;
  }

  result.status = stop.value_or(SolveStatus::iteration_limit);
  detail::finish(p, result, t0);
  return result;
}

/// Dispatches on cfg.algorithm.
inline SolveResult run_solver(const QpProblem& p, const StartingPoint& start,
                              const SolverConfig& cfg) {
  return cfg.algorithm == Algorithm::mehrotra ? solve_mehrotra(p, start, cfg)
                                              : solve(p, start, cfg);
}

}  // namespace xipm
