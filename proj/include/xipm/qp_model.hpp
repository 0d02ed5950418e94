#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "xipm/core.hpp"

namespace xipm {

/**
 * Convex quadratic program
 *
 *   minimize    ½ xᵀ H x + cᵀ x
 *   subject to  a_ineq x + b_ineq ≥ 0
 *               a_eq   x + b_eq   = 0
 *
 * Multipliers are stacked inequality rows first, then equality rows.
 * The constant objective_offset is metadata: it enters reported objective
 * values only, never residuals or Jacobians.
 */
struct QpProblem {
  std::string name;
  SparseMatrix hessian;
  Vector linear_cost;
  SparseMatrix a_ineq;
  Vector b_ineq;
  SparseMatrix a_eq;
  Vector b_eq;
  double objective_offset = 0.0;

  int num_vars() const { return static_cast<int>(linear_cost.size()); }
  int num_ineq() const { return static_cast<int>(b_ineq.size()); }
  int num_eq() const { return static_cast<int>(b_eq.size()); }
  int num_constraints() const { return num_ineq() + num_eq(); }

  Vector ineq_values(const Vector& x) const { return a_ineq * x + b_ineq; }
  Vector eq_values(const Vector& x) const { return a_eq * x + b_eq; }
  Vector gradient(const Vector& x) const { return hessian * x + linear_cost; }

  double objective(const Vector& x) const {
    return 0.5 * x.dot(hessian * x) + linear_cost.dot(x) + objective_offset;
  }

  /// Largest absolute entry over all problem data.
  double data_norm() const {
    double out = std::max({max_abs_entry(hessian), max_abs_entry(a_ineq),
                           max_abs_entry(a_eq), inf_norm(linear_cost),
                           inf_norm(b_ineq), inf_norm(b_eq)});
    return out;
  }

  /// Throws std::invalid_argument on inconsistent dimensions or asymmetric H.
  void validate() const {
    const int n = num_vars();
    if (hessian.rows() != n || hessian.cols() != n) {
      throw std::invalid_argument("hessian must be n x n");
    }
    if (a_ineq.cols() != n || a_ineq.rows() != num_ineq()) {
      throw std::invalid_argument("a_ineq dimensions do not match b_ineq / n");
    }
    if (a_eq.cols() != n || a_eq.rows() != num_eq()) {
      throw std::invalid_argument("a_eq dimensions do not match b_eq / n");
    }
    SparseMatrix transposed = hessian.transpose();
    if ((hessian - transposed).norm() != 0.0) {
      throw std::invalid_argument("hessian must be stored symmetric");
    }
  }
};

/// A QP as read from a file: bounds on variables are still separate.
struct RawQp {
  std::string name;
  SparseMatrix hessian;
  Vector linear_cost;
  SparseMatrix a_ineq;
  Vector b_ineq;
  SparseMatrix a_eq;
  Vector b_eq;
  Vector lower;  // entries may be -inf
  Vector upper;  // entries may be +inf
  double objective_offset = 0.0;

  std::vector<std::string> variable_names;
  std::vector<std::string> ineq_names;
  std::vector<std::string> eq_names;

  int num_vars() const { return static_cast<int>(linear_cost.size()); }

  double objective(const Vector& x) const {
    return 0.5 * x.dot(hessian * x) + linear_cost.dot(x) + objective_offset;
  }

  void validate() const {
    const int n = num_vars();
    if (hessian.rows() != n || hessian.cols() != n || lower.size() != n ||
        upper.size() != n) {
      throw std::invalid_argument("raw QP: inconsistent variable dimensions");
    }
    if (a_ineq.cols() != n || a_ineq.rows() != b_ineq.size() ||
        a_eq.cols() != n || a_eq.rows() != b_eq.size()) {
      throw std::invalid_argument("raw QP: inconsistent constraint dimensions");
    }
  }
};

/// Raw form of an already normalized problem: all variables free.
inline RawQp to_raw(const QpProblem& p) {
  RawQp raw;
  raw.name = p.name;
  raw.hessian = p.hessian;
  raw.linear_cost = p.linear_cost;
  raw.a_ineq = p.a_ineq;
  raw.b_ineq = p.b_ineq;
  raw.a_eq = p.a_eq;
  raw.b_eq = p.b_eq;
  raw.lower = Vector::Constant(p.num_vars(), -kInfinity);
  raw.upper = Vector::Constant(p.num_vars(), kInfinity);
  raw.objective_offset = p.objective_offset;
  return raw;
}

struct FixedVariable {
  int index;  // original-space index
  double value;
};

/// Appended variable s with row `row` shifted to c_row(x) + s ≥ 0 and an
/// equality row s = 0 driving it back to zero.
struct ShiftVariable {
  int row;
  int variable;
  int eq_row;
  double initial_value;
};

struct PreprocessReport {
  int original_n = 0;
  std::vector<int> kept;  // normalized index -> original index
  std::vector<FixedVariable> fixed;
  std::vector<ShiftVariable> shifts;
  double objective_offset = 0.0;

  /// Maps a normalized-space primal vector (shift variables allowed at the
  /// tail) back to the original variable space.
  Vector restore(const Vector& x) const {
    Vector out = Vector::Zero(original_n);
    for (std::size_t j = 0; j < kept.size(); ++j) {
      out[kept[j]] = x[static_cast<Eigen::Index>(j)];
    }
    for (const auto& f : fixed) out[f.index] = f.value;
    return out;
  }

  Vector shift_values(const Vector& x) const {
    Vector out(static_cast<Eigen::Index>(shifts.size()));
    for (std::size_t k = 0; k < shifts.size(); ++k) {
      out[static_cast<Eigen::Index>(k)] = x[shifts[k].variable];
    }
    return out;
  }
};

struct StartingPoint {
  Vector x;
  Vector lambda;
  double mu = 1.0;
};

namespace detail {

inline SparseMatrix from_triplets(int rows, int cols,
                                  const std::vector<Triplet>& triplets) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

}  // namespace detail

/**
 * Turns finite bounds into inequality rows and eliminates fixed variables.
 *
 * Bound rows are appended after the general inequality rows, per kept
 * variable in index order: x_j - l_j ≥ 0 then -x_j + u_j ≥ 0.
 */
inline std::pair<QpProblem, PreprocessReport> normalize(const RawQp& raw) {
  raw.validate();
  const int n = raw.num_vars();

  PreprocessReport report;
  report.original_n = n;
  report.objective_offset = raw.objective_offset;

  std::vector<int> new_index(static_cast<std::size_t>(n), -1);
  Vector fixed_values = Vector::Zero(n);
  for (int j = 0; j < n; ++j) {
    const double l = raw.lower[j];
    const double u = raw.upper[j];
    if (l > u || l == kInfinity || u == -kInfinity) {
      throw InfeasibleBoundsError("variable " + std::to_string(j) +
                                  " has lower bound above upper bound");
    }
    if (l == u) {
      report.fixed.push_back({j, l});
      fixed_values[j] = l;
    } else {
      new_index[static_cast<std::size_t>(j)] =
          static_cast<int>(report.kept.size());
      report.kept.push_back(j);
    }
  }
  const int n_kept = static_cast<int>(report.kept.size());

  // Substitution of fixed values into objective and constraints.
  Vector h_fixed = raw.hessian * fixed_values;
  double offset = raw.objective_offset + 0.5 * fixed_values.dot(h_fixed) +
                  raw.linear_cost.dot(fixed_values);
  report.objective_offset = offset;

  auto restrict_columns = [&](const SparseMatrix& m) {
    std::vector<Triplet> t;
    for (int k = 0; k < m.outerSize(); ++k) {
      const int col = new_index[static_cast<std::size_t>(k)];
      if (col < 0) continue;
      for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
        t.emplace_back(static_cast<int>(it.row()), col, it.value());
      }
    }
    return t;
  };

  QpProblem p;
  p.name = raw.name;
  p.objective_offset = offset;

  {
    std::vector<Triplet> t;
    for (int k = 0; k < raw.hessian.outerSize(); ++k) {
      const int col = new_index[static_cast<std::size_t>(k)];
      if (col < 0) continue;
      for (SparseMatrix::InnerIterator it(raw.hessian, k); it; ++it) {
        const int row = new_index[static_cast<std::size_t>(it.row())];
        if (row >= 0) t.emplace_back(row, col, it.value());
      }
    }
    p.hessian = detail::from_triplets(n_kept, n_kept, t);
  }
  p.linear_cost.resize(n_kept);
  for (int j = 0; j < n_kept; ++j) {
    const int o = report.kept[static_cast<std::size_t>(j)];
    p.linear_cost[j] = raw.linear_cost[o] + h_fixed[o];
  }

  // General inequality rows followed by bound rows.
  std::vector<Triplet> ineq = restrict_columns(raw.a_ineq);
  std::vector<double> b_ineq(raw.b_ineq.data(),
                             raw.b_ineq.data() + raw.b_ineq.size());
  const Vector ineq_shift = raw.a_ineq * fixed_values;
  for (std::size_t i = 0; i < b_ineq.size(); ++i) {
    b_ineq[i] += ineq_shift[static_cast<Eigen::Index>(i)];
  }
  for (int j = 0; j < n_kept; ++j) {
    const int o = report.kept[static_cast<std::size_t>(j)];
    if (std::isfinite(raw.lower[o])) {
      ineq.emplace_back(static_cast<int>(b_ineq.size()), j, 1.0);
      b_ineq.push_back(-raw.lower[o]);
    }
    if (std::isfinite(raw.upper[o])) {
      ineq.emplace_back(static_cast<int>(b_ineq.size()), j, -1.0);
      b_ineq.push_back(raw.upper[o]);
    }
  }
  p.a_ineq = detail::from_triplets(static_cast<int>(b_ineq.size()), n_kept, ineq);
  p.b_ineq = Eigen::Map<Vector>(b_ineq.data(), static_cast<Eigen::Index>(b_ineq.size()));

  p.a_eq = detail::from_triplets(static_cast<int>(raw.b_eq.size()), n_kept,
                                 restrict_columns(raw.a_eq));
  p.b_eq = raw.b_eq + raw.a_eq * fixed_values;

  return {std::move(p), std::move(report)};
}

/**
 * Primal start: least-norm solution of a_eq x = -b_eq through the normal
 * equation when equality rows exist, else every component set to eps.
 *
 * Throws PreprocessError when a_eq a_eqᵀ has a pivot below 1e-12 times its
 * largest diagonal entry.
 */
inline Vector primal_start(const QpProblem& p, double eps) {
  const int n = p.num_vars();
  if (p.num_eq() == 0) return Vector::Constant(n, eps);

  const Matrix a = Matrix(p.a_eq);
  const Matrix normal = a * a.transpose();
  const double max_diag = normal.diagonal().cwiseAbs().maxCoeff();
  Eigen::LLT<Matrix> llt(normal);
  if (llt.info() != Eigen::Success || max_diag == 0.0) {
    throw PreprocessError("normal equation of the equality rows is singular");
  }
  const Vector pivots = llt.matrixLLT().diagonal().array().square();
  if (pivots.minCoeff() < 1e-12 * max_diag) {
    throw PreprocessError(
        "equality rows are rank deficient (normal-equation pivot below "
        "tolerance)");
  }
  return a.transpose() * llt.solve(-p.b_eq);
}

struct ShiftedProblem {
  QpProblem problem;
  Vector x0;
  std::vector<ShiftVariable> shifts;
};

/**
 * For every inequality row with c_i(x0) < eps, appends a variable s_i,
 * rewrites the row as c_i(x) + s_i ≥ 0 and adds the equality row s_i = 0.
 * The returned x0 carries s_i = eps - c_i(x0), so each shifted row starts
 * at exactly eps. Shift variables carry no objective cost.
 */
inline ShiftedProblem add_shifts(const QpProblem& p, const Vector& x0,
                                 double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("shift eps must be positive");
  const Vector values = p.ineq_values(x0);
  std::vector<int> rows;
  for (int i = 0; i < p.num_ineq(); ++i) {
    if (values[i] < eps) rows.push_back(i);
  }

  ShiftedProblem out;
  if (rows.empty()) {
    out.problem = p;
    out.x0 = x0;
    return out;
  }

  const int n = p.num_vars();
  const int k = static_cast<int>(rows.size());
  QpProblem q;
  q.name = p.name;
  q.objective_offset = p.objective_offset;

  q.hessian = p.hessian;
  q.hessian.conservativeResize(n + k, n + k);
  q.linear_cost = Vector::Zero(n + k);
  q.linear_cost.head(n) = p.linear_cost;

  std::vector<Triplet> ineq;
  for (int c = 0; c < p.a_ineq.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(p.a_ineq, c); it; ++it) {
      ineq.emplace_back(static_cast<int>(it.row()), c, it.value());
    }
  }
  std::vector<Triplet> eq;
  for (int c = 0; c < p.a_eq.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(p.a_eq, c); it; ++it) {
      eq.emplace_back(static_cast<int>(it.row()), c, it.value());
    }
  }

  out.x0 = Vector::Zero(n + k);
  out.x0.head(n) = x0;
  const int m_e = p.num_eq();
  for (int s = 0; s < k; ++s) {
    const int row = rows[static_cast<std::size_t>(s)];
    const int var = n + s;
    ineq.emplace_back(row, var, 1.0);
    eq.emplace_back(m_e + s, var, 1.0);
    const double init = eps - values[row];
    out.x0[var] = init;
    out.shifts.push_back({row, var, m_e + s, init});
  }
  q.a_ineq = detail::from_triplets(p.num_ineq(), n + k, ineq);
  q.b_ineq = p.b_ineq;
  q.a_eq = detail::from_triplets(m_e + k, n + k, eq);
  q.b_eq = Vector::Zero(m_e + k);
  q.b_eq.head(m_e) = p.b_eq;

  out.problem = std::move(q);
  return out;
}

/// Dual completion at a given strictly feasible primal point: equality
/// multipliers 1, inequality multipliers target / c_i(x0) so that every
/// product, hence the mean complementarity, equals target.
inline StartingPoint complete_start(const QpProblem& p, const Vector& x0,
                                    double target_mean_compl) {
  const Vector values = p.ineq_values(x0);
  StartingPoint s;
  s.x = x0;
  s.lambda = Vector::Ones(p.num_constraints());
  for (int i = 0; i < p.num_ineq(); ++i) {
    if (!(values[i] > 0.0)) {
      throw PreprocessError("inequality row " + std::to_string(i) +
                            " is not strictly feasible at the primal start");
    }
    s.lambda[i] = target_mean_compl / values[i];
  }
  s.mu = target_mean_compl;
  return s;
}

/// Primal start followed by dual completion. Requires the primal start to be
/// strictly feasible; run add_shifts first otherwise.
inline StartingPoint initial_point(const QpProblem& p, double eps,
                                   double target_mean_compl) {
  return complete_start(p, primal_start(p, eps), target_mean_compl);
}

struct PrepareOptions {
  double eps = 0.4;
  double target_mean_compl = 5.0;
};

struct PreparedProblem {
  QpProblem problem;
  PreprocessReport report;
  StartingPoint start;
};

/// Whole preprocessing pipeline: normalize, primal start, shifts, duals.
inline PreparedProblem prepare(const RawQp& raw, const PrepareOptions& opts = {}) {
  auto [normalized, report] = normalize(raw);
  const Vector x0 = primal_start(normalized, opts.eps);
  ShiftedProblem shifted = add_shifts(normalized, x0, opts.eps);
  report.shifts = shifted.shifts;
  PreparedProblem out;
  out.start = complete_start(shifted.problem, shifted.x0, opts.target_mean_compl);
  out.problem = std::move(shifted.problem);
  out.report = std::move(report);
  return out;
}

inline double mean_complementarity(const QpProblem& p, const Vector& x,
                                   const Vector& lambda) {
  const int m_i = p.num_ineq();
  if (m_i == 0) return 0.0;
  return p.ineq_values(x).dot(lambda.head(m_i)) / m_i;
}

}  // namespace xipm
