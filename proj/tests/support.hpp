#pragma once

#include <cstdint>
#include <string>

#include "xipm/xipm.hpp"

namespace xipm::test {

#ifndef XIPM_TEST_DATA_DIR
#define XIPM_TEST_DATA_DIR "tests/data"
#endif

inline std::string data_path(const std::string& file) {
  return std::string(XIPM_TEST_DATA_DIR) + "/" + file;
}

/// min ½x² subject to x ≥ 1.
inline QpProblem toy_problem() {
  QpProblem p;
  p.name = "toy";
  p.hessian = Matrix::Ones(1, 1).sparseView();
  p.linear_cost = Vector::Zero(1);
  p.a_ineq = Matrix::Ones(1, 1).sparseView();
  p.b_ineq = Vector::Constant(1, -1.0);
  p.a_eq = SparseMatrix(0, 1);
  p.b_eq = Vector(0);
  return p;
}

inline Iterate toy_point() { return {Vector::Constant(1, 2.0), Vector::Constant(1, 1.0)}; }

struct Instance {
  QpProblem problem;
  Iterate w;
};

/**
 * Convex QP with n variables, m_i inequalities and m_e equalities plus a
 * strictly interior (x, λ). Equalities need not hold at x.
 */
inline Instance random_instance(int n, int m_i, int m_e, std::uint64_t seed) {
  Rng rng(seed);
  Matrix b(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) b(i, j) = rng.gaussian();
  Matrix h = b * b.transpose() / n + 0.1 * Matrix::Identity(n, n);
  h = 0.5 * (h + h.transpose()).eval();

  Matrix a_i(m_i, n), a_e(m_e, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < m_i; ++i) a_i(i, j) = rng.gaussian();
    for (int i = 0; i < m_e; ++i) a_e(i, j) = rng.gaussian();
  }
  Vector x(n);
  for (int i = 0; i < n; ++i) x[i] = rng.uniform(-1.0, 1.0);

  Instance out;
  auto& p = out.problem;
  p.name = "mixed_" + std::to_string(seed);
  p.hessian = h.sparseView();
  p.linear_cost.resize(n);
  for (int i = 0; i < n; ++i) p.linear_cost[i] = rng.gaussian();
  p.a_ineq = a_i.sparseView();
  p.b_ineq.resize(m_i);
  const Vector ax = a_i * x;
  for (int i = 0; i < m_i; ++i) p.b_ineq[i] = -ax[i] + rng.uniform(0.5, 2.0);
  p.a_eq = a_e.sparseView();
  p.b_eq.resize(m_e);
  for (int i = 0; i < m_e; ++i) p.b_eq[i] = rng.gaussian();

  Vector lambda(m_i + m_e);
  for (int i = 0; i < m_i; ++i) lambda[i] = rng.uniform(0.5, 2.0);
  for (int i = 0; i < m_e; ++i) lambda[m_i + i] = rng.gaussian();
  out.w = {x, lambda};
  return out;
}

/**
 * Damped Newton solve of F^μ(w) = (1 - s)·r0 started from `guess`: the
 * continuation curve through the base point whose Taylor coefficients in s
 * are the extrapolation terms.
 */
inline Iterate continuation_point(const QpProblem& p, const Iterate& guess, double mu,
                                  const Vector& r0, double s) {
  Iterate w = guess;
  const int n = p.num_vars();
  for (int it = 0; it < 100; ++it) {
    const Vector f = residual(p, w, mu).stacked() - (1.0 - s) * r0;
    if (f.lpNorm<Eigen::Infinity>() < 1e-15) break;
    const Matrix j = Matrix(assemble_jacobian(p, w));
    const Vector d = j.fullPivLu().solve(-f);
    double alpha = 1.0;
    while (alpha > 1e-8 && !is_interior(p, w.moved(d, alpha))) alpha *= 0.5;
    w = w.moved(d, alpha);
    (void)n;
  }
  return w;
}

/**
 * Taylor coefficients 1..order of the continuation curve at s = 0, from a
 * degree-8 polynomial fit through nine points s = -4h, ..., 4h.
 */
inline std::vector<Vector> continuation_coefficients(const QpProblem& p, const Iterate& w,
                                                     double mu, int order, double h) {
  const Vector r0 = residual(p, w, mu).stacked();
  constexpr int kPoints = 9;
  Matrix v(kPoints, kPoints);
  Matrix values(kPoints, w.size());
  for (int k = 0; k < kPoints; ++k) {
    const double s = (k - 4) * h;
    for (int j = 0; j < kPoints; ++j) v(k, j) = std::pow(s / h, j);
    values.row(k) = continuation_point(p, w, mu, r0, s).stacked().transpose();
  }
  const Matrix coeff = v.fullPivLu().solve(values);
  std::vector<Vector> out;
  for (int q = 1; q <= order; ++q) out.push_back(coeff.row(q).transpose() / std::pow(h, q));
  return out;
}

}  // namespace xipm::test
