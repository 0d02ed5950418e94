#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <variant>
#include <vector>

#include <Eigen/LU>
#include <Eigen/SparseLU>

#include "xipm/core.hpp"
#include "xipm/qp_model.hpp"

namespace xipm {

/// Primal-dual point w = (x, λ); λ holds inequality rows first.
struct Iterate {
  Vector x;
  Vector lambda;

  int size() const { return static_cast<int>(x.size() + lambda.size()); }

  Vector stacked() const {
    Vector w(size());
    w << x, lambda;
    return w;
  }

  static Iterate from_stacked(const Vector& w, int n) {
    return {w.head(n), w.tail(w.size() - n)};
  }

  /// this + alpha * direction, direction given in stacked form.
  Iterate moved(const Vector& direction, double alpha) const {
    const auto n = x.size();
    return {x + alpha * direction.head(n),
            lambda + alpha * direction.tail(direction.size() - n)};
  }
};

/// Blocks of the perturbed KKT map evaluated at one iterate.
struct Residual {
  Vector stationarity;     // g(x) - Aᵀλ
  Vector complementarity;  // C_I(x) λ_I - μ e
  Vector equality;         // c_E(x)
  double mu = 0.0;

  Vector stacked() const {
    Vector r(stationarity.size() + complementarity.size() + equality.size());
    r << stationarity, complementarity, equality;
    return r;
  }

  double norm2() const {
    return std::sqrt(stationarity.squaredNorm() +
                     complementarity.squaredNorm() + equality.squaredNorm());
  }

  double norm_inf() const {
    return std::max({inf_norm(stationarity), inf_norm(complementarity),
                     inf_norm(equality)});
  }
};

inline Residual residual(const QpProblem& p, const Iterate& w, double mu) {
  const int m_i = p.num_ineq();
  Residual r;
  r.mu = mu;
  r.stationarity = p.gradient(w.x) - p.a_ineq.transpose() * w.lambda.head(m_i) -
                   p.a_eq.transpose() * w.lambda.tail(p.num_eq());
  r.complementarity =
      p.ineq_values(w.x).cwiseProduct(w.lambda.head(m_i)).array() - mu;
  r.equality = p.eq_values(w.x);
  return r;
}

/// 2-norm of the stacked residual.
inline double merit(const Residual& r) { return r.norm2(); }

enum class FactorizationMode { dense, sparse, automatic };

/**
 * Assembles J_F(w):
 *
 *   [ H        -A_Iᵀ    -A_Eᵀ ]
 *   [ Λ_I A_I   C_I(x)   0    ]
 *   [ A_E       0        0    ]
 *
 * complementarity_shift is added to the C_I(x) diagonal (zero except for the
 * solver's one-shot regularization retry).
 */
inline SparseMatrix assemble_jacobian(const QpProblem& p, const Iterate& w,
                                      double complementarity_shift = 0.0) {
  const int n = p.num_vars();
  const int m_i = p.num_ineq();
  const int m_e = p.num_eq();
  const int size = n + m_i + m_e;
  const Vector c_i = p.ineq_values(w.x);

  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(p.hessian.nonZeros() +
                                     3 * p.a_ineq.nonZeros() +
                                     2 * p.a_eq.nonZeros() + m_i));
  for (int k = 0; k < p.hessian.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(p.hessian, k); it; ++it) {
      t.emplace_back(static_cast<int>(it.row()), k, it.value());
    }
  }
  for (int k = 0; k < p.a_ineq.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(p.a_ineq, k); it; ++it) {
      const int row = static_cast<int>(it.row());
      t.emplace_back(k, n + row, -it.value());
      t.emplace_back(n + row, k, w.lambda[row] * it.value());
    }
  }
  for (int k = 0; k < p.a_eq.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(p.a_eq, k); it; ++it) {
      const int row = static_cast<int>(it.row());
      t.emplace_back(k, n + m_i + row, -it.value());
      t.emplace_back(n + m_i + row, k, it.value());
    }
  }
  for (int i = 0; i < m_i; ++i) {
    t.emplace_back(n + i, n + i, c_i[i] + complementarity_shift);
  }
  SparseMatrix j(size, size);
  j.setFromTriplets(t.begin(), t.end());
  j.makeCompressed();
  return j;
}

/**
 * One LU factorization of J_F(w), shared across any number of right-hand
 * sides. Immutable after construction; concurrent solves are safe.
 *
 * Flagged singular when a pivot magnitude falls below 1e-12 times the
 * largest absolute entry of J.
 */
class KktFactorization {
 public:
  static constexpr double kPivotTolerance = 1e-12;

  KktFactorization(SparseMatrix matrix, FactorizationMode mode)
      : matrix_(std::move(matrix)) {
    const auto size = matrix_.rows();
    scale_ = max_abs_entry(matrix_);
    if (mode == FactorizationMode::automatic) {
      const double density =
          size == 0 ? 1.0
                    : static_cast<double>(matrix_.nonZeros()) /
                          (static_cast<double>(size) * static_cast<double>(size));
      mode = density < 0.25 ? FactorizationMode::sparse : FactorizationMode::dense;
    }
    if (size == 0) {
      min_pivot_ = kInfinity;
      dense_ = std::make_shared<Eigen::PartialPivLU<Matrix>>();
      return;
    }
    if (mode == FactorizationMode::dense) {
      auto lu = std::make_shared<Eigen::PartialPivLU<Matrix>>(Matrix(matrix_));
      min_pivot_ = lu->matrixLU().diagonal().cwiseAbs().minCoeff();
      dense_ = std::move(lu);
    } else {
      auto lu = std::make_shared<Eigen::SparseLU<SparseMatrix>>();
      lu->analyzePattern(matrix_);
      lu->factorize(matrix_);
      if (lu->info() != Eigen::Success) {
        min_pivot_ = 0.0;
      } else {
        // Diagonal blocks of U live in the supernodal L storage.
        const auto& l_store = lu->matrixL().m_mapL;
        min_pivot_ = kInfinity;
        for (Eigen::Index j = 0; j < size; ++j) {
          double pivot = 0.0;
          for (typename std::decay_t<decltype(l_store)>::InnerIterator it(l_store, j);
               it; ++it) {
            if (it.index() == j) {
              pivot = std::abs(it.value());
              break;
            }
          }
          min_pivot_ = std::min(min_pivot_, pivot);
        }
      }
      sparse_ = std::move(lu);
    }
    singular_ = !(min_pivot_ >= kPivotTolerance * scale_) || scale_ == 0.0;
  }

  bool singular() const { return singular_; }
  bool is_sparse() const { return sparse_ != nullptr; }
  int size() const { return static_cast<int>(matrix_.rows()); }
  double min_pivot() const { return min_pivot_; }
  const SparseMatrix& matrix() const { return matrix_; }

  Vector solve(const Vector& rhs) const {
    if (singular_) {
      throw SingularFactorizationError("KKT Jacobian is flagged singular");
    }
    if (rhs.size() != size()) {
      throw std::invalid_argument("right-hand side has wrong dimension");
    }
    if (size() == 0) return Vector(0);
    if (sparse_) return sparse_->solve(rhs);
    return dense_->solve(rhs);
  }

  /// ‖J v - rhs‖∞ for a computed solution v.
  double residual_check(const Vector& v, const Vector& rhs) const {
    return inf_norm(matrix_ * v - rhs);
  }

 private:
  SparseMatrix matrix_;
  std::shared_ptr<const Eigen::PartialPivLU<Matrix>> dense_;
  std::shared_ptr<const Eigen::SparseLU<SparseMatrix>> sparse_;
  double scale_ = 0.0;
  double min_pivot_ = 0.0;
  bool singular_ = false;
};

inline KktFactorization jacobian(const QpProblem& p, const Iterate& w,
                                 FactorizationMode mode = FactorizationMode::automatic,
                                 double complementarity_shift = 0.0) {
  return KktFactorization(assemble_jacobian(p, w, complementarity_shift), mode);
}

inline Vector solve(const KktFactorization& f, const Vector& rhs) {
  return f.solve(rhs);
}

/// c_I(x) and λ_I side by side: the quantities kept strictly positive.
inline Vector implicit_values(const QpProblem& p, const Iterate& w) {
  const int m_i = p.num_ineq();
  Vector v(2 * m_i);
  v << p.ineq_values(w.x), w.lambda.head(m_i);
  return v;
}

inline bool is_interior(const QpProblem& p, const Iterate& w,
                        double floor = kSmallestNormal) {
  const Vector v = implicit_values(p, w);
  return v.size() == 0 || v.minCoeff() >= floor;
}

/**
 * Ratio test: largest alpha in (0, 1] such that c_I(x + alpha dx) and
 * λ_I + alpha dλ_I stay ≥ floor at the moved iterate. May return 0.
 * Throws InteriorLossError if w is already below floor.
 */
inline double max_feasible_scaling(const QpProblem& p, const Iterate& w,
                                   const Vector& direction,
                                   double floor = kSmallestNormal) {
  const int n = p.num_vars();
  const int m_i = p.num_ineq();
  Vector value(2 * m_i), rate(2 * m_i);
  value << p.ineq_values(w.x), w.lambda.head(m_i);
  rate << p.a_ineq * direction.head(n), direction.segment(n, m_i);

  double alpha = 1.0;
  for (Eigen::Index i = 0; i < value.size(); ++i) {
    if (!(value[i] >= floor)) {
      throw InteriorLossError("implicit quantity below floor before scaling");
    }
    if (rate[i] < 0.0) alpha = std::min(alpha, (value[i] - floor) / -rate[i]);
  }
  // Rounding in the closed form (and in re-evaluating A(x + αd) + b) can land
  // a hair below the floor; shrink with a growing factor until it holds.
  auto ok = [&](double a) {
    return m_i == 0 || implicit_values(p, w.moved(direction, a)).minCoeff() >= floor;
  };
  double shrink = 4.0 * std::numeric_limits<double>::epsilon();
  for (int guard = 0; guard < 64 && alpha > 0.0 && !ok(alpha); ++guard) {
    alpha *= 1.0 - shrink;
    shrink = std::min(0.5, 2.0 * shrink);
  }
  if (alpha > 0.0 && !ok(alpha)) alpha = 0.0;
  return alpha;
}

}  // namespace xipm
