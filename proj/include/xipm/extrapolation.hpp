#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "xipm/kkt.hpp"

namespace xipm {

inline constexpr int kMaxOrder = 10;

/// Exact binomial coefficients C(n, k) for n ≤ kMaxOrder + 1.
inline constexpr auto kBinomial = [] {
  std::array<std::array<std::uint64_t, kMaxOrder + 2>, kMaxOrder + 2> c{};
  for (int n = 0; n <= kMaxOrder + 1; ++n) {
    c[n][0] = 1;
    for (int k = 1; k <= n; ++k) c[n][k] = c[n - 1][k - 1] + (k < n ? c[n - 1][k] : 0);
  }
  return c;
}();

/**
 * Taylor terms of the trajectory through the base iterate, already divided
 * by q!: terms[q-1] is w̃^q. The order-p step to the trajectory point at the
 * current μ is base + Σ_q terms[q-1].
 */
struct TaylorTerms {
  int order = 0;
  Iterate base;
  double mu = 0.0;
  Residual residual;
  std::vector<Vector> terms;
};

enum class StepLabel { extrapolation, newton, none };

inline constexpr std::string_view to_string(StepLabel label) {
  switch (label) {
    case StepLabel::extrapolation: return "extrapolation";
    case StepLabel::newton: return "newton";
    case StepLabel::none: return "none";
  }
  return "none";
}

struct StepCandidate {
  Iterate target;
  double theta = 0.0;
  int order = 1;
  StepLabel label = StepLabel::none;
  double merit = kInfinity;
};

/**
 * Computes the derivative terms with one factorization of J_F(w).
 *
 * With ŵ^q the q-th ρ-derivative times (-‖r‖)^q:
 *   J ŵ^1     = -r
 *   J ŵ^(q+1) = -Σ_{i=1..q} C(q+1, i) [0; λ̂_I^(q+1-i) ∘ A_I x̂^i; 0]
 * Only the complementarity block is bilinear for QP data, so every higher
 * right-hand side is zero outside that block.
 */
inline TaylorTerms compute_terms(const QpProblem& p, const KktFactorization& f,
                                 const Iterate& w, double mu, int order) {
  if (order < 1 || order > kMaxOrder) {
    throw std::invalid_argument("extrapolation order must be in [1, 10]");
  }
  const int n = p.num_vars();
  const int m_i = p.num_ineq();

  TaylorTerms t;
  t.order = order;
  t.base = w;
  t.mu = mu;
  t.residual = residual(p, w, mu);

  std::vector<Vector> hat;
  std::vector<Vector> a_x_hat;  // A_I x̂^i
  hat.reserve(static_cast<std::size_t>(order));
  hat.push_back(f.solve(-t.residual.stacked()));
  a_x_hat.push_back(p.a_ineq * hat[0].head(n));

  for (int q = 1; q < order; ++q) {
    Vector rhs = Vector::Zero(f.size());
    auto comp = rhs.segment(n, m_i);
    for (int i = 1; i <= q; ++i) {
      const auto& lam_hat = hat[static_cast<std::size_t>(q - i)];
      comp -= static_cast<double>(kBinomial[q + 1][i]) *
              lam_hat.segment(n, m_i).cwiseProduct(a_x_hat[static_cast<std::size_t>(i - 1)]);
    }
    hat.push_back(f.solve(rhs));
    a_x_hat.push_back(p.a_ineq * hat.back().head(n));
  }

  double factorial = 1.0;
  t.terms.reserve(hat.size());
  for (int q = 1; q <= order; ++q) {
    factorial *= q;
    t.terms.push_back(hat[static_cast<std::size_t>(q - 1)] / factorial);
  }
  return t;
}

/// Factorizes J_F(w) and computes terms; throws SingularFactorizationError
/// when the Jacobian is flagged singular.
inline TaylorTerms compute_terms(const QpProblem& p, const Iterate& w, double mu,
                                 int order,
                                 FactorizationMode mode = FactorizationMode::automatic) {
  return compute_terms(p, jacobian(p, w, mode), w, mu, order);
}

enum class ThetaScaling {
  per_order,  // term q scaled by θ^q (partial extrapolation)
  uniform,    // every term scaled by θ
};

/// base + Σ θ^q w̃^q evaluated by Horner's rule.
inline Iterate assemble(const TaylorTerms& t, double theta,
                        ThetaScaling scaling = ThetaScaling::per_order) {
  const Vector base = t.base.stacked();
  const auto n = static_cast<int>(t.base.x.size());
  if (t.terms.empty()) return t.base;
  if (scaling == ThetaScaling::uniform) {
    Vector sum = Vector::Zero(base.size());
    for (const auto& term : t.terms) sum += term;
    return Iterate::from_stacked(base + theta * sum, n);
  }
  Vector acc = t.terms.back();
  for (auto it = t.terms.rbegin() + 1; it != t.terms.rend(); ++it) {
    acc = *it + theta * acc;
  }
  return Iterate::from_stacked(base + theta * acc, n);
}

/// The Newton step for F^μ at the base iterate.
inline Iterate newton_step(const TaylorTerms& t) {
  if (t.terms.empty()) throw std::invalid_argument("no terms computed");
  return t.base.moved(t.terms.front(), 1.0);
}

inline constexpr double kThetaBacktrack = 0.9;
inline constexpr int kThetaTrials = 200;

/**
 * Largest θ on the grid 1, 0.9, 0.9², ... (200 trials) for which
 * assemble(t, θ) keeps every implicit quantity ≥ floor; 0 if none does.
 */
inline double feasible_theta(const QpProblem& p, const TaylorTerms& t,
                             double floor = kSmallestNormal,
                             ThetaScaling scaling = ThetaScaling::per_order) {
  double theta = 1.0;
  for (int trial = 0; trial < kThetaTrials; ++trial) {
    if (is_interior(p, assemble(t, theta, scaling), floor)) return theta;
    theta *= kThetaBacktrack;
  }
  return 0.0;
}

}  // namespace xipm
