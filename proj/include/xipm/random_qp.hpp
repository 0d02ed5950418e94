#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/QR>

#include "xipm/qp_model.hpp"

namespace xipm {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/**
 * Seedable generator: std::mt19937_64 (fully specified by the standard)
 * with hand-written conversions, so a seed yields identical numbers on
 * every conforming platform. Substream s of seed is seeded with
 * splitmix64(seed ^ splitmix64(s + 1)).
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng substream(std::uint64_t seed, std::uint64_t stream) {
    return Rng(splitmix64(seed ^ splitmix64(stream + 1)));
  }

  /// Uniform on the open interval (0, 1).
  double uniform01() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform on (lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via the Marsaglia polar method.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

enum RandomStream : std::uint64_t {
  kStreamOrthogonal = 0,
  kStreamSpectrum = 1,
  kStreamCost = 2,
};

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// columns of Q sign-corrected by sign(diag(R)).
inline Matrix random_orthogonal(int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("dimension must be positive");
  Rng rng = Rng::substream(seed, kStreamOrthogonal);
  Matrix g(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) g(i, j) = rng.gaussian();
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix& r = qr.matrixQR();
  for (int j = 0; j < n; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

struct RandomSpec {
  int n = 1;
  double t = 1.0;  // target condition number
  std::uint64_t seed = 0;

  void validate() const {
    if (n < 1) throw std::invalid_argument("random spec: n must be >= 1");
    if (!(t >= 1.0)) throw std::invalid_argument("random spec: t must be >= 1");
  }
};

/// Diagonal of T: √t first, 1/√t last, (√t)^r with r ~ U(-1, 1) i.i.d. between.
inline Vector random_spectrum(const RandomSpec& spec) {
  Rng rng = Rng::substream(spec.seed, kStreamSpectrum);
  const double root = std::sqrt(spec.t);
  Vector d(spec.n);
  for (int i = 0; i < spec.n; ++i) {
    if (i == 0) {
      d[i] = root;
    } else if (i == spec.n - 1) {
      d[i] = 1.0 / root;
    } else {
      d[i] = std::pow(root, rng.uniform(-1.0, 1.0));
    }
  }
  return d;
}

/**
 * Positivity-constrained random QP: H = Q T Qᵀ with Q Haar orthogonal and
 * T from random_spectrum, c ~ U(-1/2, 1/2), constraints x ≥ 0, no
 * equalities.
 */
inline QpProblem random_qp(const RandomSpec& spec) {
  spec.validate();
  const int n = spec.n;
  const Matrix q = random_orthogonal(n, spec.seed);
  const Vector d = random_spectrum(spec);
  Matrix h;
  if ((d.array() == 1.0).all()) {
    h = Matrix::Identity(n, n);  // Q Qᵀ = I exactly; skip the roundoff
  } else {
    h = q * d.asDiagonal() * q.transpose();
    h = 0.5 * (h + h.transpose()).eval();
  }

  Rng rng = Rng::substream(spec.seed, kStreamCost);
  QpProblem p;
  p.name = "random_n" + std::to_string(n) + "_s" + std::to_string(spec.seed);
  p.hessian = h.sparseView();
  p.linear_cost.resize(n);
  for (int i = 0; i < n; ++i) p.linear_cost[i] = rng.uniform(-0.5, 0.5);
  SparseMatrix identity(n, n);
  identity.setIdentity();
  p.a_ineq = identity;
  p.b_ineq = Vector::Zero(n);
  p.a_eq = SparseMatrix(0, n);
  p.b_eq = Vector(0);
  return p;
}

}  // namespace xipm
