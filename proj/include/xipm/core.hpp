#pragma once

#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace xipm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;
using Triplet = Eigen::Triplet<double>;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Smallest positive normal double; the default interiority floor.
inline constexpr double kSmallestNormal = std::numeric_limits<double>::min();

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Lower bound exceeds upper bound for some variable.
class InfeasibleBoundsError : public Error {
 public:
  using Error::Error;
};

/// Starting-point construction failed (rank-deficient equality rows, ...).
class PreprocessError : public Error {
 public:
  using Error::Error;
};

/// A solve was requested on a factorization flagged singular.
class SingularFactorizationError : public Error {
 public:
  using Error::Error;
};

/// An iterate fell below the interiority floor before a step was scaled.
class InteriorLossError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unsupported QPS input. Carries the 1-based source line.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + message
                       : message),
        line_(line) {}

  int line() const { return line_; }

 private:
  int line_;
};

inline double inf_norm(const Vector& v) {
  return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
}

inline double max_abs_entry(const SparseMatrix& m) {
  double out = 0.0;
  for (int k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
      out = std::max(out, std::abs(it.value()));
    }
  }
  return out;
}

}  // namespace xipm
