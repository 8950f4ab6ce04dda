#pragma once

#include <stdexcept>
#include <string>

namespace resloss {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition was violated by the caller (empty input,
/// non-finite values, bad configuration).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// The residual sequence is identically zero, so every correlation
/// quantity is undefined. Signals a degenerate perfect fit.
class ZeroResidualError : public Error {
 public:
  ZeroResidualError() : Error("residual sequence is identically zero") {}
};

/// A circulant correlation estimate has an eigenvalue with negative real
/// part below the round-off threshold.
class NonPSDError : public Error {
 public:
  NonPSDError(std::size_t index, double eigenvalue)
      : Error("circulant estimate is not positive semidefinite: eigenvalue " +
              std::to_string(index) + " = " + std::to_string(eigenvalue)),
        index_(index),
        eigenvalue_(eigenvalue) {}

  std::size_t index() const noexcept { return index_; }
  double eigenvalue() const noexcept { return eigenvalue_; }

 private:
  std::size_t index_;
  double eigenvalue_;
};

/// The basis has more columns than there are sample points.
class OverdeterminedBasisError : public Error {
 public:
  using Error::Error;
};

/// The design matrix is numerically rank deficient.
class SingularDesignError : public Error {
 public:
  SingularDesignError(std::size_t rank, std::size_t columns, double condition)
      : Error("design matrix is rank deficient: rank " + std::to_string(rank) +
              " of " + std::to_string(columns) + ", condition estimate " +
              std::to_string(condition)),
        rank_(rank),
        condition_(condition) {}

  std::size_t rank() const noexcept { return rank_; }
  double condition_estimate() const noexcept { return condition_; }

 private:
  std::size_t rank_;
  double condition_;
};

/// An internal numerical consistency check failed (e.g. a transform of real
/// data left a non-negligible imaginary residue).
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace resloss
