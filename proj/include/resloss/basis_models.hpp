#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "resloss/loss.hpp"
#include "resloss/spectra.hpp"

namespace resloss {

enum class Family { fourier, chebyshev };

std::string_view to_string(Family family);
/// Parses "fourier" or "chebyshev"; throws PreconditionError otherwise.
Family parse_family(std::string_view name);

/// Ordered, strictly increasing sample locations.
class Grid {
 public:
  enum class Kind { fourier, chebyshev, custom };

  /// x_n = -0.5 + n/N on [-0.5, 0.5).
  static Grid fourier(std::size_t n);
  /// x_n = -1 + 2n/N on [-1, 1).
  static Grid chebyshev(std::size_t n);
  /// Caller-supplied locations; at least two, finite, strictly increasing.
  static Grid custom(std::vector<double> locations);

  std::span<const double> locations() const noexcept { return x_; }
  std::size_t size() const noexcept { return x_.size(); }
  Kind kind() const noexcept { return kind_; }

 private:
  Grid(std::vector<double> x, Kind kind) : x_(std::move(x)), kind_(kind) {}

  std::vector<double> x_;
  Kind kind_;
};

/// Number of coefficients of a model: 2M-1 for Fourier, M for Chebyshev.
std::size_t parameter_count(Family family, int order);

/// A truncated basis-function series.
///
/// Fourier coefficients are laid out (a_0, a_1..a_{M-1}, b_1..b_{M-1}) for
/// yhat = a_0/2 + sum_m a_m cos(2 pi m x) + b_m sin(2 pi m x). Chebyshev
/// coefficients are (a_0..a_{M-1}) for yhat = sum_m a_m T_m(x).
struct BasisModel {
  Family family = Family::fourier;
  int order = 1;
  std::vector<double> coefficients;

  void validate() const;
};

/// Column j holds basis function j evaluated at every grid location.
/// Throws OverdeterminedBasisError when the model has more parameters than
/// the grid has points.
Eigen::MatrixXd design_matrix(const Grid& grid, Family family, int order);

/// Model prediction at every grid location.
std::vector<double> predict(const BasisModel& model, const Grid& grid);

/// design * coefficients, summed in column order. Bit-identical to
/// predict(model, grid) when `design` came from design_matrix for the same
/// grid, family and order.
std::vector<double> predict(const Eigen::MatrixXd& design, std::span<const double> coefficients);

/// What to do when the design matrix is numerically rank deficient.
enum class RankPolicy {
  reject,    // throw SingularDesignError
  truncate,  // minimum-norm solution on the numerically resolved subspace
};

struct SolverOptions {
  RankPolicy rank_policy = RankPolicy::reject;
  /// Pivots with |R_ii| <= tolerance * max |R_ii| count as zero. A value of
  /// zero selects machine epsilon times the number of rows.
  double rank_tolerance = 0.0;
};

struct FitResult {
  BasisModel model;
  ResidualSequence residuals;
  LossBreakdown loss;
  /// |R_00| / |R_pp| of the column-pivoted QR factor.
  double condition_estimate = 1.0;
  std::size_t rank = 0;
};

/// Least-squares solver for one (grid, family, order) design. The
/// orthogonal factorisation is computed once and reused for every right-hand
/// side; `fit` is const and safe to call from many threads.
class OlsSolver {
 public:
  OlsSolver(const Grid& grid, Family family, int order, SolverOptions options = {});
  ~OlsSolver();
  OlsSolver(OlsSolver&&) noexcept;
  OlsSolver& operator=(OlsSolver&&) noexcept;

  /// Least-squares fit of `y`; the loss breakdown uses `spec`.
  FitResult fit(std::span<const double> y, const LossSpec& spec) const;

  const Grid& grid() const noexcept;
  const Eigen::MatrixXd& design() const noexcept;
  double condition_estimate() const noexcept;
  std::size_t rank() const noexcept;
  bool rank_deficient() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One-shot ordinary least squares through a column-pivoted QR factorisation.
/// Throws SingularDesignError for rank-deficient designs unless the options
/// request truncation.
FitResult ols_fit(const Grid& grid, std::span<const double> y, Family family, int order,
                  const LossSpec& spec = LossSpec{0.0, {}}, SolverOptions options = {});

/// Residuals and loss of an arbitrary coefficient vector.
FitResult evaluate_model(const BasisModel& model, const Grid& grid, std::span<const double> y,
                         const LossSpec& spec);

}  // namespace resloss
