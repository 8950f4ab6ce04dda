#pragma once

#include <span>

#include "resloss/spectra.hpp"

namespace resloss {

/// Parameters of the entropy-extended loss.
struct LossSpec {
  double eta = 1.0;  // weight of the mean-log-power term, >= 0
  FloorPolicy floor{};

  void validate() const;
};

/// total = mse * (1 - eta * mlp).
struct LossBreakdown {
  double mse = 0.0;
  double mlp = 0.0;
  double total = 0.0;
};

/// Mean squared residual. Accepts any non-empty sequence.
double mse(std::span<const double> residuals);
double mse(const ResidualSequence& r);

/// Entropy-extended loss MSE * [1 - eta * MLP]. An all-zero residual
/// sequence is a perfect fit and yields {0, 0, 0}.
LossBreakdown entropy_loss(const ResidualSequence& r, const LossSpec& spec);
LossBreakdown entropy_loss(const ResidualSequence& r, const LossSpec& spec, const FftPlan& plan);

/// Log-determinant of the circulant matrix whose first column is `rho`,
/// computed as sum_k ln(lambda_k) over the DFT eigenvalues with the same
/// relative floor as mean_log_power. For rho = circular_autocorrelation(r)
/// this equals N * mean_log_power of r.
///
/// Requires rho[0] == 1 (to 1e-12) and rho even-symmetric. Throws NonPSDError
/// if an eigenvalue falls below -1e-10.
double circulant_log_det(std::span<const double> rho, FloorPolicy floor = {});

}  // namespace resloss
