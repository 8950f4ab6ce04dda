#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "resloss/basis_models.hpp"
#include "resloss/loss.hpp"

namespace resloss {

enum class OptimizerMethod { simplex, gradient };

std::string_view to_string(OptimizerMethod method);
OptimizerMethod parse_optimizer(std::string_view name);

struct OptimizerConfig {
  OptimizerMethod method = OptimizerMethod::simplex;
  std::size_t max_iters = 20000;
  // Converged once the loss spread (simplex) or per-step decrease (gradient)
  // is within tol_abs + tol_rel * |loss| and the simplex or step has shrunk
  // below x_tolerance per coordinate (relative to max(1, |theta_j|)).
  double tol_abs = 1e-12;
  double tol_rel = 1e-10;
  double x_tolerance = 1e-7;
  /// Initial simplex edge / first gradient step, relative to the coefficient
  /// scale.
  double initial_scale = 0.05;
  /// Simplex restarts from the incumbent; their edge signs come from `seed`.
  std::size_t restarts = 2;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EntropyFitResult {
  FitResult start;  // OLS warm start
  FitResult best;   // lowest loss found
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
  OptimizerMethod method = OptimizerMethod::simplex;
};

/// Minimises MSE * [1 - eta * MLP] over the coefficients of a linear basis
/// model, starting from the OLS fit. The returned best loss never exceeds the
/// OLS loss. Running out of iterations is reported through `converged`, not
/// thrown.
EntropyFitResult fit_entropy_loss(const Grid& grid, std::span<const double> y, Family family,
                                  int order, const LossSpec& spec,
                                  const OptimizerConfig& opt = {});

struct LandscapeRow {
  double value = 0.0;
  LossBreakdown loss;
};

/// Loss along one coefficient axis with every other coefficient held at its
/// OLS value. `steps` evenly spaced values from `lo` to `hi` inclusive.
std::vector<LandscapeRow> loss_landscape(const Grid& grid, std::span<const double> y,
                                         Family family, int order, const LossSpec& spec,
                                         std::size_t axis, double lo, double hi,
                                         std::size_t steps);

struct OutlierDemoConfig {
  std::size_t n_points = 100;
  int order = 4;
  double noise_sigma = 0.1;
  double outlier_fraction = 0.05;
  double outlier_size = 3.0;
  std::vector<double> etas{0.0, 1.0};
  std::uint64_t seed = 2024;
  OptimizerConfig optimizer{};
};

struct OutlierDemoRow {
  double eta = 0.0;
  double lag1_autocorr = 0.0;
  /// Mean squared deviation of the fitted curve from the clean signal.
  double signal_mse = 0.0;
  LossBreakdown loss;
  bool converged = false;
};

/// Smooth signal + Gaussian noise + a fraction of gross one-sided outliers on
/// the Fourier grid, fitted at each eta. Exploratory: reports, asserts
/// nothing.
std::vector<OutlierDemoRow> outlier_demo(const OutlierDemoConfig& config);

}  // namespace resloss
