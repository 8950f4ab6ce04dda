#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "resloss/basis_models.hpp"
#include "resloss/spectra.hpp"

namespace resloss {

/// Model family fitted in a Monte Carlo sweep. `none` runs the diagnostics
/// on the raw draws with no fit.
enum class SimFamily { none, fourier, chebyshev };

std::string_view to_string(SimFamily family);
SimFamily parse_sim_family(std::string_view name);
std::optional<Family> basis_family(SimFamily family);

struct ExperimentConfig {
  SimFamily family = SimFamily::fourier;
  std::size_t n_points = 100;
  /// Model orders to sweep. Must be empty or {0} for family none (one
  /// unfitted pass is run under order 0).
  std::vector<int> orders;
  std::size_t realizations = 10000;
  std::uint64_t seed = 0;
  /// Weight used for the [1 - eta * MLP] bracket statistics.
  double eta = 1.0;
  FloorPolicy floor{};

  /// Throws PreconditionError for invalid combinations.
  void validate() const;
  /// Orders actually swept (fills in {0} for family none).
  std::vector<int> effective_orders() const;
  /// Stable text covering every field that affects the numbers, including
  /// the variate algorithm and the aggregation scheme.
  std::string canonical() const;
  /// FNV-1a 64 of canonical().
  std::uint64_t hash() const;
};

/// Averages over the successful realizations at one order.
struct OrderStats {
  int order = 0;
  std::vector<double> mean_autocorr;    // by lag l
  std::vector<double> mean_signature;   // by bin k
  std::vector<double> mean_corr_power;  // by bin k
  /// 5th, 50th and 95th percentiles of 1 - eta * MLP.
  std::array<double, 3> bracket_percentiles{};
  std::size_t realization_count = 0;
  std::size_t failures = 0;
  /// Numerical rank and pivot ratio of the design (0 and 1 for family none).
  std::size_t design_rank = 0;
  double condition_estimate = 1.0;
};

struct AggregateStats {
  ExperimentConfig config;
  std::uint64_t config_hash = 0;
  std::vector<OrderStats> orders;

  std::size_t total_failures() const noexcept;
};

/// Runs the sweep with realizations spread over OpenMP threads. Each
/// realization draws from its own (seed, order, realization) Philox stream
/// and partial sums are reduced over a fixed tree of realization blocks, so
/// the result is bit-identical for every thread count. `threads <= 0` uses
/// the OpenMP default.
///
/// Fits use RankPolicy::truncate, so numerically rank-deficient high-order
/// designs still produce minimum-norm least-squares fits instead of
/// failures.
AggregateStats run_experiment(const ExperimentConfig& config, int threads = 0);

/// Single-threaded reference: one compensated running sum in realization
/// order. Agrees with run_experiment to round-off (not bitwise).
AggregateStats run_experiment_serial(const ExperimentConfig& config);

/// Linear-interpolation quantiles: with n sorted samples, probability q sits
/// at rank q * (n - 1) between its floor and ceiling neighbours.
std::vector<double> percentiles(std::span<const double> samples, std::span<const double> probs);

/// Diagnostics for one realization, shared by both execution paths.
struct RealizationOutcome {
  bool ok = false;
  SpectralSummary summary;
  double bracket = 0.0;
};

/// Prepared per-order state: grid, factorised solver, FFT plan.
class OrderKernel {
 public:
  OrderKernel(const ExperimentConfig& config, int order);
  ~OrderKernel();
  OrderKernel(OrderKernel&&) noexcept;

  RealizationOutcome run(std::size_t realization) const;

  std::size_t design_rank() const noexcept;
  double condition_estimate() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace resloss
