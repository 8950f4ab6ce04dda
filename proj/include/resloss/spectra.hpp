#pragma once

#include <span>
#include <vector>

#include "resloss/fft.hpp"

namespace resloss {

/// Relative floor applied before taking logarithms of spectral power.
/// Entries below `relative * max` are raised to that value, so modes nulled
/// exactly by a fit contribute a large but finite penalty.
struct FloorPolicy {
  double relative = 1e-12;

  /// Throws PreconditionError unless 0 < relative < 1.
  void validate() const;
};

/// Ordered model residuals r_n = y_n - yhat(x_n). Holds at least two finite
/// values.
class ResidualSequence {
 public:
  explicit ResidualSequence(std::vector<double> values);

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

  /// Residual sum of squares.
  double rss() const noexcept { return rss_; }
  bool is_zero() const noexcept { return rss_ == 0.0; }

 private:
  std::vector<double> values_;
  double rss_;
};

struct PowerSpectrum {
  std::vector<double> power;       // |r~_k|^2
  std::vector<double> corr_power;  // power / rss, averages to one
  std::vector<double> signature;   // power / max power
};

/// Every spectral diagnostic of one residual sequence, k and l both in
/// unshifted DFT order 0..N-1.
struct SpectralSummary {
  std::vector<double> autocorr;
  std::vector<double> power;
  std::vector<double> corr_power;
  std::vector<double> signature;
  double mlp = 0.0;
  double rss = 0.0;
};

/// Circular autocorrelation rho(l) = sum_n r_n r_{(n-l) mod N} / rss,
/// evaluated through the transform of |r~|^2. rho(0) is exactly one and the
/// result is exactly even-symmetric. Throws ZeroResidualError when rss == 0.
std::vector<double> circular_autocorrelation(const ResidualSequence& r);
std::vector<double> circular_autocorrelation(const ResidualSequence& r, const FftPlan& plan);

/// Power spectral density, correlation power density and spectral
/// signature. Throws ZeroResidualError when rss == 0.
PowerSpectrum power_spectrum(const ResidualSequence& r);
PowerSpectrum power_spectrum(const ResidualSequence& r, const FftPlan& plan);

/// Mean Log Power: (1/N) sum_k ln max(c_k, floor * max_k c_k). Never
/// positive when `corr_power` averages to one.
///
/// Throws PreconditionError on negative or non-finite entries and
/// ZeroResidualError when every entry is zero.
double mean_log_power(std::span<const double> corr_power, FloorPolicy floor = {});

SpectralSummary spectral_summary(const ResidualSequence& r, FloorPolicy floor = {});
SpectralSummary spectral_summary(const ResidualSequence& r, const FftPlan& plan,
                                 FloorPolicy floor = {});

}  // namespace resloss
