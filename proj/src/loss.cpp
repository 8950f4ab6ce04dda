#include "resloss/loss.hpp"

#include <algorithm>
#include <cmath>

#include "resloss/errors.hpp"

namespace resloss {

namespace {

constexpr double kNegativeEigenvalueLimit = -1e-10;
constexpr double kUnitDiagonalTolerance = 1e-12;
constexpr double kSymmetryTolerance = 1e-10;

}  // namespace

void LossSpec::validate() const {
  if (!std::isfinite(eta) || eta < 0.0)
    throw PreconditionError("LossSpec: eta must be finite and non-negative");
  floor.validate();
}

double mse(std::span<const double> residuals) {
  if (residuals.empty()) throw PreconditionError("mse: empty residual sequence");
  double sum = 0.0;
  for (double v : residuals) sum += v * v;
  return sum / static_cast<double>(residuals.size());
}

double mse(const ResidualSequence& r) {
  return r.rss() / static_cast<double>(r.size());
}

LossBreakdown entropy_loss(const ResidualSequence& r, const LossSpec& spec) {
  return entropy_loss(r, spec, FftPlan(r.size()));
}

LossBreakdown entropy_loss(const ResidualSequence& r, const LossSpec& spec, const FftPlan& plan) {
  spec.validate();
  if (r.is_zero()) return {};
  LossBreakdown out;
  out.mse = mse(r);
  out.mlp = mean_log_power(power_spectrum(r, plan).corr_power, spec.floor);
  out.total = out.mse * (1.0 - spec.eta * out.mlp);
  return out;
}

double circulant_log_det(std::span<const double> rho, FloorPolicy floor) {
  floor.validate();
  const std::size_t n = rho.size();
  if (n == 0) throw PreconditionError("circulant_log_det: empty column");
  if (std::abs(rho[0] - 1.0) > kUnitDiagonalTolerance)
    throw PreconditionError("circulant_log_det: rho[0] must equal 1");
  for (std::size_t l = 1; l < n; ++l) {
    if (!std::isfinite(rho[l])) throw PreconditionError("circulant_log_det: non-finite entry");
    if (std::abs(rho[l] - rho[n - l]) > kSymmetryTolerance)
      throw PreconditionError("circulant_log_det: rho must be even-symmetric");
  }

  const auto eig = dft(rho);
  double peak = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double lambda = eig[k].real();
    if (lambda < kNegativeEigenvalueLimit) throw NonPSDError(k, lambda);
    peak = std::max(peak, lambda);
  }
  // The eigenvalues average to rho[0] = 1, so peak >= 1.
  const double lower = floor.relative * peak;
  double sum = 0.0;
  for (const auto& c : eig) sum += std::log(std::max(c.real(), lower));
  return sum;
}

}  // namespace resloss
