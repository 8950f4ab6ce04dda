#include "resloss/spectra.hpp"

#include <algorithm>
#include <cmath>

#include "resloss/errors.hpp"

namespace resloss {

namespace {

constexpr double kImaginaryResidueLimit = 1e-10;

void require_plan(const ResidualSequence& r, const FftPlan& plan) {
  if (plan.size() != r.size())
    throw PreconditionError("spectra: FFT plan length does not match residual length");
}

std::vector<double> power_of(const ResidualSequence& r, const FftPlan& plan) {
  if (r.is_zero()) throw ZeroResidualError();
  std::vector<Complex> spectrum(r.size());
  plan.forward(r.values(), spectrum);
  std::vector<double> power(r.size());
  std::transform(spectrum.begin(), spectrum.end(), power.begin(),
                 [](const Complex& c) { return std::norm(c); });
  return power;
}

std::vector<double> autocorr_from_power(std::span<const double> power, double rss,
                                        const FftPlan& plan) {
  const std::size_t n = power.size();
  std::vector<Complex> in(power.begin(), power.end());
  std::vector<Complex> out(n);
  plan.inverse(in, out);

  double max_re = 0.0;
  double max_im = 0.0;
  for (const auto& c : out) {
    max_re = std::max(max_re, std::abs(c.real()));
    max_im = std::max(max_im, std::abs(c.imag()));
  }
  if (max_im > kImaginaryResidueLimit * max_re)
    throw InternalError("circular_autocorrelation: imaginary residue above tolerance");

  std::vector<double> rho(n);
  rho[0] = 1.0;
  for (std::size_t l = 1; l <= n / 2; ++l) {
    const double v = 0.5 * (out[l].real() + out[n - l].real()) / rss;
    rho[l] = v;
    rho[n - l] = v;
  }
  return rho;
}

PowerSpectrum spectrum_from_power(std::vector<double> power, double rss) {
  PowerSpectrum out;
  const double peak = *std::max_element(power.begin(), power.end());
  out.corr_power.resize(power.size());
  out.signature.resize(power.size());
  for (std::size_t k = 0; k < power.size(); ++k) {
    out.corr_power[k] = power[k] / rss;
    out.signature[k] = power[k] / peak;
  }
  out.power = std::move(power);
  return out;
}

}  // namespace

void FloorPolicy::validate() const {
  if (!(relative > 0.0 && relative < 1.0))
    throw PreconditionError("floor: relative floor must lie in (0, 1)");
}

ResidualSequence::ResidualSequence(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 2)
    throw PreconditionError("ResidualSequence: at least two residuals are required");
  double sum = 0.0;
  for (double v : values_) {
    if (!std::isfinite(v)) throw PreconditionError("ResidualSequence: non-finite residual");
    sum += v * v;
  }
  rss_ = sum;
}

std::vector<double> circular_autocorrelation(const ResidualSequence& r) {
  return circular_autocorrelation(r, FftPlan(r.size()));
}

std::vector<double> circular_autocorrelation(const ResidualSequence& r, const FftPlan& plan) {
  require_plan(r, plan);
  return autocorr_from_power(power_of(r, plan), r.rss(), plan);
}

PowerSpectrum power_spectrum(const ResidualSequence& r) {
  return power_spectrum(r, FftPlan(r.size()));
}

PowerSpectrum power_spectrum(const ResidualSequence& r, const FftPlan& plan) {
  require_plan(r, plan);
  return spectrum_from_power(power_of(r, plan), r.rss());
}

double mean_log_power(std::span<const double> corr_power, FloorPolicy floor) {
  floor.validate();
  if (corr_power.empty()) throw PreconditionError("mean_log_power: empty input");
  double peak = 0.0;
  for (double v : corr_power) {
    if (!std::isfinite(v) || v < 0.0)
      throw PreconditionError("mean_log_power: entries must be finite and non-negative");
    peak = std::max(peak, v);
  }
  if (peak == 0.0) throw ZeroResidualError();
  const double lower = floor.relative * peak;
  double sum = 0.0;
  for (double v : corr_power) sum += std::log(std::max(v, lower));
  // Round-off in the unit mean can push a flat spectrum a hair above zero.
  return std::min(sum / static_cast<double>(corr_power.size()), 0.0);
}

SpectralSummary spectral_summary(const ResidualSequence& r, FloorPolicy floor) {
  return spectral_summary(r, FftPlan(r.size()), floor);
}

SpectralSummary spectral_summary(const ResidualSequence& r, const FftPlan& plan,
                                 FloorPolicy floor) {
  require_plan(r, plan);
  auto power = power_of(r, plan);
  SpectralSummary s;
  s.rss = r.rss();
  s.autocorr = autocorr_from_power(power, s.rss, plan);
  auto ps = spectrum_from_power(std::move(power), s.rss);
  s.mlp = mean_log_power(ps.corr_power, floor);
  s.power = std::move(ps.power);
  s.corr_power = std::move(ps.corr_power);
  s.signature = std::move(ps.signature);
  return s;
}

}  // namespace resloss
