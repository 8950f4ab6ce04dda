#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace resloss {

using Complex = std::complex<double>;

/// Precomputed discrete Fourier transform of a fixed length.
///
/// Uses the convention X_k = sum_n x_n exp(-2 pi i k n / N) for the forward
/// transform and x_n = (1/N) sum_k X_k exp(+2 pi i k n / N) for the inverse.
/// Power-of-two lengths use an iterative radix-2 transform; every other
/// length goes through Bluestein's chirp-z reformulation on a padded
/// power-of-two transform.
///
/// A plan is immutable after construction. `forward` and `inverse` allocate
/// their own scratch, so one plan can be shared by many threads.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n);
  ~FftPlan();
  FftPlan(FftPlan&&) noexcept;
  FftPlan& operator=(FftPlan&&) noexcept;
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  std::size_t size() const noexcept { return n_; }

  void forward(std::span<const Complex> in, std::span<Complex> out) const;
  void inverse(std::span<const Complex> in, std::span<Complex> out) const;

  /// Forward transform of a real sequence.
  void forward(std::span<const double> in, std::span<Complex> out) const;

 private:
  struct Radix2;
  struct Bluestein;

  std::size_t n_;
  std::unique_ptr<Radix2> radix2_;
  std::unique_ptr<Bluestein> bluestein_;
};

/// One-shot forward DFT of a real sequence. Throws PreconditionError on
/// empty or non-finite input.
std::vector<Complex> dft(std::span<const double> sequence);

/// One-shot forward DFT of a complex sequence.
std::vector<Complex> dft(std::span<const Complex> sequence);

/// One-shot inverse DFT, including the 1/N normalisation.
std::vector<Complex> inverse_dft(std::span<const Complex> spectrum);

}  // namespace resloss
