#include "resloss/fft.hpp"

#include <bit>
#include <cmath>
#include <numbers>

#include "resloss/errors.hpp"

namespace resloss {

namespace {

// exp(-2 pi i num / den) with the angle reduced in exact integer arithmetic
// first, so large k*n products do not lose precision.
Complex unit_root(std::size_t num, std::size_t den) {
  const double angle =
      -2.0 * std::numbers::pi * static_cast<double>(num % den) / static_cast<double>(den);
  return {std::cos(angle), std::sin(angle)};
}

void require_finite(std::span<const double> xs) {
  for (double v : xs)
    if (!std::isfinite(v)) throw PreconditionError("dft: non-finite input value");
}

void require_finite(std::span<const Complex> xs) {
  for (const auto& v : xs)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw PreconditionError("dft: non-finite input value");
}

}  // namespace

struct FftPlan::Radix2 {
  std::size_t n;
  std::vector<Complex> twiddles;  // exp(-2 pi i k / n), k < n/2
  std::vector<std::size_t> bitrev;

  explicit Radix2(std::size_t size) : n(size), twiddles(size / 2), bitrev(size) {
    for (std::size_t k = 0; k < n / 2; ++k) twiddles[k] = unit_root(k, n);
    const int bits = std::countr_zero(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (int b = 0; b < bits; ++b)
        if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
      bitrev[i] = r;
    }
  }

  // In-place forward transform.
  void transform(std::span<Complex> data) const {
    for (std::size_t i = 0; i < n; ++i)
      if (i < bitrev[i]) std::swap(data[i], data[bitrev[i]]);
    for (std::size_t len = 2; len <= n; len <<= 1) {
      const std::size_t half = len / 2;
      const std::size_t stride = n / len;
      for (std::size_t start = 0; start < n; start += len) {
        for (std::size_t j = 0; j < half; ++j) {
          const Complex t = twiddles[j * stride] * data[start + j + half];
          const Complex u = data[start + j];
          data[start + j] = u + t;
          data[start + j + half] = u - t;
        }
      }
    }
  }
};

struct FftPlan::Bluestein {
  std::size_t n;
  Radix2 inner;
  std::vector<Complex> chirp;         // exp(-pi i k^2 / n)
  std::vector<Complex> kernel_hat;    // FFT of the conjugate chirp, wrapped

  explicit Bluestein(std::size_t size)
      : n(size), inner(std::bit_ceil(2 * size - 1)), chirp(size) {
    const std::size_t m = inner.n;
    // k^2 mod 2n keeps the angle argument small and exact.
    for (std::size_t k = 0; k < n; ++k) chirp[k] = unit_root((k * k) % (2 * n), 2 * n);
    kernel_hat.assign(m, Complex{});
    kernel_hat[0] = std::conj(chirp[0]);
    for (std::size_t k = 1; k < n; ++k) {
      kernel_hat[k] = std::conj(chirp[k]);
      kernel_hat[m - k] = std::conj(chirp[k]);
    }
    inner.transform(kernel_hat);
  }

  void transform(std::span<const Complex> in, std::span<Complex> out) const {
    const std::size_t m = inner.n;
    std::vector<Complex> work(m);
    for (std::size_t k = 0; k < n; ++k) work[k] = in[k] * chirp[k];
    inner.transform(work);
    for (std::size_t k = 0; k < m; ++k) work[k] = std::conj(work[k] * kernel_hat[k]);
    // inverse via conjugation: ifft(z) = conj(fft(conj(z))) / m
    inner.transform(work);
    const double scale = 1.0 / static_cast<double>(m);
    for (std::size_t k = 0; k < n; ++k) out[k] = std::conj(work[k]) * scale * chirp[k];
  }
};

FftPlan::FftPlan(std::size_t n) : n_(n) {
  if (n == 0) throw PreconditionError("FftPlan: length must be at least 1");
  if (std::has_single_bit(n))
    radix2_ = std::make_unique<Radix2>(n);
  else
    bluestein_ = std::make_unique<Bluestein>(n);
}

FftPlan::~FftPlan() = default;
FftPlan::FftPlan(FftPlan&&) noexcept = default;
FftPlan& FftPlan::operator=(FftPlan&&) noexcept = default;

void FftPlan::forward(std::span<const Complex> in, std::span<Complex> out) const {
  if (in.size() != n_ || out.size() != n_)
    throw PreconditionError("FftPlan: buffer length does not match plan");
  if (radix2_) {
    std::copy(in.begin(), in.end(), out.begin());
    radix2_->transform(out);
  } else {
    bluestein_->transform(in, out);
  }
}

void FftPlan::forward(std::span<const double> in, std::span<Complex> out) const {
  if (in.size() != n_) throw PreconditionError("FftPlan: buffer length does not match plan");
  std::vector<Complex> tmp(in.begin(), in.end());
  forward(std::span<const Complex>(tmp), out);
}

void FftPlan::inverse(std::span<const Complex> in, std::span<Complex> out) const {
  if (in.size() != n_ || out.size() != n_)
    throw PreconditionError("FftPlan: buffer length does not match plan");
  std::vector<Complex> tmp(n_);
  for (std::size_t k = 0; k < n_; ++k) tmp[k] = std::conj(in[k]);
  forward(std::span<const Complex>(tmp), out);
  const double scale = 1.0 / static_cast<double>(n_);
  for (auto& v : out) v = std::conj(v) * scale;
}

std::vector<Complex> dft(std::span<const double> sequence) {
  if (sequence.empty()) throw PreconditionError("dft: empty input");
  require_finite(sequence);
  std::vector<Complex> out(sequence.size());
  FftPlan(sequence.size()).forward(sequence, out);
  return out;
}

std::vector<Complex> dft(std::span<const Complex> sequence) {
  if (sequence.empty()) throw PreconditionError("dft: empty input");
  require_finite(sequence);
  std::vector<Complex> out(sequence.size());
  FftPlan(sequence.size()).forward(sequence, out);
  return out;
}

std::vector<Complex> inverse_dft(std::span<const Complex> spectrum) {
  if (spectrum.empty()) throw PreconditionError("inverse_dft: empty input");
  require_finite(spectrum);
  std::vector<Complex> out(spectrum.size());
  FftPlan(spectrum.size()).inverse(spectrum, out);
  return out;
}

}  // namespace resloss
