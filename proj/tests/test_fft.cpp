#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "resloss/errors.hpp"
#include "resloss/fft.hpp"

using namespace resloss;

TEST_CASE("dft of an impulse is flat") {
  const std::vector<double> x{1, 0, 0, 0};
  for (const auto& c : dft(x)) {
    CHECK(c.real() == doctest::Approx(1.0));
    CHECK(std::abs(c.imag()) < 1e-15);
  }
}

TEST_CASE("dft of a constant concentrates at k = 0") {
  const double c = -2.5;
  const auto out = dft(std::vector<double>{c, c, c, c});
  CHECK(out[0].real() == doctest::Approx(4 * c));
  for (std::size_t k = 1; k < 4; ++k) CHECK(std::abs(out[k]) < 1e-14);
}

TEST_CASE("dft matches direct summation for every length up to 70") {
  for (std::size_t n = 1; n <= 70; ++n) {
    const auto x = oracle::gaussian_vector(n, 100 + static_cast<unsigned>(n));
    const auto fast = dft(x);
    const auto slow = oracle::naive_dft(x);
    double err = 0.0;
    for (std::size_t k = 0; k < n; ++k) err = std::max(err, std::abs(fast[k] - slow[k]));
    CHECK_MESSAGE(err < 1e-10, "n = " << n);
  }
}

TEST_CASE("random length-7 sequence against the direct oracle") {
  const auto x = oracle::gaussian_vector(7, 7);
  const auto fast = dft(x);
  const auto slow = oracle::naive_dft(x);
  for (std::size_t k = 0; k < 7; ++k) CHECK(std::abs(fast[k] - slow[k]) < 1e-10);
}

TEST_CASE("inverse recovers the input") {
  for (std::size_t n : {2u, 3u, 16u, 100u, 257u}) {
    const auto x = oracle::gaussian_vector(n, 3);
    const auto back = inverse_dft(dft(x));
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      err = std::max(err, std::abs(back[i] - Complex(x[i], 0.0)));
      scale = std::max(scale, std::abs(x[i]));
    }
    CHECK(err <= 1e-12 * scale);
  }
}

TEST_CASE("precondition errors") {
  CHECK_THROWS_AS(dft(std::vector<double>{}), PreconditionError);
  CHECK_THROWS_AS(dft(std::vector<double>{1.0, NAN}), PreconditionError);
  CHECK_THROWS_AS(FftPlan(0), PreconditionError);
  const FftPlan plan(4);
  std::vector<Complex> out(3);
  CHECK_THROWS_AS(plan.forward(std::span<const double>(std::vector<double>(4)), out),
                  PreconditionError);
}
