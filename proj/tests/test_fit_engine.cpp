#include <doctest.h>

#include <cmath>
#include <iostream>

#include "oracles.hpp"
#include "resloss/errors.hpp"
#include "resloss/fit_engine.hpp"

using namespace resloss;

namespace {
double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}
}  // namespace

TEST_CASE("optimizer config validation") {
  OptimizerConfig c;
  CHECK_NOTHROW(c.validate());
  c.max_iters = 0;
  CHECK_THROWS_AS(c.validate(), PreconditionError);
  c = {};
  c.tol_abs = 0.0;
  CHECK_THROWS_AS(c.validate(), PreconditionError);
  CHECK(parse_optimizer("gradient") == OptimizerMethod::gradient);
  CHECK_THROWS_AS(parse_optimizer("bfgs"), PreconditionError);
}

TEST_CASE("eta = 0 stays at the OLS solution") {
  for (auto method : {OptimizerMethod::simplex, OptimizerMethod::gradient}) {
    for (unsigned seed = 0; seed < 5; ++seed) {
      const auto y = oracle::gaussian_vector(60, 100 + seed);
      OptimizerConfig opt;
      opt.method = method;
      const auto fit = fit_entropy_loss(Grid::chebyshev(60), y, Family::chebyshev, 6,
                                        LossSpec{0.0, {}}, opt);
      CHECK(max_abs_diff(fit.best.model.coefficients, fit.start.model.coefficients) <
            opt.x_tolerance);
      CHECK(fit.best.loss.total <= fit.start.loss.total);
    }
  }
}

TEST_CASE("warm start dominance at high order") {
  const auto y = oracle::gaussian_vector(100, 77);
  OptimizerConfig opt;
  opt.max_iters = 3000;
  const auto fit = fit_entropy_loss(Grid::fourier(100), y, Family::fourier, 41,
                                    LossSpec{1.0, {}}, opt);
  CHECK(fit.best.loss.total <= fit.start.loss.total + opt.tol_abs);
  CHECK(fit.evaluations > 0);
  MESSAGE("M=41 eta=1: L_ols=" << fit.start.loss.total << " L*=" << fit.best.loss.total
                               << " MLP_ols=" << fit.start.loss.mlp
                               << " MLP*=" << fit.best.loss.mlp);
}

TEST_CASE("running out of iterations is flagged, not thrown") {
  const auto y = oracle::gaussian_vector(40, 8);
  OptimizerConfig opt;
  opt.max_iters = 1;
  opt.restarts = 0;
  const auto fit = fit_entropy_loss(Grid::fourier(40), y, Family::fourier, 4,
                                    LossSpec{1.0, {}}, opt);
  CHECK_FALSE(fit.converged);
  CHECK(fit.iterations == 1);
  CHECK(fit.best.loss.total <= fit.start.loss.total);
}

TEST_CASE("gradient method improves or holds") {
  const auto y = oracle::gaussian_vector(50, 13);
  OptimizerConfig opt;
  opt.method = OptimizerMethod::gradient;
  opt.max_iters = 200;
  const auto fit = fit_entropy_loss(Grid::fourier(50), y, Family::fourier, 3,
                                    LossSpec{1.0, {}}, opt);
  CHECK(fit.method == OptimizerMethod::gradient);
  CHECK(fit.best.loss.total <= fit.start.loss.total);
}

TEST_CASE("loss landscape examples") {
  const auto y = oracle::gaussian_vector(64, 21);
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= 64.0;
  const auto g = Grid::fourier(64);

  const auto flat = loss_landscape(g, y, Family::fourier, 3, LossSpec{0.0, {}}, 1, -1.0, 1.0, 11);
  REQUIRE(flat.size() == 11);
  CHECK(flat.front().value == -1.0);
  CHECK(flat.back().value == 1.0);
  for (const auto& row : flat) CHECK(row.loss.total == row.loss.mse);

  // Constant-only model: MSE(a) = var(y) + (a/2 - mean)^2, vertex at 2*mean.
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  var /= 64.0;
  const auto slice = loss_landscape(g, y, Family::fourier, 1, LossSpec{1.0, {}}, 0,
                                    2.0 * mean - 2.0, 2.0 * mean + 2.0, 41);
  for (const auto& row : slice) {
    const double expected = var + (row.value / 2.0 - mean) * (row.value / 2.0 - mean);
    CHECK(row.loss.mse == doctest::Approx(expected).epsilon(1e-12));
    CHECK(std::isfinite(row.loss.total));
    CHECK(row.loss.total >= row.loss.mse);
  }
  CHECK(slice[20].loss.mse <= slice[19].loss.mse);
  CHECK(slice[20].loss.mse <= slice[21].loss.mse);

  CHECK_THROWS_AS(loss_landscape(g, y, Family::fourier, 1, LossSpec{}, 0, 0.0, 1.0, 1),
                  PreconditionError);
  CHECK_THROWS_AS(loss_landscape(g, y, Family::fourier, 1, LossSpec{}, 1, 0.0, 1.0, 5),
                  PreconditionError);
}

TEST_CASE("outlier demonstration report") {
  OutlierDemoConfig cfg;
  cfg.optimizer.max_iters = 4000;
  const auto rows = outlier_demo(cfg);
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    CHECK(std::isfinite(r.lag1_autocorr));
    CHECK(std::isfinite(r.signal_mse));
    MESSAGE("outlier demo eta=" << r.eta << " rho(1)=" << r.lag1_autocorr
                                << " signal_mse=" << r.signal_mse << " L=" << r.loss.total
                                << " converged=" << r.converged);
  }
}
