#include "resloss/fit_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "resloss/errors.hpp"
#include "resloss/rng.hpp"

namespace resloss {

namespace {

using Point = std::vector<double>;

class Objective {
 public:
  Objective(Eigen::MatrixXd design, std::span<const double> y, const LossSpec& spec)
      : design_(std::move(design)), y_(y), spec_(spec), plan_(y.size()) {}

  double operator()(std::span<const double> theta) {
    ++evaluations_;
    auto r = predict(design_, theta);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = y_[i] - r[i];
    return entropy_loss(ResidualSequence(std::move(r)), spec_, plan_).total;
  }

  std::size_t evaluations() const noexcept { return evaluations_; }

 private:
  Eigen::MatrixXd design_;
  std::span<const double> y_;
  LossSpec spec_;
  FftPlan plan_;
  std::size_t evaluations_ = 0;
};

struct Incumbent {
  Point x;
  double f;
};

bool small_spread(double fbest, double fworst, const OptimizerConfig& opt) {
  return fworst - fbest <= opt.tol_abs + opt.tol_rel * std::abs(fbest);
}

// Nelder-Mead with dimension-adaptive coefficients (Gao & Han 2012).
struct SimplexOutcome {
  Incumbent best;
  std::size_t iterations;
  bool converged;
};

SimplexOutcome nelder_mead(Objective& f, const Incumbent& start, std::span<const double> steps,
                           std::size_t max_iters, const OptimizerConfig& opt) {
  const std::size_t n = start.x.size();
  const double dim = static_cast<double>(n);
  const double alpha = 1.0;
  const double chi = 1.0 + 2.0 / dim;
  const double gamma = 0.75 - 0.5 / dim;
  const double sigma = n > 1 ? 1.0 - 1.0 / dim : 0.5;

  std::vector<Point> x(n + 1, start.x);
  std::vector<double> fx(n + 1, start.f);
  for (std::size_t j = 0; j < n; ++j) {
    x[j + 1][j] += steps[j];
    fx[j + 1] = f(x[j + 1]);
  }

  std::vector<std::size_t> idx(n + 1);
  Point centroid(n), trial(n), trial2(n);
  std::size_t iter = 0;
  bool converged = false;

  auto blend = [&](Point& out, const Point& base, const Point& towards, double t) {
    for (std::size_t i = 0; i < n; ++i) out[i] = base[i] + t * (towards[i] - base[i]);
  };

  for (; iter < max_iters; ++iter) {
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return fx[a] < fx[b]; });
    const std::size_t best = idx[0], worst = idx[n], second = idx[n - 1];

    if (small_spread(fx[best], fx[worst], opt)) {
      double size = 0.0;
      for (std::size_t v = 0; v <= n; ++v)
        for (std::size_t i = 0; i < n; ++i)
          size = std::max(size, std::abs(x[v][i] - x[best][i]) /
                                    std::max(1.0, std::abs(x[best][i])));
      if (size <= opt.x_tolerance) {
        converged = true;
        break;
      }
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t i = 0; i < n; ++i) centroid[i] += x[idx[v]][i];
    for (auto& c : centroid) c /= dim;

    blend(trial, centroid, x[worst], -alpha);
    const double fr = f(trial);
    if (fr < fx[best]) {
      blend(trial2, centroid, trial, chi);
      const double fe = f(trial2);
      if (fe < fr) {
        x[worst] = trial2;
        fx[worst] = fe;
      } else {
        x[worst] = trial;
        fx[worst] = fr;
      }
      continue;
    }
    if (fr < fx[second]) {
      x[worst] = trial;
      fx[worst] = fr;
      continue;
    }
    // Contraction: outside if the reflection beat the worst vertex.
    const bool outside = fr < fx[worst];
    blend(trial2, centroid, outside ? trial : x[worst], gamma);
    const double fc = f(trial2);
    if (fc < (outside ? fr : fx[worst])) {
      x[worst] = trial2;
      fx[worst] = fc;
      continue;
    }
    for (std::size_t v = 0; v <= n; ++v) {
      if (v == best) continue;
      blend(x[v], x[best], x[v], sigma);
      fx[v] = f(x[v]);
    }
  }

  const auto it = std::min_element(fx.begin(), fx.end());
  const auto b = static_cast<std::size_t>(it - fx.begin());
  return {{x[b], fx[b]}, iter, converged};
}

SimplexOutcome run_simplex(Objective& f, const Incumbent& start, std::span<const double> scale,
                           const OptimizerConfig& opt) {
  Point steps(scale.begin(), scale.end());
  for (std::size_t j = 0; j < steps.size(); ++j) steps[j] *= opt.initial_scale;

  auto out = nelder_mead(f, start, steps, opt.max_iters, opt);
  if (out.best.f > start.f) out.best = start;
  std::size_t used = out.iterations;

  for (std::size_t r = 0; r < opt.restarts && used < opt.max_iters; ++r) {
    // Random edge signs so restarts explore different simplex orientations.
    for (std::size_t j = 0; j < steps.size(); j += 4) {
      const auto bits = Philox4x32::generate(
          {static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(r), 0x5157u, 0u},
          {static_cast<std::uint32_t>(opt.seed), static_cast<std::uint32_t>(opt.seed >> 32)});
      for (std::size_t k = 0; k < 4 && j + k < steps.size(); ++k)
        steps[j + k] = std::abs(steps[j + k]) * ((bits[k] & 1u) ? -1.0 : 1.0);
    }
    const double before = out.best.f;
    auto next = nelder_mead(f, out.best, steps, opt.max_iters - used, opt);
    used += next.iterations;
    if (next.best.f < out.best.f) out.best = next.best;
    out.converged = next.converged;
    if (small_spread(out.best.f, before, opt)) break;
  }
  out.iterations = used;
  return out;
}

SimplexOutcome run_gradient(Objective& f, const Incumbent& start, std::span<const double> scale,
                            const OptimizerConfig& opt) {
  const std::size_t n = start.x.size();
  Incumbent cur = start;
  Point grad(n), probe(n);
  double step = 0.0;
  bool converged = false;
  std::size_t iter = 0;

  for (; iter < opt.max_iters; ++iter) {
    double gmax = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double h = 1e-6 * std::max(std::abs(cur.x[j]), scale[j]);
      probe = cur.x;
      probe[j] = cur.x[j] + h;
      const double up = f(probe);
      probe[j] = cur.x[j] - h;
      const double down = f(probe);
      grad[j] = (up - down) / (2.0 * h);
      gmax = std::max(gmax, std::abs(grad[j]) * scale[j]);
    }
    if (gmax == 0.0) {
      converged = true;
      break;
    }
    if (step == 0.0) step = opt.initial_scale / gmax;

    double g2 = 0.0;
    for (double g : grad) g2 += g * g;
    bool accepted = false;
    double fnew = cur.f;
    for (int tries = 0; tries < 60; ++tries) {
      for (std::size_t j = 0; j < n; ++j) probe[j] = cur.x[j] - step * grad[j];
      fnew = f(probe);
      if (fnew <= cur.f - 1e-4 * step * g2 && fnew < cur.f) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      converged = true;
      break;
    }
    double moved = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      moved = std::max(moved, step * std::abs(grad[j]) / std::max(1.0, std::abs(cur.x[j])));
    const double decrease = cur.f - fnew;
    cur = {probe, fnew};
    if (decrease <= opt.tol_abs + opt.tol_rel * std::abs(fnew) && moved <= opt.x_tolerance) {
      converged = true;
      ++iter;
      break;
    }
    step *= 2.0;
  }
  return {cur, iter, converged};
}

}  // namespace

std::string_view to_string(OptimizerMethod method) {
  return method == OptimizerMethod::simplex ? "simplex" : "gradient";
}

OptimizerMethod parse_optimizer(std::string_view name) {
  if (name == "simplex") return OptimizerMethod::simplex;
  if (name == "gradient") return OptimizerMethod::gradient;
  throw PreconditionError("unknown optimizer '" + std::string(name) + "'");
}

void OptimizerConfig::validate() const {
  if (max_iters < 1) throw PreconditionError("max_iters must be at least 1");
  if (!(tol_abs > 0.0) || !(tol_rel > 0.0) || !(x_tolerance > 0.0))
    throw PreconditionError("optimizer tolerances must be positive");
  if (!(initial_scale > 0.0) || !std::isfinite(initial_scale))
    throw PreconditionError("initial_scale must be positive");
}

EntropyFitResult fit_entropy_loss(const Grid& grid, std::span<const double> y, Family family,
                                  int order, const LossSpec& spec, const OptimizerConfig& opt) {
  spec.validate();
  opt.validate();
  auto ols = ols_fit(grid, y, family, order, spec);

  const auto theta0 = ols.model.coefficients;
  double rms = 0.0;
  for (double v : y) rms += v * v;
  rms = std::sqrt(rms / static_cast<double>(y.size()));
  Point scale(theta0.size());
  for (std::size_t j = 0; j < scale.size(); ++j)
    scale[j] = std::max({std::abs(theta0[j]), 0.1 * rms, 1e-8});

  Objective f(design_matrix(grid, family, order), y, spec);
  const Incumbent start{theta0, f(theta0)};
  const auto run = opt.method == OptimizerMethod::simplex ? run_simplex(f, start, scale, opt)
                                                          : run_gradient(f, start, scale, opt);
  const Incumbent& best = run.best.f <= start.f ? run.best : start;

  auto refit = evaluate_model(BasisModel{family, order, best.x}, grid, y, spec);
  refit.condition_estimate = ols.condition_estimate;
  refit.rank = ols.rank;
  return EntropyFitResult{std::move(ols), std::move(refit), run.iterations, f.evaluations(),
                          run.converged, opt.method};
}

std::vector<LandscapeRow> loss_landscape(const Grid& grid, std::span<const double> y,
                                         Family family, int order, const LossSpec& spec,
                                         std::size_t axis, double lo, double hi,
                                         std::size_t steps) {
  spec.validate();
  if (steps < 2) throw PreconditionError("loss_landscape: steps must be at least 2");
  if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi)
    throw PreconditionError("loss_landscape: range must be finite with lo <= hi");
  const auto ols = ols_fit(grid, y, family, order, spec);
  if (axis >= ols.model.coefficients.size())
    throw PreconditionError("loss_landscape: axis " + std::to_string(axis) + " out of range");

  BasisModel model = ols.model;
  std::vector<LandscapeRow> rows;
  rows.reserve(steps);
  for (std::size_t s = 0; s < steps; ++s) {
    const double t = static_cast<double>(s) / static_cast<double>(steps - 1);
    const double value = s + 1 == steps ? hi : lo + t * (hi - lo);
    model.coefficients[axis] = value;
    rows.push_back({value, evaluate_model(model, grid, y, spec).loss});
  }
  return rows;
}

std::vector<OutlierDemoRow> outlier_demo(const OutlierDemoConfig& config) {
  const Grid grid = Grid::fourier(config.n_points);
  const auto x = grid.locations();
  const std::size_t n = config.n_points;

  std::vector<double> clean(n), y(n);
  NormalStream noise(config.seed, 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    clean[i] = std::sin(2.0 * std::numbers::pi * x[i]) +
               0.5 * std::cos(4.0 * std::numbers::pi * x[i]);
    y[i] = clean[i] + config.noise_sigma * noise.next();
  }

  // Partial Fisher-Yates over the indices picks the contaminated points.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto outliers = static_cast<std::size_t>(std::lround(config.outlier_fraction * n));
  for (std::size_t i = 0; i < outliers && i < n; ++i) {
    const auto bits = Philox4x32::generate(
        {static_cast<std::uint32_t>(i), 0u, 0x0u, 2u},
        {static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32)});
    const std::size_t j = i + static_cast<std::size_t>(
                                  to_unit_open((std::uint64_t{bits[1]} << 32) | bits[0]) *
                                  static_cast<double>(n - i));
    std::swap(order[i], order[std::min(j, n - 1)]);
    y[order[i]] += config.outlier_size;
  }

  std::vector<OutlierDemoRow> rows;
  for (double eta : config.etas) {
    const LossSpec spec{eta, {}};
    const auto fit = fit_entropy_loss(grid, y, Family::fourier, config.order, spec,
                                      config.optimizer);
    const auto fitted = predict(fit.best.model, grid);
    double dev = 0.0;
    for (std::size_t i = 0; i < n; ++i) dev += (fitted[i] - clean[i]) * (fitted[i] - clean[i]);
    OutlierDemoRow row;
    row.eta = eta;
    row.lag1_autocorr = circular_autocorrelation(fit.best.residuals)[1];
    row.signal_mse = dev / static_cast<double>(n);
    row.loss = fit.best.loss;
    row.converged = fit.converged;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace resloss
