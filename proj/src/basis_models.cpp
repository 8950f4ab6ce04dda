#include "resloss/basis_models.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "resloss/errors.hpp"

namespace resloss {

namespace {

void require_order(int order) {
  if (order < 1) throw PreconditionError("basis model order must be at least 1");
}

void require_sample(const Grid& grid, std::span<const double> y) {
  if (y.size() != grid.size())
    throw PreconditionError("sample length " + std::to_string(y.size()) +
                            " does not match grid length " + std::to_string(grid.size()));
  for (double v : y)
    if (!std::isfinite(v)) throw PreconditionError("sample contains a non-finite value");
}

// Basis function j of the family at x.
void fill_row(Family family, int order, double x, std::span<double> row) {
  if (family == Family::fourier) {
    row[0] = 0.5;
    for (int m = 1; m < order; ++m) {
      const double phase = 2.0 * std::numbers::pi * m * x;
      row[m] = std::cos(phase);
      row[order - 1 + m] = std::sin(phase);
    }
    return;
  }
  row[0] = 1.0;
  if (order > 1) row[1] = x;
  for (int m = 2; m < order; ++m) row[m] = 2.0 * x * row[m - 1] - row[m - 2];
}

}  // namespace

std::string_view to_string(Family family) {
  return family == Family::fourier ? "fourier" : "chebyshev";
}

Family parse_family(std::string_view name) {
  if (name == "fourier") return Family::fourier;
  if (name == "chebyshev") return Family::chebyshev;
  throw PreconditionError("unknown basis family '" + std::string(name) + "'");
}

Grid Grid::fourier(std::size_t n) {
  if (n < 2) throw PreconditionError("grid needs at least two points");
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = -0.5 + static_cast<double>(i) / static_cast<double>(n);
  return Grid(std::move(x), Kind::fourier);
}

Grid Grid::chebyshev(std::size_t n) {
  if (n < 2) throw PreconditionError("grid needs at least two points");
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n);
  return Grid(std::move(x), Kind::chebyshev);
}

Grid Grid::custom(std::vector<double> locations) {
  if (locations.size() < 2) throw PreconditionError("grid needs at least two points");
  for (std::size_t i = 0; i < locations.size(); ++i) {
    if (!std::isfinite(locations[i])) throw PreconditionError("grid location is not finite");
    if (i > 0 && !(locations[i] > locations[i - 1]))
      throw PreconditionError("grid locations must be strictly increasing (index " +
                              std::to_string(i) + ")");
  }
  return Grid(std::move(locations), Kind::custom);
}

std::size_t parameter_count(Family family, int order) {
  require_order(order);
  return family == Family::fourier ? static_cast<std::size_t>(2 * order - 1)
                                   : static_cast<std::size_t>(order);
}

void BasisModel::validate() const {
  if (coefficients.size() != parameter_count(family, order))
    throw PreconditionError("coefficient count does not match family and order");
}

Eigen::MatrixXd design_matrix(const Grid& grid, Family family, int order) {
  const std::size_t p = parameter_count(family, order);
  const std::size_t n = grid.size();
  if (p > n)
    throw OverdeterminedBasisError(std::string(to_string(family)) + " order " +
                                   std::to_string(order) + " needs " + std::to_string(p) +
                                   " parameters but the grid has " + std::to_string(n) +
                                   " points");
  Eigen::MatrixXd a(n, p);
  std::vector<double> row(p);
  const auto x = grid.locations();
  for (std::size_t i = 0; i < n; ++i) {
    fill_row(family, order, x[i], row);
    for (std::size_t j = 0; j < p; ++j) a(i, j) = row[j];
  }
  return a;
}

std::vector<double> predict(const BasisModel& model, const Grid& grid) {
  model.validate();
  const std::size_t p = model.coefficients.size();
  std::vector<double> row(p);
  std::vector<double> out(grid.size());
  const auto x = grid.locations();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    fill_row(model.family, model.order, x[i], row);
    double sum = 0.0;
    for (std::size_t j = 0; j < p; ++j) sum += row[j] * model.coefficients[j];
    out[i] = sum;
  }
  return out;
}

std::vector<double> predict(const Eigen::MatrixXd& design, std::span<const double> coefficients) {
  if (static_cast<std::size_t>(design.cols()) != coefficients.size())
    throw PreconditionError("coefficient count does not match design columns");
  std::vector<double> out(static_cast<std::size_t>(design.rows()));
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < design.cols(); ++j)
      sum += design(i, j) * coefficients[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = sum;
  }
  return out;
}

FitResult evaluate_model(const BasisModel& model, const Grid& grid, std::span<const double> y,
                         const LossSpec& spec) {
  require_sample(grid, y);
  auto yhat = predict(model, grid);
  for (std::size_t i = 0; i < yhat.size(); ++i) yhat[i] = y[i] - yhat[i];
  ResidualSequence residuals(std::move(yhat));
  auto loss = entropy_loss(residuals, spec);
  return FitResult{model, std::move(residuals), loss, 1.0, model.coefficients.size()};
}

struct OlsSolver::Impl {
  Grid grid;
  Family family;
  int order;
  Eigen::MatrixXd design;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
  std::unique_ptr<Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>> cod;
  double condition = 1.0;
  std::size_t rank = 0;
};

OlsSolver::OlsSolver(const Grid& grid, Family family, int order, SolverOptions options)
    : impl_(std::make_unique<Impl>(Impl{grid, family, order, design_matrix(grid, family, order),
                                        {}, nullptr, 1.0, 0})) {
  auto& s = *impl_;
  if (options.rank_tolerance < 0.0 || !std::isfinite(options.rank_tolerance))
    throw PreconditionError("rank tolerance must be finite and non-negative");
  const double threshold = options.rank_tolerance > 0.0
                               ? options.rank_tolerance
                               : std::numeric_limits<double>::epsilon() *
                                     static_cast<double>(grid.size());
  s.qr.setThreshold(threshold);
  s.qr.compute(s.design);
  const auto r = s.qr.matrixR();
  const auto p = s.design.cols();
  const double top = std::abs(r(0, 0));
  const double bottom = std::abs(r(p - 1, p - 1));
  s.condition = bottom > 0.0 ? top / bottom : std::numeric_limits<double>::infinity();
  s.rank = static_cast<std::size_t>(s.qr.rank());

  if (s.rank < static_cast<std::size_t>(p)) {
    if (options.rank_policy == RankPolicy::reject)
      throw SingularDesignError(s.rank, static_cast<std::size_t>(p), s.condition);
    s.cod = std::make_unique<Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>>();
    s.cod->setThreshold(threshold);
    s.cod->compute(s.design);
  }
}

OlsSolver::~OlsSolver() = default;
OlsSolver::OlsSolver(OlsSolver&&) noexcept = default;
OlsSolver& OlsSolver::operator=(OlsSolver&&) noexcept = default;

const Grid& OlsSolver::grid() const noexcept { return impl_->grid; }
const Eigen::MatrixXd& OlsSolver::design() const noexcept { return impl_->design; }
double OlsSolver::condition_estimate() const noexcept { return impl_->condition; }
std::size_t OlsSolver::rank() const noexcept { return impl_->rank; }
bool OlsSolver::rank_deficient() const noexcept {
  return impl_->rank < static_cast<std::size_t>(impl_->design.cols());
}

FitResult OlsSolver::fit(std::span<const double> y, const LossSpec& spec) const {
  const auto& s = *impl_;
  require_sample(s.grid, y);
  const Eigen::Map<const Eigen::VectorXd> rhs(y.data(), static_cast<Eigen::Index>(y.size()));
  auto solve = [&s](const Eigen::VectorXd& b) {
    return s.cod ? Eigen::VectorXd(s.cod->solve(b)) : Eigen::VectorXd(s.qr.solve(b));
  };
  auto residual_of = [&](const Eigen::VectorXd& theta) {
    auto r = predict(s.design, std::span<const double>(theta.data(), std::size_t(theta.size())));
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = y[i] - r[i];
    return r;
  };
  auto squares = [](const std::vector<double>& r) {
    double acc = 0.0;
    for (double v : r) acc += v * v;
    return acc;
  };

  // One step of iterative refinement; kept only when it does not raise the
  // RSS. It lands exactly representable fits (constant data, say) on
  // exactly zero residuals.
  Eigen::VectorXd theta = solve(rhs);
  auto r = residual_of(theta);
  {
    const Eigen::Map<const Eigen::VectorXd> rv(r.data(), static_cast<Eigen::Index>(r.size()));
    const Eigen::VectorXd refined = theta + solve(rv);
    auto r2 = residual_of(refined);
    if (squares(r2) <= squares(r)) {
      theta = refined;
      r = std::move(r2);
    }
  }
  BasisModel model{s.family, s.order, std::vector<double>(theta.data(), theta.data() + theta.size())};
  ResidualSequence residuals(std::move(r));
  auto loss = entropy_loss(residuals, spec);
  return FitResult{std::move(model), std::move(residuals), loss, s.condition, s.rank};
}

FitResult ols_fit(const Grid& grid, std::span<const double> y, Family family, int order,
                  const LossSpec& spec, SolverOptions options) {
  return OlsSolver(grid, family, order, options).fit(y, spec);
}

}  // namespace resloss
