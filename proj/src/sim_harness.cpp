#include "resloss/sim_harness.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <string>

#include "resloss/errors.hpp"
#include "resloss/format.hpp"
#include "resloss/rng.hpp"

namespace resloss {

namespace {

// Realizations per reduction block. Part of the numeric contract: changing it
// changes the last bits of the averages, so it is folded into the config hash.
constexpr std::size_t kBlockSize = 128;
constexpr std::string_view kAggregation = "neumaier-block128-pairwise";
constexpr std::string_view kHarnessVersion = "resloss-sim-1";

constexpr std::array<double, 3> kBracketProbs{0.05, 0.50, 0.95};

// Neumaier-compensated running sums over a fixed-length vector.
struct CompensatedSums {
  std::vector<double> sum;
  std::vector<double> comp;

  explicit CompensatedSums(std::size_t n = 0) : sum(n, 0.0), comp(n, 0.0) {}

  void add(std::span<const double> xs) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double t = sum[i] + xs[i];
      if (std::abs(sum[i]) >= std::abs(xs[i]))
        comp[i] += (sum[i] - t) + xs[i];
      else
        comp[i] += (xs[i] - t) + sum[i];
      sum[i] = t;
    }
  }

  std::vector<double> total() const {
    std::vector<double> out(sum.size());
    for (std::size_t i = 0; i < sum.size(); ++i) out[i] = sum[i] + comp[i];
    return out;
  }
};

struct Partial {
  CompensatedSums autocorr, signature, corr_power;
  std::size_t count = 0;

  explicit Partial(std::size_t n = 0) : autocorr(n), signature(n), corr_power(n) {}

  void add(const SpectralSummary& s) {
    autocorr.add(s.autocorr);
    signature.add(s.signature);
    corr_power.add(s.corr_power);
    ++count;
  }
};

// Final per-block values, combined by pairwise summation in block order.
struct BlockTotals {
  std::vector<double> autocorr, signature, corr_power;
  std::size_t count = 0;
};

BlockTotals finish(const Partial& p) {
  return {p.autocorr.total(), p.signature.total(), p.corr_power.total(), p.count};
}

BlockTotals pairwise(std::span<const BlockTotals> blocks) {
  if (blocks.size() == 1) return blocks[0];
  const std::size_t mid = blocks.size() / 2;
  auto left = pairwise(blocks.first(mid));
  const auto right = pairwise(blocks.subspan(mid));
  for (std::size_t i = 0; i < left.autocorr.size(); ++i) {
    left.autocorr[i] += right.autocorr[i];
    left.signature[i] += right.signature[i];
    left.corr_power[i] += right.corr_power[i];
  }
  left.count += right.count;
  return left;
}

OrderStats summarize(int order, const BlockTotals& totals, std::span<const double> brackets,
                     std::size_t realizations, const OrderKernel& kernel) {
  OrderStats out;
  out.order = order;
  out.realization_count = totals.count;
  out.failures = realizations - totals.count;
  out.design_rank = kernel.design_rank();
  out.condition_estimate = kernel.condition_estimate();
  const std::size_t n = totals.autocorr.size();
  out.mean_autocorr.assign(n, std::numeric_limits<double>::quiet_NaN());
  out.mean_signature = out.mean_autocorr;
  out.mean_corr_power = out.mean_autocorr;
  out.bracket_percentiles.fill(std::numeric_limits<double>::quiet_NaN());
  if (totals.count == 0) return out;

  const double denom = static_cast<double>(totals.count);
  for (std::size_t i = 0; i < n; ++i) {
    out.mean_autocorr[i] = totals.autocorr[i] / denom;
    out.mean_signature[i] = totals.signature[i] / denom;
    out.mean_corr_power[i] = totals.corr_power[i] / denom;
  }
  std::vector<double> ok;
  ok.reserve(totals.count);
  for (double b : brackets)
    if (!std::isnan(b)) ok.push_back(b);
  const auto q = percentiles(ok, kBracketProbs);
  std::copy(q.begin(), q.end(), out.bracket_percentiles.begin());
  return out;
}

}  // namespace

std::string_view to_string(SimFamily family) {
  switch (family) {
    case SimFamily::none: return "none";
    case SimFamily::fourier: return "fourier";
    case SimFamily::chebyshev: return "chebyshev";
  }
  return "none";
}

SimFamily parse_sim_family(std::string_view name) {
  if (name == "none") return SimFamily::none;
  if (name == "fourier") return SimFamily::fourier;
  if (name == "chebyshev") return SimFamily::chebyshev;
  throw PreconditionError("unknown family '" + std::string(name) + "'");
}

std::optional<Family> basis_family(SimFamily family) {
  switch (family) {
    case SimFamily::fourier: return Family::fourier;
    case SimFamily::chebyshev: return Family::chebyshev;
    case SimFamily::none: break;
  }
  return std::nullopt;
}

void ExperimentConfig::validate() const {
  if (n_points < 2) throw PreconditionError("n_points must be at least 2");
  if (realizations < 1) throw PreconditionError("realizations must be at least 1");
  if (realizations > std::numeric_limits<std::uint32_t>::max())
    throw PreconditionError("realizations must fit in 32 bits");
  if (!std::isfinite(eta) || eta < 0.0)
    throw PreconditionError("eta must be finite and non-negative");
  floor.validate();
  if (family == SimFamily::none) {
    if (!(orders.empty() || (orders.size() == 1 && orders[0] == 0)))
      throw PreconditionError("family none takes no model orders");
    return;
  }
  if (orders.empty()) throw PreconditionError("at least one model order is required");
  const Family f = *basis_family(family);
  for (int m : orders) {
    if (m < 1) throw PreconditionError("model orders must be at least 1");
    if (parameter_count(f, m) > n_points)
      throw PreconditionError(std::string(to_string(f)) + " order " + std::to_string(m) +
                              " has more parameters than the " + std::to_string(n_points) +
                              "-point grid");
  }
}

std::vector<int> ExperimentConfig::effective_orders() const {
  if (family == SimFamily::none) return {0};
  return orders;
}

std::string ExperimentConfig::canonical() const {
  std::string s;
  s += kHarnessVersion;
  s += ";family=";
  s += to_string(family);
  s += ";n=" + std::to_string(n_points);
  s += ";orders=";
  const auto ord = effective_orders();
  for (std::size_t i = 0; i < ord.size(); ++i) s += (i ? "," : "") + std::to_string(ord[i]);
  s += ";realizations=" + std::to_string(realizations);
  s += ";seed=" + std::to_string(seed);
  s += ";eta=" + format_double(eta);
  s += ";floor=" + format_double(floor.relative);
  s += ";variate=";
  s += kVariateAlgorithm;
  s += ";aggregation=";
  s += kAggregation;
  return s;
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a64(canonical()); }

std::size_t AggregateStats::total_failures() const noexcept {
  std::size_t n = 0;
  for (const auto& o : orders) n += o.failures;
  return n;
}

struct OrderKernel::Impl {
  std::uint64_t seed;
  int order;
  std::size_t n;
  FloorPolicy floor;
  LossSpec spec;
  FftPlan plan;
  std::optional<OlsSolver> solver;
};

OrderKernel::OrderKernel(const ExperimentConfig& config, int order)
    : impl_(std::make_unique<Impl>(Impl{config.seed, order, config.n_points, config.floor,
                                        LossSpec{config.eta, config.floor},
                                        FftPlan(config.n_points), std::nullopt})) {
  if (const auto f = basis_family(config.family)) {
    const Grid grid = *f == Family::fourier ? Grid::fourier(config.n_points)
                                            : Grid::chebyshev(config.n_points);
    impl_->solver.emplace(grid, *f, order, SolverOptions{RankPolicy::truncate, 0.0});
  }
}

OrderKernel::~OrderKernel() = default;
OrderKernel::OrderKernel(OrderKernel&&) noexcept = default;

std::size_t OrderKernel::design_rank() const noexcept {
  return impl_->solver ? impl_->solver->rank() : 0;
}

double OrderKernel::condition_estimate() const noexcept {
  return impl_->solver ? impl_->solver->condition_estimate() : 1.0;
}

RealizationOutcome OrderKernel::run(std::size_t realization) const {
  const auto& s = *impl_;
  std::vector<double> y(s.n);
  NormalStream(s.seed, static_cast<std::uint32_t>(s.order),
               static_cast<std::uint32_t>(realization))
      .fill(y);
  RealizationOutcome out;
  try {
    ResidualSequence residuals =
        s.solver ? s.solver->fit(y, s.spec).residuals : ResidualSequence(std::move(y));
    out.summary = spectral_summary(residuals, s.plan, s.floor);
    out.bracket = 1.0 - s.spec.eta * out.summary.mlp;
    out.ok = true;
  } catch (const Error&) {
    out.ok = false;
  }
  return out;
}

AggregateStats run_experiment(const ExperimentConfig& config, int threads) {
  config.validate();
  AggregateStats stats{config, config.hash(), {}};
  const std::size_t n = config.n_points;
  const std::size_t total = config.realizations;
  const std::size_t block_count = (total + kBlockSize - 1) / kBlockSize;
  const int team = threads > 0 ? threads : omp_get_max_threads();

  for (int order : config.effective_orders()) {
    const OrderKernel kernel(config, order);
    std::vector<BlockTotals> blocks(block_count);
    std::vector<double> brackets(total, std::numeric_limits<double>::quiet_NaN());
    std::exception_ptr failure;

#pragma omp parallel for schedule(dynamic, 1) num_threads(team)
    for (std::size_t b = 0; b < block_count; ++b) {
      try {
        Partial partial(n);
        const std::size_t end = std::min(total, (b + 1) * kBlockSize);
        for (std::size_t i = b * kBlockSize; i < end; ++i) {
          const auto outcome = kernel.run(i);
          if (!outcome.ok) continue;
          partial.add(outcome.summary);
          brackets[i] = outcome.bracket;
        }
        blocks[b] = finish(partial);
      } catch (...) {
#pragma omp critical(resloss_harness_failure)
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);

    stats.orders.push_back(summarize(order, pairwise(blocks), brackets, total, kernel));
  }
  return stats;
}

AggregateStats run_experiment_serial(const ExperimentConfig& config) {
  config.validate();
  AggregateStats stats{config, config.hash(), {}};
  const std::size_t n = config.n_points;
  for (int order : config.effective_orders()) {
    const OrderKernel kernel(config, order);
    Partial running(n);
    std::vector<double> brackets(config.realizations, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < config.realizations; ++i) {
      const auto outcome = kernel.run(i);
      if (!outcome.ok) continue;
      running.add(outcome.summary);
      brackets[i] = outcome.bracket;
    }
    stats.orders.push_back(
        summarize(order, finish(running), brackets, config.realizations, kernel));
  }
  return stats;
}

std::vector<double> percentiles(std::span<const double> samples, std::span<const double> probs) {
  if (samples.empty()) throw PreconditionError("percentiles: empty sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  for (double v : sorted)
    if (std::isnan(v)) throw PreconditionError("percentiles: NaN sample");
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out;
  out.reserve(probs.size());
  const double last = static_cast<double>(sorted.size() - 1);
  for (double q : probs) {
    if (!(q >= 0.0 && q <= 1.0)) throw PreconditionError("percentiles: probability outside [0, 1]");
    const double rank = q * last;
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const auto hi = static_cast<std::size_t>(std::ceil(rank));
    const double frac = rank - static_cast<double>(lo);
    out.push_back(sorted[lo] + frac * (sorted[hi] - sorted[lo]));
  }
  return out;
}

}  // namespace resloss
