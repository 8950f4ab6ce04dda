#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <omp.h>

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "resloss/basis_models.hpp"
#include "resloss/errors.hpp"
#include "resloss/fit_engine.hpp"
#include "resloss/format.hpp"
#include "resloss/loss.hpp"
#include "resloss/rng.hpp"
#include "resloss/sim_harness.hpp"
#include "resloss/spectra.hpp"

namespace resloss::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

constexpr const char* kVersion = "1.0.0";

constexpr const char* kExitCodes =
    "Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical error.\n"
    "Environment: RESLOSS_OUT sets the default --out directory, RESLOSS_THREADS the\n"
    "default thread count.";

/// Malformed or inconsistent user data (exit 3).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Flag combinations CLI11 cannot express (exit 2).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string env_or(const char* name, std::string fallback) {
  if (const char* v = std::getenv(name); v && *v) return v;
  return fallback;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

bool parse_number(const std::string& text, double& value) {
  if (text.empty()) return false;
  const char* first = text.data();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, text.data() + text.size(), value);
  return res.ec == std::errc{} && res.ptr == text.data() + text.size() && std::isfinite(value);
}

bool is_header(const std::vector<std::string>& fields) {
  double tmp;
  for (const auto& f : fields)
    if (!parse_number(f, tmp)) return true;
  return false;
}

/// Reads a numeric CSV with `columns` columns and an optional header line.
std::vector<std::vector<double>> read_table(const std::string& path, std::size_t columns) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": cannot open file");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split(line, ',');
    if (first) {
      first = false;
      if (fields.size() == columns && is_header(fields)) {
        bool names_ok = true;
        for (const auto& f : fields) {
          double tmp;
          if (parse_number(f, tmp) || f.empty()) names_ok = false;
        }
        if (names_ok) continue;
      }
    }
    if (fields.size() != columns)
      throw DataError(path + ": line " + std::to_string(lineno) + ": expected " +
                      std::to_string(columns) + " column(s), found " +
                      std::to_string(fields.size()));
    std::vector<double> row(columns);
    for (std::size_t c = 0; c < columns; ++c)
      if (!parse_number(fields[c], row[c]))
        throw DataError(path + ": line " + std::to_string(lineno) + ": '" + fields[c] +
                        "' is not a finite number");
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<int> parse_orders(const std::string& text) {
  std::vector<int> out;
  if (trim(text).empty()) return out;
  for (const auto& f : split(text, ',')) {
    int v = 0;
    const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
    if (f.empty() || res.ec != std::errc{} || res.ptr != f.data() + f.size())
      throw UsageError("--orders: '" + f + "' is not an integer");
    out.push_back(v);
  }
  return out;
}

json loss_json(const LossBreakdown& l) {
  return json{{"mse", l.mse}, {"mlp", l.mlp}, {"total", l.total}};
}

/// Writes every (name, content) pair into `dir`; removes what was written if
/// any write fails.
void write_outputs(const fs::path& dir, const std::vector<std::pair<std::string, std::string>>& files) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
  std::vector<fs::path> written;
  for (const auto& [name, content] : files) {
    const fs::path path = dir / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    out.close();
    if (!out) {
      for (const auto& p : written) fs::remove(p, ec);
      fs::remove(path, ec);
      throw DataError("failed writing " + path.string());
    }
    written.push_back(path);
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string family = "fourier";
  std::size_t n = 100;
  std::string orders;
  std::size_t realizations = 10000;
  std::uint64_t seed = 0;
  double eta = 1.0;
  double floor = 1e-12;
  std::string out;
  int threads = 0;
};

std::string matrix_csv(const std::string& column_prefix, const AggregateStats& stats,
                       std::vector<double> OrderStats::*field) {
  std::string s = "order";
  const std::size_t n = stats.config.n_points;
  for (std::size_t i = 0; i < n; ++i) s += "," + column_prefix + std::to_string(i);
  s += "\n";
  for (const auto& o : stats.orders) {
    s += std::to_string(o.order);
    for (double v : o.*field) s += "," + format_double(v);
    s += "\n";
  }
  return s;
}

std::string percentiles_csv(const AggregateStats& stats) {
  std::string s = "order,p05,p50,p95\n";
  for (const auto& o : stats.orders) {
    s += std::to_string(o.order);
    for (double v : o.bracket_percentiles) s += "," + format_double(v);
    s += "\n";
  }
  return s;
}

json simulate_manifest(const AggregateStats& stats) {
  const auto& c = stats.config;
  json orders = json::array();
  for (const auto& o : stats.orders)
    orders.push_back({{"order", o.order},
                      {"successful_realizations", o.realization_count},
                      {"failures", o.failures},
                      {"design_rank", o.design_rank},
                      {"condition_estimate", o.condition_estimate}});
  return json{
      {"tool", "resloss"},
      {"version", kVersion},
      {"command", "simulate"},
      {"config",
       {{"family", std::string(to_string(c.family))},
        {"n", c.n_points},
        {"orders", c.effective_orders()},
        {"realizations", c.realizations},
        {"seed", c.seed},
        {"eta", c.eta},
        {"floor", c.floor.relative}}},
      {"variate_algorithm", std::string(kVariateAlgorithm)},
      {"config_hash", hex64(stats.config_hash)},
      {"total_failures", stats.total_failures()},
      {"orders", orders},
      {"files", {"mean_autocorr.csv", "mean_signature.csv", "mlp_percentiles.csv"}},
  };
}

int cmd_simulate(const SimulateArgs& a, std::ostream& err) {
  ExperimentConfig config;
  config.family = parse_sim_family(a.family);
  config.n_points = a.n;
  config.orders = parse_orders(a.orders);
  if (config.family != SimFamily::none && config.orders.empty())
    throw UsageError("--orders is required for family " + a.family);
  config.realizations = a.realizations;
  config.seed = a.seed;
  config.eta = a.eta;
  config.floor.relative = a.floor;
  try {
    config.validate();
  } catch (const PreconditionError& e) {
    throw UsageError(e.what());
  }

  const int threads = a.threads > 0 ? a.threads : std::atoi(env_or("RESLOSS_THREADS", "0").c_str());
  const auto t0 = std::chrono::steady_clock::now();
  const auto stats = run_experiment(config, threads);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const fs::path dir = a.out.empty() ? fs::path(env_or("RESLOSS_OUT", ".")) : fs::path(a.out);
  write_outputs(dir, {
                         {"mean_autocorr.csv", matrix_csv("lag", stats, &OrderStats::mean_autocorr)},
                         {"mean_signature.csv", matrix_csv("k", stats, &OrderStats::mean_signature)},
                         {"mlp_percentiles.csv", percentiles_csv(stats)},
                         {"manifest.json", dump(simulate_manifest(stats))},
                         {"timing.txt", "wall_seconds " + format_double(wall) + "\nthreads " +
                                            std::to_string(threads > 0 ? threads
                                                                       : omp_get_max_threads()) +
                                            "\n"},
                     });
  if (stats.total_failures() > 0)
    err << "warning: " << stats.total_failures() << " realization(s) failed and were excluded\n";
  return kSuccess;
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
  std::string data;
  std::string family = "fourier";
  int order = 1;
  double eta = 1.0;
  double floor = 1e-12;
  std::string optimizer = "simplex";
  OptimizerConfig opt{};
  std::string out;
};

int cmd_fit(FitArgs a, std::ostream& err) {
  const Family family = [&] {
    try {
      return parse_family(a.family);
    } catch (const PreconditionError& e) {
      throw UsageError(e.what());
    }
  }();
  try {
    a.opt.method = parse_optimizer(a.optimizer);
    a.opt.validate();
    LossSpec{a.eta, {a.floor}}.validate();
  } catch (const PreconditionError& e) {
    throw UsageError(e.what());
  }

  const auto rows = read_table(a.data, 2);
  if (rows.size() < 2) throw DataError(a.data + ": at least two data rows are required");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && !(rows[i][0] > rows[i - 1][0]))
      throw DataError(a.data + ": x must be strictly increasing (data row " +
                      std::to_string(i + 1) + ")");
    x.push_back(rows[i][0]);
    y.push_back(rows[i][1]);
  }
  const Grid grid = Grid::custom(std::move(x));
  const LossSpec spec{a.eta, {a.floor}};
  const auto fit = fit_entropy_loss(grid, y, family, a.order, spec, a.opt);

  double max_diff = 0.0;
  for (std::size_t j = 0; j < fit.best.model.coefficients.size(); ++j)
    max_diff = std::max(max_diff, std::abs(fit.best.model.coefficients[j] -
                                           fit.start.model.coefficients[j]));

  std::string data_text;
  {
    std::ifstream in(a.data, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    data_text = ss.str();
  }
  json config{{"family", a.family},      {"order", a.order},
              {"eta", a.eta},            {"floor", a.floor},
              {"optimizer", a.optimizer}, {"max_iters", a.opt.max_iters},
              {"tol_abs", a.opt.tol_abs}, {"tol_rel", a.opt.tol_rel},
              {"x_tolerance", a.opt.x_tolerance}, {"initial_scale", a.opt.initial_scale},
              {"restarts", a.opt.restarts}, {"seed", a.opt.seed},
              {"data_hash", hex64(fnv1a64(data_text))}};
  const std::string hash = hex64(fnv1a64(config.dump()));

  json fit_json{
      {"family", a.family},
      {"order", a.order},
      {"eta", a.eta},
      {"n", y.size()},
      {"ols", {{"coefficients", fit.start.model.coefficients}, {"loss", loss_json(fit.start.loss)}}},
      {"entropy_fit",
       {{"coefficients", fit.best.model.coefficients}, {"loss", loss_json(fit.best.loss)}}},
      {"optimizer", a.optimizer},
      {"iterations", fit.iterations},
      {"evaluations", fit.evaluations},
      {"converged", fit.converged},
      {"coefficient_max_abs_diff", max_diff},
      {"x_tolerance", a.opt.x_tolerance},
      {"condition_estimate", fit.start.condition_estimate},
      {"rank", fit.start.rank},
      {"perfect_fit", fit.best.residuals.is_zero()},
  };

  std::string spectrum = "lag,rho_rr,k,rho_tilde_rr\n";
  if (!fit.best.residuals.is_zero()) {
    const auto rho = circular_autocorrelation(fit.best.residuals);
    const auto ps = power_spectrum(fit.best.residuals);
    for (std::size_t i = 0; i < rho.size(); ++i)
      spectrum += std::to_string(i) + "," + format_double(rho[i]) + "," + std::to_string(i) +
                  "," + format_double(ps.corr_power[i]) + "\n";
  } else {
    err << "note: residuals are identically zero; residual_spectrum.csv has no rows\n";
  }

  json manifest{{"tool", "resloss"},
                {"version", kVersion},
                {"command", "fit"},
                {"config", config},
                {"variate_algorithm", std::string(kVariateAlgorithm)},
                {"config_hash", hash},
                {"converged", fit.converged},
                {"files", {"fit.json", "residual_spectrum.csv"}}};

  const fs::path dir = a.out.empty() ? fs::path(env_or("RESLOSS_OUT", ".")) : fs::path(a.out);
  write_outputs(dir, {{"fit.json", dump(fit_json)},
                      {"residual_spectrum.csv", spectrum},
                      {"manifest.json", dump(manifest)}});
  if (!fit.converged) err << "warning: optimizer stopped before converging\n";
  return kSuccess;
}

// ---------------------------------------------------------------------------
// loss-eval

int cmd_loss_eval(const std::string& path, double eta, double floor, std::ostream& out) {
  try {
    LossSpec{eta, {floor}}.validate();
  } catch (const PreconditionError& e) {
    throw UsageError(e.what());
  }
  const auto rows = read_table(path, 1);
  if (rows.size() < 2) throw DataError(path + ": at least two residuals are required");
  std::vector<double> r;
  for (const auto& row : rows) r.push_back(row[0]);
  const ResidualSequence residuals(std::move(r));
  if (residuals.is_zero()) throw ZeroResidualError();
  const auto loss = entropy_loss(residuals, LossSpec{eta, {floor}});
  json j{{"mse", loss.mse}, {"mlp", loss.mlp}, {"total", loss.total}, {"n", residuals.size()}};
  out << j.dump() << "\n";
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Residual-spectrum diagnostics and the entropy-extended MSE loss"};
  app.name(args.empty() ? "resloss" : fs::path(args[0]).filename().string());
  app.footer(kExitCodes);
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo overfitting sweep");
  simulate->add_option("--family", sim.family, "fourier | chebyshev | none")
      ->check(CLI::IsMember({"fourier", "chebyshev", "none"}))
      ->capture_default_str();
  simulate->add_option("--n", sim.n, "Points per sample")->capture_default_str();
  simulate->add_option("--orders", sim.orders, "Comma-separated model orders");
  simulate->add_option("--realizations", sim.realizations, "Realizations per order")
      ->capture_default_str();
  simulate->add_option("--seed", sim.seed, "64-bit seed")->capture_default_str();
  simulate->add_option("--eta", sim.eta, "Weight in the [1 - eta*MLP] bracket")
      ->capture_default_str();
  simulate->add_option("--floor", sim.floor, "Relative spectral floor")->capture_default_str();
  simulate->add_option("--out", sim.out, "Output directory (default $RESLOSS_OUT or .)");
  simulate->add_option("--threads", sim.threads, "Worker threads (default $RESLOSS_THREADS)");

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Fit a basis model under the entropy-extended loss");
  fit->add_option("--data", fa.data, "CSV with columns x,y")->required();
  fit->add_option("--family", fa.family, "fourier | chebyshev")
      ->check(CLI::IsMember({"fourier", "chebyshev"}))
      ->capture_default_str();
  fit->add_option("--order", fa.order, "Model order M")->required();
  fit->add_option("--eta", fa.eta, "Loss weight eta")->capture_default_str();
  fit->add_option("--floor", fa.floor, "Relative spectral floor")->capture_default_str();
  fit->add_option("--optimizer", fa.optimizer, "simplex | gradient")
      ->check(CLI::IsMember({"simplex", "gradient"}))
      ->capture_default_str();
  fit->add_option("--max-iters", fa.opt.max_iters)->capture_default_str();
  fit->add_option("--tol-abs", fa.opt.tol_abs)->capture_default_str();
  fit->add_option("--tol-rel", fa.opt.tol_rel)->capture_default_str();
  fit->add_option("--x-tol", fa.opt.x_tolerance)->capture_default_str();
  fit->add_option("--initial-scale", fa.opt.initial_scale)->capture_default_str();
  fit->add_option("--restarts", fa.opt.restarts)->capture_default_str();
  fit->add_option("--seed", fa.opt.seed)->capture_default_str();
  fit->add_option("--out", fa.out, "Output directory (default $RESLOSS_OUT or .)");

  std::string residuals_path;
  double le_eta = 1.0, le_floor = 1e-12;
  auto* loss_eval = app.add_subcommand("loss-eval", "Evaluate the loss of a residual column");
  loss_eval->add_option("--residuals", residuals_path, "Single-column CSV")->required();
  loss_eval->add_option("--eta", le_eta)->capture_default_str();
  loss_eval->add_option("--floor", le_floor)->capture_default_str();

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  if (args.empty()) argv.push_back("resloss");
  for (const auto& s : args) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  }

  try {
    if (*simulate) return cmd_simulate(sim, err);
    if (*fit) return cmd_fit(fa, err);
    if (*loss_eval) return cmd_loss_eval(residuals_path, le_eta, le_floor, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const OverdeterminedBasisError& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kNumericalError;
  }
  return kUsageError;
}

}  // namespace resloss::cli
