#include "riccati/portfolio.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "riccati/csv.hpp"

namespace riccati {

namespace {

template <typename Fn>
auto run_stage(const std::string& label, Fn&& fn) -> decltype(fn()) {
  auto tag = [&](const char* what) { return label + ": " + what; };
  try {
    return fn();
  } catch (const NoConvergence& e) {
    throw NoConvergence(tag(e.what()));
  } catch (const NonPositivePhi& e) {
    throw NonPositivePhi(tag(e.what()));
  } catch (const ZeroPivot& e) {
    throw ZeroPivot(tag(e.what()));
  } catch (const SingularModel& e) {
    throw SingularModel(tag(e.what()));
  } catch (const InsufficientData& e) {
    throw InsufficientData(tag(e.what()));
  } catch (const NonPositivePrice& e) {
    throw NonPositivePrice(tag(e.what()));
  } catch (const InvalidRiskAversion& e) {
    throw InvalidRiskAversion(tag(e.what()));
  } catch (const InvalidParams& e) {
    throw InvalidParams(tag(e.what()));
  } catch (const OutOfDomain& e) {
    throw OutOfDomain(tag(e.what()));
  } catch (const ConfigError& e) {
    throw ConfigError(tag(e.what()));
  } catch (const Error& e) {
    throw Error(tag(e.what()));
  }
}

}  // namespace

PriceHistory load_price_csv(const std::string& path) {
  const std::vector<std::string> lines = csv::read_lines(path);
  if (lines.size() < 2) throw InsufficientData("price file has no data rows");
  PriceHistory hist;
  const std::vector<std::string> header = csv::split_line(lines[0]);
  if (header.size() < 2 || header[0] != "date")
    throw ConfigError("price header must be date,<ticker>,...");
  hist.tickers.assign(header.begin() + 1, header.end());
  const int n = static_cast<int>(hist.tickers.size());

  const int rows = static_cast<int>(lines.size()) - 1;
  hist.prices.resize(rows, n);
  hist.dates.resize(rows);
  for (int r = 0; r < rows; ++r) {
    const std::vector<std::string> fields = csv::split_line(lines[r + 1]);
    if (static_cast<int>(fields.size()) != n + 1)
      throw InvalidParams("price row " + std::to_string(r + 1) +
                          " has missing cells");
    hist.dates[r] = fields[0];
    if (r > 0 && !(hist.dates[r - 1] < hist.dates[r]))
      throw InvalidParams("dates must strictly increase at row " +
                          std::to_string(r + 1));
    for (int j = 0; j < n; ++j) {
      const double p =
          csv::parse_double(fields[j + 1], "price row " + std::to_string(r + 1));
      if (!(p > 0.0))
        throw NonPositivePrice("non-positive price at row " +
                               std::to_string(r + 1));
      hist.prices(r, j) = p;
    }
  }
  return hist;
}

MarketModel load_model_csv(const std::string& path) {
  const std::vector<std::string> lines = csv::read_lines(path);
  if (lines.empty()) throw ConfigError("model file is empty: " + path);
  const std::vector<std::string> mu_fields = csv::split_line(lines[0]);
  const int n = static_cast<int>(mu_fields.size());
  if (static_cast<int>(lines.size()) != n + 1)
    throw ConfigError("model file needs 1 + n rows (mu then sigma)");
  Eigen::VectorXd mu(n);
  for (int j = 0; j < n; ++j) mu(j) = csv::parse_double(mu_fields[j], "mu row");
  Eigen::MatrixXd sigma(n, n);
  for (int i = 0; i < n; ++i) {
    const std::vector<std::string> row = csv::split_line(lines[i + 1]);
    if (static_cast<int>(row.size()) != n)
      throw ConfigError("sigma row " + std::to_string(i + 1) +
                        " must have n entries");
    for (int j = 0; j < n; ++j)
      sigma(i, j) =
          csv::parse_double(row[j], "sigma row " + std::to_string(i + 1));
  }
  return MarketModel(std::move(mu), std::move(sigma));
}

MarketModel estimate_moments(const PriceHistory& history,
                             int periods_per_year) {
  const int rows = static_cast<int>(history.prices.rows());
  const int n = static_cast<int>(history.prices.cols());
  if (rows < 3) throw InsufficientData("need at least three observations");
  if (periods_per_year < 1)
    throw InvalidParams("periods_per_year must be positive");
  if ((history.prices.array() <= 0.0).any())
    throw NonPositivePrice("price history has non-positive entries");

  const int count = rows - 1;
  Eigen::MatrixXd returns(count, n);
  for (int t = 0; t < count; ++t)
    for (int j = 0; j < n; ++j)
      returns(t, j) =
          std::log(history.prices(t + 1, j) / history.prices(t, j));

  const Eigen::RowVectorXd mean = returns.colwise().mean();
  const Eigen::MatrixXd centered = returns.rowwise() - mean;
  Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(count - 1);

  const double ppy = static_cast<double>(periods_per_year);
  return MarketModel(mean.transpose() * ppy, cov * ppy);
}

std::function<double(double)> cara_terminal(double a) {
  if (!(a > 1.0))
    throw InvalidRiskAversion("CARA coefficient must exceed 1, got " +
                              std::to_string(a));
  return [a](double) { return a; };
}

StrategySurface extract_strategy(const PhiField& phi, const MarketModel& model,
                                 ConstraintSet constraints, double horizon,
                                 const PiecewiseAlpha* alpha,
                                 int layer_stride) {
  if (layer_stride < 1) layer_stride = 1;
  const int nodes = phi.nodes();
  const int n = model.n();

  StrategySurface surf;
  surf.n_assets = n;
  surf.x = phi.grid();
  surf.y.resize(nodes);
  for (int i = 0; i < nodes; ++i) surf.y[i] = std::exp(surf.x[i]);

  std::vector<int> slices;
  for (int j = 0; j < phi.layers(); j += layer_stride) slices.push_back(j);
  if (slices.back() != phi.layers() - 1) slices.push_back(phi.layers() - 1);

  surf.weights.reserve(slices.size() * nodes * n);
  surf.active_sets.reserve(slices.size() * nodes);
  for (int j : slices) {
    const double tau = phi.times()[j];
    surf.tau.push_back(tau);
    surf.t.push_back(horizon - tau);
    for (int i = 0; i < nodes; ++i) {
      const double value = phi(j, i);
      if (!(value > 0.0))
        throw NonPositivePhi("phi must be positive to extract a strategy");
      Eigen::VectorXd theta;
      std::vector<int> active;
      if (alpha != nullptr && value > alpha->phi_min() &&
          value <= alpha->phi_max()) {
        const AlphaPiece& piece = alpha->piece_at(value);
        theta = piece.theta(value);
        active = piece.active_set;
      } else {
        const QpSolution sol = solve_qp(model, value, constraints);
        theta = sol.theta;
        active = sol.active_set;
      }
      for (int asset = 0; asset < n; ++asset)
        surf.weights.push_back(theta(asset));
      surf.active_sets.push_back(std::move(active));
    }
  }
  return surf;
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  std::vector<std::string> warnings;

  MarketModel model = run_stage("estimate", [&]() -> MarketModel {
    if (config.model.has_value()) return *config.model;
    if (config.model_path.has_value()) return load_model_csv(*config.model_path);
    if (config.prices_path.has_value())
      return estimate_moments(load_price_csv(*config.prices_path),
                              config.periods_per_year);
    throw ConfigError("pipeline needs prices, a model file, or a model");
  });

  const auto terminal = run_stage(
      "terminal", [&]() { return cara_terminal(config.risk_aversion); });
  const double phi_plus = config.risk_aversion;

  PiecewiseAlpha alpha = run_stage("alpha", [&]() {
    return build_piecewise_alpha(model, config.alpha_phi_min, phi_plus,
                                 config.constraints);
  });

  if (!(config.y_lo > 0.0) || !(config.y_lo < config.y_hi))
    throw ConfigError("pipeline needs 0 < y_lo < y_hi");
  const double x_lo = std::log(config.y_lo);
  const double x_hi = std::log(config.y_hi);
  const int cells =
      std::max(3, static_cast<int>(std::llround((x_hi - x_lo) / config.h)));
  const int n_interior = cells - 1;
  const double h = (x_hi - x_lo) / cells;
  const double k_nominal =
      config.k_power == 2 ? config.k_coef * h * h : config.k_coef * h;
  const int m_steps =
      std::max(1, static_cast<int>(std::llround(config.horizon / k_nominal)));

  PdeProblem problem{config.epsilon, config.r,      x_lo,
                     x_hi,           n_interior,    m_steps,
                     config.horizon, terminal,      config.left_bc,
                     config.right_bc, alpha};

  SolveStats stats;
  PhiField phi = run_stage("solve", [&]() {
    SolveOptions options;
    options.scheme = config.scheme;
    options.tol = config.tol;
    options.max_iters = config.max_iters;
    return solve_pde(problem, options, &stats);
  });
  if (stats.clamps.below_domain > 0)
    warnings.push_back("alpha evaluated below its domain " +
                       std::to_string(stats.clamps.below_domain) +
                       " times (worst phi " +
                       std::to_string(stats.clamps.worst_low) + ")");
  if (stats.clamps.above_domain > 0)
    warnings.push_back("alpha evaluated above its domain " +
                       std::to_string(stats.clamps.above_domain) +
                       " times (worst overshoot " +
                       std::to_string(stats.clamps.worst_high) + ")");

  StrategySurface strategy = run_stage("strategy", [&]() {
    int stride = config.strategy_stride;
    if (stride <= 0)
      stride = std::max(1, (phi.layers() + 199) / 200);
    return extract_strategy(phi, model, config.constraints, config.horizon,
                            &alpha, stride);
  });

  return PipelineResult{std::move(model),
                        std::move(alpha),
                        std::move(phi),
                        std::move(strategy),
                        std::move(stats),
                        h,
                        problem.horizon / m_steps,
                        n_interior,
                        m_steps,
                        x_lo,
                        x_hi,
                        std::move(warnings)};
}

}  // namespace riccati
