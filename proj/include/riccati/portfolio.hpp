#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "riccati/alpha_function.hpp"
#include "riccati/pde_solver.hpp"
#include "riccati/qp_kernel.hpp"

namespace riccati {

/// Ingested asset price history: strictly increasing dates, positive
/// prices, no gaps.
struct PriceHistory {
  std::vector<std::string> tickers;
  std::vector<std::string> dates;
  Eigen::MatrixXd prices;  // rows = dates, cols = assets
};

/// Reads a price CSV with header row `date,<ticker>...`, ISO dates and
/// decimal prices. Rows with missing cells are rejected.
PriceHistory load_price_csv(const std::string& path);

/// Reads a model CSV: first row mu, following n rows the covariance.
MarketModel load_model_csv(const std::string& path);

/// Annualized sample moments from per-period log-returns ln(P_{t+1}/P_t):
/// sample mean and unbiased covariance, both scaled by periods_per_year.
/// Throws InsufficientData / NonPositivePrice; a degenerate covariance
/// surfaces as SingularModel from the MarketModel constructor.
MarketModel estimate_moments(const PriceHistory& history,
                             int periods_per_year);

/// Terminal condition of the constant-absolute-risk-aversion utility
/// U(x) = -exp(-(a-1)x)/(a-1): the constant function x -> a. Requires
/// a > 1 (InvalidRiskAversion otherwise).
std::function<double(double)> cara_terminal(double a);

/// Optimal weights theta(x,t) = theta_hat(phi(x,t)) on the stored time
/// slices of a solved field, with the active set per grid point.
struct StrategySurface {
  std::vector<double> x;     // grid nodes
  std::vector<double> y;     // e^x view of the same nodes
  std::vector<double> t;     // backward time per slice
  std::vector<double> tau;   // forward time per slice
  int n_assets = 0;
  std::vector<double> weights;  // [slice][node][asset], slice-major
  std::vector<std::vector<int>> active_sets;  // per slice*nodes + node

  int slices() const { return static_cast<int>(t.size()); }
  int nodes() const { return static_cast<int>(x.size()); }
  double weight(int slice, int node, int asset) const {
    return weights[(static_cast<std::size_t>(slice) * x.size() + node) *
                       n_assets +
                   asset];
  }
  const std::vector<int>& active_set(int slice, int node) const {
    return active_sets[static_cast<std::size_t>(slice) * x.size() + node];
  }
};

/// Extracts the strategy surface from a solved field. When alpha is given
/// and phi lies inside its covered domain the per-piece affine form is
/// used; otherwise each point falls back to solve_qp. layer_stride thins
/// the stored time slices (the final layer is always kept). Throws
/// NonPositivePhi.
StrategySurface extract_strategy(const PhiField& phi, const MarketModel& model,
                                 ConstraintSet constraints, double horizon,
                                 const PiecewiseAlpha* alpha = nullptr,
                                 int layer_stride = 1);

/// End-to-end configuration of the allocation pipeline.
struct PipelineConfig {
  std::optional<std::string> prices_path;
  std::optional<std::string> model_path;
  std::optional<MarketModel> model;  // direct injection
  int periods_per_year = 252;

  double risk_aversion = 9.0;  // CARA coefficient a
  double epsilon = 1.0;
  double r = 0.0;
  double horizon = 10.0;
  double y_lo = 0.01;
  double y_hi = 10.0;
  double h = 0.1;
  double k_coef = 0.1;  // k = k_coef * h^k_power
  int k_power = 2;
  Scheme scheme = Scheme::FullyImplicit;
  double tol = 1e-9;
  int max_iters = 100;
  ConstraintSet constraints = ConstraintSet::Simplex;
  double alpha_phi_min = 1e-3;
  BoundaryCondition left_bc = BoundaryCondition::robin(1.0);
  BoundaryCondition right_bc = BoundaryCondition::neumann();
  int strategy_stride = 0;  // <= 0 selects about 200 slices automatically
};

struct PipelineResult {
  MarketModel model;
  PiecewiseAlpha alpha;
  PhiField phi;
  StrategySurface strategy;
  SolveStats stats;
  double resolved_h = 0.0;
  double resolved_k = 0.0;
  int n_interior = 0;
  int m_steps = 0;
  double x_lo = 0.0;
  double x_hi = 0.0;
  std::vector<std::string> warnings;
};

/// estimate/load -> build alpha on (alpha_phi_min, a] -> solve the PDE ->
/// extract the strategy. Stage failures are rethrown with a stage label.
PipelineResult run_pipeline(const PipelineConfig& config);

}  // namespace riccati
