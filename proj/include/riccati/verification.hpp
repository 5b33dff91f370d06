#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "riccati/pde_solver.hpp"
#include "riccati/traveling_wave.hpp"

namespace riccati {

/// Discrete error norms of a solved field against an exact surface given
/// in forward time, exact(x, tau).
///
/// Per layer, over interior cells: ||e||_L2 = sqrt(h * sum_i e_i^2) and
/// the W12 norm adds the forward-difference derivative term,
/// ||e||_W12 = ||e||_L2 + sqrt(h * sum_i ((e_{i+1}-e_i)/h)^2).
/// Across layers: linf_l2 = max_j ||e^j||_L2 and
/// l2_w12 = sqrt(k * sum_{j>=1} ||e^j||_W12^2).
struct ErrorNorms {
  double linf_l2 = 0.0;
  double l2_w12 = 0.0;
};

ErrorNorms discrete_norms(const PhiField& numeric,
                          const std::function<double(double, double)>& exact);

/// One refinement level of a convergence study. EOC entries are present
/// only when a coarser level exists and both errors are positive.
struct ErrorReport {
  double h = 0.0;
  double k = 0.0;
  double err_linf_l2 = 0.0;
  double err_l2_w12 = 0.0;
  std::optional<double> eoc_linf;
  std::optional<double> eoc_l2;
};

/// Time-step binding rule k = coef * h^power with power in {1, 2}.
struct KRule {
  double coef = 0.1;
  int power = 1;

  double k_for(double h) const;
  std::string str() const;
  /// Parses "<coef>*h" or "<coef>*h^2". Throws ConfigError.
  static KRule parse(const std::string& text);
};

/// Problem family for the benchmark study: the traveling wave provides
/// Dirichlet data on both ends and the exact reference surface.
struct EocConfig {
  double x_lo = -4.0;
  double x_hi = 4.0;
  double horizon = 10.0;
  Scheme scheme = Scheme::FullyImplicit;
  double tol = 1e-9;
  int max_iters = 100;
};

/// Runs solve_pde per refinement level h (strictly decreasing, at least
/// two) with the k binding rule, computes both norms against the shared
/// benchmark, and the successive orders of convergence.
std::vector<ErrorReport> eoc_study(const WaveBenchmark& benchmark,
                                   const EocConfig& config, const KRule& rule,
                                   const std::vector<double>& levels,
                                   SolveStats* stats = nullptr);

/// Builds the PdeProblem of one benchmark level (exposed for reuse by the
/// scheme-agreement checks).
PdeProblem benchmark_problem(const WaveBenchmark& benchmark,
                             const EocConfig& config, double h, double k);

}  // namespace riccati
