#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "riccati/alpha_function.hpp"
#include "riccati/errors.hpp"

namespace riccati {

/// Boundary treatment at one end of the computational domain. The ghost
/// node obeys phi_ghost = L * g(tau) + M * phi_inner with
///   Dirichlet: L = 1, M = 0 (g prescribed),
///   Robin (dphi/dx = d*phi): L = 0, M = 1/(1 + d*h),
///   Neumann: Robin with d = 0, so M = 1.
struct BoundaryCondition {
  enum class Kind { Dirichlet, Robin, Neumann };

  Kind kind = Kind::Neumann;
  std::function<double(double)> value;  // Dirichlet data g(tau)
  double d = 0.0;                       // Robin coefficient

  static BoundaryCondition dirichlet(std::function<double(double)> g);
  static BoundaryCondition dirichlet_const(double g);
  static BoundaryCondition robin(double d);
  static BoundaryCondition neumann();

  double ghost_weight_boundary() const {  // L
    return kind == Kind::Dirichlet ? 1.0 : 0.0;
  }
  double ghost_weight_inner(double h) const;  // M
  double boundary_value(double tau) const;    // g(tau), 0 unless Dirichlet
};

/// General-form flux coefficients of
///   d_tau phi = d_xx A(phi,x,tau) + d_x B(phi,x,tau) + C(phi,x,tau)
/// together with the face ingredients D = dA/dphi and E = dA/dx.
struct FluxTerms {
  std::function<double(double, double, double)> A;
  std::function<double(double, double, double)> dA_dphi;  // D at faces
  std::function<double(double, double, double)> dA_dx;    // E at faces
  std::function<double(double, double, double)> B;        // F at faces
  std::function<double(double, double, double)> C;
};

/// Counters for value-function evaluations that had to be clamped into the
/// covered alpha domain. A below-domain clamp of a non-positive iterate
/// value is tolerated inside a micro-iteration only; converged layers must
/// be positive.
struct ClampStats {
  long below_domain = 0;
  long above_domain = 0;
  double worst_low = 0.0;   // most negative phi seen
  double worst_high = 0.0;  // largest overshoot above the domain
};

/// Flux terms of the allocation equation: A = alpha(phi),
/// B = (eps*e^-x + r)*phi + alpha(phi)*(1-phi), C = 0. Alpha arguments are
/// clamped into the covered domain; clamps are counted in *stats.
FluxTerms make_model_flux(const PiecewiseAlpha& alpha, double epsilon,
                          double r, ClampStats* stats = nullptr);

/// Backward Cauchy problem restated in forward time tau = T - t on the
/// cell-centered grid x_i = x_lo + i*h, i = 0..n+1, h = (x_hi-x_lo)/(n+1).
struct PdeProblem {
  double epsilon = 0.0;
  double r = 0.0;
  double x_lo = 0.0;
  double x_hi = 0.0;
  int n_interior = 0;
  int m_steps = 0;
  double horizon = 0.0;  // T
  std::function<double(double)> terminal;
  BoundaryCondition left_bc;
  BoundaryCondition right_bc;
  PiecewiseAlpha alpha;

  double h() const { return (x_hi - x_lo) / (n_interior + 1); }
  double k() const { return horizon / m_steps; }
  double cell_center(int i) const { return x_lo + i * h(); }
};

/// Solved surface phi(x, tau) on the full node set (ghosts included).
/// Layer 0 is the terminal condition; rows advance in forward time tau.
class PhiField {
 public:
  PhiField(std::vector<double> grid, std::vector<double> times,
           std::vector<double> values);

  int layers() const { return static_cast<int>(times_.size()); }
  int nodes() const { return static_cast<int>(grid_.size()); }
  double operator()(int layer, int node) const {
    return values_[static_cast<std::size_t>(layer) * grid_.size() + node];
  }
  std::span<const double> layer(int j) const {
    return {values_.data() + static_cast<std::size_t>(j) * grid_.size(),
            grid_.size()};
  }
  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& times() const { return times_; }

 private:
  std::vector<double> grid_;
  std::vector<double> times_;
  std::vector<double> values_;  // layer-major
};

enum class Scheme { SemiImplicit, FullyImplicit };

struct SolveOptions {
  Scheme scheme = Scheme::FullyImplicit;
  double tol = 1e-9;   // L-inf stop for the micro-iterations
  int max_iters = 100; // per time step
};

struct SolveStats {
  std::vector<int> iters_per_step;
  int max_iters_used = 0;
  long total_iters = 0;
  double min_diag_dominance = 0.0;  // min over rows of diag - |lo| - |up|
  ClampStats clamps;
};

/// Thomas elimination for a tridiagonal system. Vectors share length n;
/// lower[0] and upper[n-1] are ignored. Throws ZeroPivot when elimination
/// meets a pivot below 1e-14 in magnitude.
std::vector<double> thomas_solve(std::span<const double> lower,
                                 std::span<const double> diag,
                                 std::span<const double> upper,
                                 std::span<const double> rhs);

/// One semi-implicit step: coefficients frozen at the given layer, face
/// gradients at the new layer, one tridiagonal solve. layer_j must carry
/// consistent ghost values; the result has ghosts re-applied at tau_next.
std::vector<double> step_semi_implicit(const PdeProblem& problem,
                                       std::span<const double> layer_j,
                                       double tau_next);

/// One fully-implicit step resolved by micro-iterations (all nonlinear
/// terms lagged to the previous iterate on the new layer). Returns the
/// converged layer and the iteration count; throws NoConvergence.
std::pair<std::vector<double>, int> step_fully_implicit(
    const PdeProblem& problem, std::span<const double> layer_j,
    double tau_next, double tol = 1e-9, int max_iters = 100);

/// Marches m_steps layers forward in tau and stores them all. Asserts the
/// comparison-principle bounds 0 < phi <= phi_plus + 1e-6 on every layer,
/// where phi_plus majorizes the terminal and Dirichlet data.
PhiField solve_pde(const PdeProblem& problem, const SolveOptions& options = {},
                   SolveStats* stats = nullptr);

}  // namespace riccati
