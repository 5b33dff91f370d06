#pragma once

#include <Eigen/Dense>
#include <vector>

#include "riccati/errors.hpp"

namespace riccati {

// Tolerances shared by the QP kernel and its consumers.
inline constexpr double kFeasibilityTol = 1e-12;   // simplex membership
inline constexpr double kKktTol = 1e-9;            // first-order optimality
inline constexpr double kActiveWeightTol = 1e-10;  // weight treated as zero

/// Admissible weight sets: the full-investment simplex {theta >= 0,
/// 1'theta = 1} or its relaxation {theta >= 0, 1'theta <= 1} that also
/// admits an uninvested cash position.
enum class ConstraintSet { Simplex, MertonSimplex };

/// Expected returns and return covariance defining a portfolio market.
///
/// The covariance must be symmetric (within 1e-12, symmetrized on
/// construction) and strictly positive definite; otherwise construction
/// throws InvalidParams / SingularModel.
class MarketModel {
 public:
  MarketModel(Eigen::VectorXd mu, Eigen::MatrixXd sigma);

  const Eigen::VectorXd& mu() const { return mu_; }
  const Eigen::MatrixXd& sigma() const { return sigma_; }
  int n() const { return static_cast<int>(mu_.size()); }

 private:
  Eigen::VectorXd mu_;
  Eigen::MatrixXd sigma_;
};

/// Optimum of the parametric program
///   alpha(phi) = min_theta  -mu'theta + (phi/2) theta'Sigma theta
/// over the chosen constraint set.
struct QpSolution {
  Eigen::VectorXd theta;        // optimal weights
  double value = 0.0;           // alpha(phi)
  double derivative = 0.0;      // alpha'(phi) = theta'Sigma theta / 2
  std::vector<int> active_set;  // sorted 0-based indices with theta_i = 0
  double multiplier = 0.0;      // Lagrange multiplier of the budget constraint
};

/// Closed-form data of the equality-constrained subproblem with a fixed
/// set of assets pinned to zero: on its validity interval the minimizer is
/// affine in 1/phi, theta(phi) = theta_a - theta_b/phi, and the value is
/// the rational function a*phi - b/phi + c.
struct ReducedCoefficients {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  Eigen::VectorXd theta_a;
  Eigen::VectorXd theta_b;
  bool budget_active = true;  // false only for a slack Merton budget
};

/// Solves the parametric QP at a single phi > 0 by a primal active-set
/// method seeded at the barycenter. Deterministic: ties are broken by
/// smallest index. Throws NonPositivePhi / SingularModel.
QpSolution solve_qp(const MarketModel& model, double phi,
                    ConstraintSet constraints = ConstraintSet::Simplex);

/// Solves the reduced equality-constrained problem with the given assets
/// pinned to zero (budget enforced as equality). Inequality feasibility of
/// the result is NOT checked; callers verify it themselves.
QpSolution solve_qp_active_set_direct(const MarketModel& model, double phi,
                                      const std::vector<int>& active_set);

/// Coefficients of the reduced problem for a given pinned set. With
/// budget_active = false the budget constraint is dropped entirely
/// (slack Merton budget), which gives theta_a = 0 and a = c = 0.
ReducedCoefficients reduced_coefficients(const MarketModel& model,
                                         const std::vector<int>& active_set,
                                         bool budget_active = true);

}  // namespace riccati
