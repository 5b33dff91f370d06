#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "riccati/qp_kernel.hpp"

namespace riccati {

/// One interval of constant active set. On (lo, hi] the value function is
/// the rational alpha(phi) = a*phi - b/phi + c and the minimizer is affine
/// in 1/phi: theta(phi) = theta_a - theta_b/phi (zeros exactly on
/// active_set).
struct AlphaPiece {
  double lo = 0.0;  // open left end
  double hi = 0.0;  // closed right end
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  std::vector<int> active_set;  // sorted 0-based pinned assets
  Eigen::VectorXd theta_a;
  Eigen::VectorXd theta_b;
  bool budget_active = true;  // false only for slack Merton-budget pieces

  double alpha(double phi) const { return a * phi - b / phi + c; }
  double alpha_prime(double phi) const { return a + b / (phi * phi); }
  Eigen::VectorXd theta(double phi) const { return theta_a - theta_b / phi; }
};

/// Exact piecewise-rational representation of the QP value function on a
/// covered domain (phi_min, phi_max]. Pieces tile the domain; breakpoints
/// are the interior piece boundaries where the active set changes.
///
/// Immutable after construction and safe to share across threads.
class PiecewiseAlpha {
 public:
  explicit PiecewiseAlpha(std::vector<AlphaPiece> pieces);

  /// (alpha, alpha') at phi. The piece is found by binary search; a phi
  /// exactly at a breakpoint belongs to the left piece. Throws OutOfDomain.
  std::pair<double, double> eval(double phi) const;

  /// Inverse of the strictly increasing alpha: the phi with alpha(phi) = z
  /// within 1e-12, via the positive root of a*phi^2 + (c-z)*phi - b = 0 on
  /// the bracketing piece. Throws OutOfRange.
  double inverse(double z) const;

  /// Minimizer at phi through the per-piece affine form.
  Eigen::VectorXd theta(double phi) const;

  const AlphaPiece& piece_at(double phi) const;
  std::size_t piece_index(double phi) const;

  const std::vector<AlphaPiece>& pieces() const { return pieces_; }
  std::vector<double> breakpoints() const;
  double phi_min() const { return pieces_.front().lo; }
  double phi_max() const { return pieces_.back().hi; }

 private:
  std::vector<AlphaPiece> pieces_;
  std::vector<double> alpha_at_hi_;  // cumulative values for the inverse
};

/// Builds the exact piecewise representation over (phi_min, phi_max] by
/// scanning for active-set changes (initial step (phi_max-phi_min)/1024)
/// and bisecting each change to absolute resolution 1e-8. Every piece is
/// validated against solve_qp at interior points and re-scanned on
/// mismatch. Throws EmptyRange / NonPositivePhi.
PiecewiseAlpha build_piecewise_alpha(
    const MarketModel& model, double phi_min, double phi_max,
    ConstraintSet constraints = ConstraintSet::Simplex);

/// Stock/bond closed form. Mean returns mu_s >= mu_b >= 0, volatilities
/// sigma_s, sigma_b > 0, correlation rho in [-1,1] with
/// sigma_b - rho*sigma_s >= 0.
struct TwoAssetParams {
  double mu_s = 0.0;
  double mu_b = 0.0;
  double sigma_s = 0.0;
  double sigma_b = 0.0;
  double rho = 0.0;
};

struct TwoAssetResult {
  double alpha = 0.0;
  double theta_stock = 0.0;  // min{omega/phi + delta/gamma, 1}
};

/// Evaluates the two-asset value function directly from the closed form.
/// Throws InvalidParams on violated preconditions.
TwoAssetResult alpha_two_asset(const TwoAssetParams& params, double phi);

}  // namespace riccati
