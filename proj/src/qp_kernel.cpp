#include "riccati/qp_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace riccati {

namespace {

// Solves the strictly convex subproblem restricted to the free assets,
// optionally without the budget equality. Returns the full-length affine
// representation theta(phi) = theta_a - theta_b/phi together with the
// value coefficients; throws SingularModel if the principal submatrix of
// Sigma fails to factor with strictly positive pivots.
ReducedCoefficients reduce(const MarketModel& model,
                           const std::vector<bool>& pinned,
                           bool budget_active) {
  const int n = model.n();
  std::vector<int> free_idx;
  free_idx.reserve(n);
  for (int i = 0; i < n; ++i)
    if (!pinned[i]) free_idx.push_back(i);
  const int nf = static_cast<int>(free_idx.size());
  if (nf == 0 && budget_active)
    throw InvalidParams("reduced problem has no free asset");

  ReducedCoefficients rc;
  rc.budget_active = budget_active;
  rc.theta_a = Eigen::VectorXd::Zero(n);
  rc.theta_b = Eigen::VectorXd::Zero(n);
  if (nf == 0) return rc;  // Merton: everything pinned, theta = 0

  Eigen::MatrixXd sig(nf, nf);
  Eigen::VectorXd mu(nf);
  for (int p = 0; p < nf; ++p) {
    mu(p) = model.mu()(free_idx[p]);
    for (int q = 0; q < nf; ++q)
      sig(p, q) = model.sigma()(free_idx[p], free_idx[q]);
  }

  Eigen::LDLT<Eigen::MatrixXd> ldlt(sig);
  if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0)
    throw SingularModel("principal submatrix of sigma is not positive definite");

  const Eigen::VectorXd y1 = ldlt.solve(Eigen::VectorXd::Ones(nf));
  const Eigen::VectorXd y2 = ldlt.solve(mu);
  const double inv_quad_ones = y1.sum();      // 1'Sigma^-1 1
  const double cross = y2.sum();              // 1'Sigma^-1 mu
  const double inv_quad_mu = mu.dot(y2);      // mu'Sigma^-1 mu

  if (budget_active) {
    if (inv_quad_ones <= 0.0)
      throw SingularModel("1'Sigma^-1 1 must be positive");
    rc.a = 0.5 / inv_quad_ones;
    rc.b = 0.5 * inv_quad_mu - 0.5 * cross * cross / inv_quad_ones;
    rc.c = -cross / inv_quad_ones;
    // b >= 0 by Cauchy-Schwarz; clip the roundoff tail.
    if (rc.b < 0.0 && rc.b > -1e-14) rc.b = 0.0;
    for (int p = 0; p < nf; ++p) {
      rc.theta_a(free_idx[p]) = y1(p) / inv_quad_ones;
      rc.theta_b(free_idx[p]) = (cross / inv_quad_ones) * y1(p) - y2(p);
    }
  } else {
    // Slack budget: unconstrained minimum over the free assets.
    rc.a = 0.0;
    rc.b = 0.5 * inv_quad_mu;
    rc.c = 0.0;
    for (int p = 0; p < nf; ++p) rc.theta_b(free_idx[p]) = -y2(p);
  }
  return rc;
}

double objective(const MarketModel& model, double phi,
                 const Eigen::VectorXd& theta) {
  return -model.mu().dot(theta) +
         0.5 * phi * theta.dot(model.sigma() * theta);
}

// Equality-constrained Lagrange multiplier for the budget row:
// lambda = (phi - 1'Sigma_F^-1 mu_F) / (1'Sigma_F^-1 1_F), zero when the
// budget is slack.
double budget_multiplier(const MarketModel& model,
                         const Eigen::VectorXd& theta, double phi,
                         const std::vector<bool>& pinned) {
  // At the subproblem optimum the gradient is constant over free assets;
  // read lambda off any free component.
  const Eigen::VectorXd grad = phi * (model.sigma() * theta) - model.mu();
  for (int i = 0; i < model.n(); ++i)
    if (!pinned[i]) return grad(i);
  return 0.0;
}

QpSolution finish(const MarketModel& model, double phi, Eigen::VectorXd theta,
                  double lambda) {
  QpSolution sol;
  for (int i = 0; i < model.n(); ++i) {
    if (theta(i) < 0.0 && theta(i) > -kFeasibilityTol) theta(i) = 0.0;
    if (std::abs(theta(i)) <= kActiveWeightTol) {
      theta(i) = std::max(theta(i), 0.0);
      sol.active_set.push_back(i);
    }
  }
  sol.theta = theta;
  sol.value = objective(model, phi, theta);
  sol.derivative = 0.5 * theta.dot(model.sigma() * theta);
  sol.multiplier = lambda;
  return sol;
}

}  // namespace

MarketModel::MarketModel(Eigen::VectorXd mu, Eigen::MatrixXd sigma)
    : mu_(std::move(mu)), sigma_(std::move(sigma)) {
  const int n = static_cast<int>(mu_.size());
  if (n < 1) throw InvalidParams("market model needs at least one asset");
  if (sigma_.rows() != n || sigma_.cols() != n)
    throw InvalidParams("sigma dimensions do not match mu");
  const double asym = (sigma_ - sigma_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12)
    throw InvalidParams("sigma is not symmetric (max asymmetry " +
                        std::to_string(asym) + ")");
  sigma_ = 0.5 * (sigma_ + sigma_.transpose()).eval();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(sigma_);
  if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0)
    throw SingularModel("sigma is not positive definite");
}

ReducedCoefficients reduced_coefficients(const MarketModel& model,
                                         const std::vector<int>& active_set,
                                         bool budget_active) {
  std::vector<bool> pinned(model.n(), false);
  for (int i : active_set) {
    if (i < 0 || i >= model.n())
      throw InvalidParams("active set index out of range");
    pinned[i] = true;
  }
  return reduce(model, pinned, budget_active);
}

QpSolution solve_qp_active_set_direct(const MarketModel& model, double phi,
                                      const std::vector<int>& active_set) {
  if (static_cast<int>(active_set.size()) > model.n() - 1)
    throw InvalidParams("active set must leave at least one free asset");
  const ReducedCoefficients rc = reduced_coefficients(model, active_set, true);
  const Eigen::VectorXd theta = rc.theta_a - rc.theta_b / phi;
  std::vector<bool> pinned(model.n(), false);
  for (int i : active_set) pinned[i] = true;
  return finish(model, phi, theta, budget_multiplier(model, theta, phi, pinned));
}

QpSolution solve_qp(const MarketModel& model, double phi,
                    ConstraintSet constraints) {
  if (!(phi > 0.0)) throw NonPositivePhi("phi must be positive");
  const int n = model.n();
  const bool merton = constraints == ConstraintSet::MertonSimplex;

  Eigen::VectorXd theta = Eigen::VectorXd::Constant(n, 1.0 / n);
  std::vector<bool> pinned(n, false);
  bool budget_in_working = true;  // tight at the barycenter seed

  const int max_iter = 100 + 20 * n;
  for (int iter = 0; iter < max_iter; ++iter) {
    const ReducedCoefficients rc = reduce(model, pinned, budget_in_working);
    const Eigen::VectorXd candidate = rc.theta_a - rc.theta_b / phi;

    const double move = (candidate - theta).lpNorm<Eigen::Infinity>();
    if (move <= 1e-14 * (1.0 + theta.lpNorm<Eigen::Infinity>())) {
      // Stationary on the current working set: check multipliers.
      const double lambda =
          budget_in_working ? budget_multiplier(model, theta, phi, pinned) : 0.0;
      if (merton && budget_in_working && lambda > kKktTol) {
        // Budget multiplier has the wrong sign for an inequality: release.
        budget_in_working = false;
        continue;
      }
      const Eigen::VectorXd grad = phi * (model.sigma() * theta) - model.mu();
      int drop = -1;
      double worst = -kKktTol;
      for (int i = 0; i < n; ++i) {
        if (!pinned[i]) continue;
        const double eta = grad(i) - lambda;
        if (eta < worst) {  // strict: ties keep the smallest index
          worst = eta;
          drop = i;
        }
      }
      if (drop < 0) return finish(model, phi, theta, lambda);
      pinned[drop] = false;
      continue;
    }

    // Line search toward the candidate against the constraints outside the
    // working set; smallest blocking index wins ties.
    double beta = 1.0;
    int blocker = -1;       // asset index, or n for the Merton budget
    for (int i = 0; i < n; ++i) {
      if (pinned[i]) continue;
      const double di = candidate(i) - theta(i);
      if (di < -1e-16 && candidate(i) < 0.0) {
        const double bi = theta(i) / (theta(i) - candidate(i));
        if (bi < beta - 1e-15) {
          beta = bi;
          blocker = i;
        }
      }
    }
    if (merton && !budget_in_working) {
      const double s0 = theta.sum();
      const double s1 = candidate.sum();
      if (s1 > 1.0 + kFeasibilityTol && s1 > s0) {
        const double bb = (1.0 - s0) / (s1 - s0);
        if (bb < beta - 1e-15) {
          beta = bb;
          blocker = n;
        }
      }
    }

    theta += beta * (candidate - theta);
    if (blocker == n) {
      budget_in_working = true;
    } else if (blocker >= 0) {
      theta(blocker) = 0.0;
      pinned[blocker] = true;
    }
  }
  throw SingularModel("active-set iteration limit reached");
}

}  // namespace riccati
