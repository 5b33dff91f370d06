#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "riccati/qp_kernel.hpp"
#include "test_util.hpp"

using namespace riccati;
using testutil::dax6_model;
using testutil::random_pd_model;

namespace {

void check_solution_invariants(const MarketModel& m, double phi,
                               const QpSolution& sol, ConstraintSet cs) {
  for (int i = 0; i < m.n(); ++i) CHECK(sol.theta(i) >= -kFeasibilityTol);
  const double total = sol.theta.sum();
  if (cs == ConstraintSet::Simplex)
    CHECK(std::abs(total - 1.0) <= 1e-12);
  else
    CHECK(total <= 1.0 + 1e-12);

  CHECK(std::abs(sol.derivative -
                 0.5 * sol.theta.dot(m.sigma() * sol.theta)) <= 1e-12);

  const Eigen::VectorXd grad = phi * (m.sigma() * sol.theta) - m.mu();
  std::vector<bool> active(m.n(), false);
  for (int i : sol.active_set) active[i] = true;
  for (int i = 0; i < m.n(); ++i) {
    const double residual = grad(i) - sol.multiplier;
    if (active[i])
      CHECK(residual >= -kKktTol);
    else
      CHECK(std::abs(residual) <= kKktTol);
  }
}

}  // namespace

TEST_CASE("market model validation") {
  Eigen::VectorXd mu(2);
  mu << 0.1, 0.2;
  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.2, 0.1, 1.0;
  CHECK_THROWS_AS(MarketModel(mu, asym), InvalidParams);

  Eigen::MatrixXd indef(2, 2);
  indef << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(MarketModel(mu, indef), SingularModel);

  Eigen::MatrixXd psd(2, 2);
  psd << 1.0, 1.0, 1.0, 1.0;  // rank one
  CHECK_THROWS_AS(MarketModel(mu, psd), SingularModel);

  CHECK_THROWS_AS(MarketModel(Eigen::VectorXd(), Eigen::MatrixXd()),
                  InvalidParams);
}

TEST_CASE("identity model: symmetry forces the barycenter") {
  MarketModel m(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3));
  const QpSolution sol = solve_qp(m, 2.0);
  for (int i = 0; i < 3; ++i)
    CHECK(sol.theta(i) == doctest::Approx(1.0 / 3).epsilon(1e-14));
  CHECK(sol.value == doctest::Approx(1.0 / 3).epsilon(1e-14));
  CHECK(sol.derivative == doctest::Approx(1.0 / 6).epsilon(1e-14));
  CHECK(sol.active_set.empty());
  check_solution_invariants(m, 2.0, sol, ConstraintSet::Simplex);
}

TEST_CASE("small phi drives the corner solution") {
  Eigen::VectorXd mu(2);
  mu << 1.0, 0.0;
  MarketModel m(mu, Eigen::MatrixXd::Identity(2, 2));
  const QpSolution sol = solve_qp(m, 0.1);
  CHECK(sol.theta(0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(sol.theta(1) == doctest::Approx(0.0).scale(1.0));
  CHECK(sol.value == doctest::Approx(-0.95).epsilon(1e-14));
  CHECK(sol.active_set == std::vector<int>{1});

  // Brute force over the one-dimensional simplex confirms the corner.
  double best = 1e300;
  double best_theta = -1;
  for (int k = 0; k <= 100000; ++k) {
    const double t = k * 1e-5;
    Eigen::VectorXd theta(2);
    theta << t, 1.0 - t;
    const double f = testutil::objective(m, 0.1, theta);
    if (f < best) {
      best = f;
      best_theta = t;
    }
  }
  CHECK(best_theta == doctest::Approx(1.0));
  CHECK(sol.value <= best + 1e-12);
}

TEST_CASE("six-asset model concentrates on the highest return at low phi") {
  const MarketModel m = dax6_model();
  const QpSolution sol = solve_qp(m, 0.1);
  CHECK(sol.theta(0) == doctest::Approx(1.0).epsilon(1e-12));  // Merck
  CHECK(sol.active_set == std::vector<int>{1, 2, 3, 4, 5});
  check_solution_invariants(m, 0.1, sol, ConstraintSet::Simplex);
}

TEST_CASE("merton constraint keeps full investment when returns dominate") {
  Eigen::VectorXd mu(2);
  mu << 1.0, 0.0;
  MarketModel m(mu, Eigen::MatrixXd::Identity(2, 2));
  const QpSolution sol = solve_qp(m, 0.1, ConstraintSet::MertonSimplex);
  CHECK(sol.theta(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sol.theta(1) == doctest::Approx(0.0).scale(1.0));
  check_solution_invariants(m, 0.1, sol, ConstraintSet::MertonSimplex);

  // Grid search over 0 <= t1 + t2 <= 1 agrees.
  double best = 1e300;
  Eigen::VectorXd arg(2);
  for (int i = 0; i <= 400; ++i)
    for (int j = 0; i + j <= 400; ++j) {
      Eigen::VectorXd theta(2);
      theta << i / 400.0, j / 400.0;
      const double f = testutil::objective(m, 0.1, theta);
      if (f < best) {
        best = f;
        arg = theta;
      }
    }
  CHECK(arg(0) == doctest::Approx(1.0));
  CHECK(sol.value <= best + 1e-12);
}

TEST_CASE("merton with zero returns retreats to cash") {
  MarketModel m(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3));
  const QpSolution sol = solve_qp(m, 5.0, ConstraintSet::MertonSimplex);
  CHECK(sol.theta.norm() == doctest::Approx(0.0).scale(1.0));
  CHECK(sol.value == doctest::Approx(0.0).scale(1.0));
  CHECK(sol.active_set == std::vector<int>{0, 1, 2});
}

TEST_CASE("phi must be positive") {
  MarketModel m(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2));
  CHECK_THROWS_AS(solve_qp(m, 0.0), NonPositivePhi);
  CHECK_THROWS_AS(solve_qp(m, -1.0), NonPositivePhi);
}

TEST_CASE("direct reduced solve: single free asset") {
  MarketModel m(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2));
  for (double phi : {0.5, 2.0, 7.0}) {
    const QpSolution sol = solve_qp_active_set_direct(m, phi, {1});
    CHECK(sol.theta(0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(sol.theta(1) == 0.0);
    CHECK(sol.value == doctest::Approx(phi / 2).epsilon(1e-15));
  }
  CHECK_THROWS_AS(solve_qp_active_set_direct(m, 1.0, {0, 1}), InvalidParams);
}

TEST_CASE("direct reduced solve matches solve_qp on the interior") {
  MarketModel m(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3));
  const QpSolution direct = solve_qp_active_set_direct(m, 2.0, {});
  const QpSolution full = solve_qp(m, 2.0);
  CHECK((direct.theta - full.theta).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(direct.value == full.value);
}

TEST_CASE("direct reduced solve lands exactly on the boundary") {
  Eigen::VectorXd mu(2);
  mu << 1.0, 0.0;
  MarketModel m(mu, Eigen::MatrixXd::Identity(2, 2));
  // theta(phi) = a - b/phi with a = (1/2,1/2), b = (-1/2,1/2): at phi = 1
  // the second weight hits zero exactly.
  const QpSolution sol = solve_qp_active_set_direct(m, 1.0, {});
  CHECK(sol.theta(0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(sol.theta(1) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("random models satisfy feasibility and KKT invariants") {
  std::mt19937_64 rng(20240817);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + int(rng() % 4);
    const MarketModel m = random_pd_model(rng, n);
    const double phi = 0.05 + 10.0 * std::generate_canonical<double, 53>(rng);
    for (ConstraintSet cs :
         {ConstraintSet::Simplex, ConstraintSet::MertonSimplex}) {
      const QpSolution sol = solve_qp(m, phi, cs);
      check_solution_invariants(m, phi, sol, cs);
    }
  }
}

TEST_CASE("value function is strictly increasing in phi") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const MarketModel m = random_pd_model(rng, 2 + int(rng() % 3));
    double prev = solve_qp(m, 0.01).value;
    for (double phi = 0.05; phi < 20.0; phi *= 1.7) {
      const double cur = solve_qp(m, phi).value;
      CHECK(cur > prev);
      prev = cur;
    }
  }
}

TEST_CASE("derivative bounds from the extreme variance portfolios") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + int(rng() % 3);
    const MarketModel m = random_pd_model(rng, n);
    const MarketModel riskonly(Eigen::VectorXd::Zero(n), m.sigma());
    const double lambda_minus = solve_qp(riskonly, 1.0).value;  // min var / 2
    const double lambda_plus = 0.5 * m.sigma().diagonal().maxCoeff();
    for (double phi : {0.1, 1.0, 4.0, 15.0}) {
      const double d = solve_qp(m, phi).derivative;
      CHECK(d >= lambda_minus - 1e-12);
      CHECK(d <= lambda_plus + 1e-12);
    }
  }
}

TEST_CASE("scaling mu and sigma together scales the value") {
  std::mt19937_64 rng(5150);
  const MarketModel m = random_pd_model(rng, 3);
  const double c = 3.7;
  const MarketModel scaled(c * m.mu(), c * m.sigma());
  for (double phi : {0.3, 1.0, 6.0}) {
    const QpSolution base = solve_qp(m, phi);
    const QpSolution big = solve_qp(scaled, phi);
    CHECK((base.theta - big.theta).lpNorm<Eigen::Infinity>() <= 1e-10);
    CHECK(big.value == doctest::Approx(c * base.value).epsilon(1e-12));
  }
}

TEST_CASE("lattice oracle: solve_qp minorizes every lattice point") {
  std::mt19937_64 rng(2718);
  for (int trial = 0; trial < 5; ++trial) {
    const MarketModel m = random_pd_model(rng, 3);
    for (double phi : {0.1, 1.0, 10.0}) {
      // Cross-check the line-min oracle against full enumeration first.
      const double coarse_lines = testutil::lattice_min(m, phi, 60);
      const double coarse_enum = testutil::lattice_min_enumerate(m, phi, 60);
      CHECK(coarse_lines == doctest::Approx(coarse_enum).epsilon(1e-13));

      const double lattice = testutil::lattice_min(m, phi, 1000);
      const double qp = solve_qp(m, phi).value;
      CHECK(qp <= lattice + 1e-12);
      CHECK(lattice - qp <= 1e-2);
    }
  }
}

TEST_CASE("solve_qp is deterministic") {
  const MarketModel m = dax6_model();
  for (double phi : {0.1, 0.9, 3.3, 8.9}) {
    const QpSolution a = solve_qp(m, phi);
    const QpSolution b = solve_qp(m, phi);
    CHECK((a.theta - b.theta).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(a.value == b.value);
    CHECK(a.derivative == b.derivative);
    CHECK(a.active_set == b.active_set);
  }
}

TEST_CASE("single asset model is the trivial simplex") {
  Eigen::VectorXd mu(1);
  mu << 0.2;
  Eigen::MatrixXd sigma(1, 1);
  sigma << 0.04;
  MarketModel m(mu, sigma);
  const QpSolution sol = solve_qp(m, 3.0);
  CHECK(sol.theta(0) == 1.0);
  CHECK(sol.value == doctest::Approx(-0.2 + 1.5 * 0.04).epsilon(1e-15));
  CHECK(sol.active_set.empty());
  check_solution_invariants(m, 3.0, sol, ConstraintSet::Simplex);
}

TEST_CASE("direct reduced solve skips inequality checks by contract") {
  // Strong return spread: the unconstrained-on-simplex solution at large
  // phi leaves the simplex; the direct solve must return it unchanged.
  Eigen::VectorXd mu(2);
  mu << 2.0, 0.0;
  MarketModel m(mu, Eigen::MatrixXd::Identity(2, 2));
  const QpSolution raw = solve_qp_active_set_direct(m, 0.1, {});
  CHECK(raw.theta(1) < 0.0);  // infeasible on purpose
  CHECK(raw.theta.sum() == doctest::Approx(1.0).epsilon(1e-12));
  // The constrained solver projects back onto the simplex.
  const QpSolution proper = solve_qp(m, 0.1);
  CHECK(proper.theta(1) == 0.0);
}
