#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "riccati/traveling_wave.hpp"
#include "test_util.hpp"

using namespace riccati;
using testutil::dax6_model;

namespace {

// One-asset model with sigma = 2, mu = 0 gives alpha(phi) = phi exactly:
// a single piece with a = 1, b = 0, c = 0 and beta(z) = z.
PiecewiseAlpha linear_alpha() {
  Eigen::VectorXd mu(1);
  mu << 0.0;
  Eigen::MatrixXd sigma(1, 1);
  sigma << 2.0;
  return build_piecewise_alpha(MarketModel(mu, sigma), 1e-3, 5.0);
}

PiecewiseAlpha dax_alpha() { return build_piecewise_alpha(dax6_model(), 1e-3, 10.0); }

}  // namespace

TEST_CASE("wave parameters: hand-checkable linear case") {
  const PiecewiseAlpha alpha = linear_alpha();
  CHECK(alpha.pieces().size() == 1);
  CHECK(alpha.eval(2.0).first == doctest::Approx(2.0).epsilon(1e-14));

  const WaveParameters wp = wave_parameters(alpha, 0.5, 2.0);
  CHECK(wp.c == doctest::Approx(-1.5).epsilon(1e-14));
  CHECK(wp.K0 == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(wave_G(alpha, wp, 0.5)) <= 1e-12);
  CHECK(std::abs(wave_G(alpha, wp, 2.0)) <= 1e-12);
}

TEST_CASE("G vanishes at the limits for random valid pairs") {
  const PiecewiseAlpha alpha = dax_alpha();
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> draw(0.05, 9.5);
  for (int trial = 0; trial < 100; ++trial) {
    double a = draw(rng), b = draw(rng);
    if (a == b) continue;
    const double vm = std::min(a, b), vp = std::max(a, b);
    bool near_bp = false;
    for (double bp : alpha.breakpoints())
      near_bp |= std::abs(vm - bp) < 1e-12 || std::abs(vp - bp) < 1e-12;
    if (near_bp) continue;
    const WaveParameters wp = wave_parameters(alpha, vm, vp);
    CHECK(std::abs(wave_G(alpha, wp, vm)) <= 1e-12);
    CHECK(std::abs(wave_G(alpha, wp, vp)) <= 1e-12);
  }
}

TEST_CASE("invalid limits are rejected") {
  const PiecewiseAlpha alpha = dax_alpha();
  CHECK_THROWS_AS(wave_parameters(alpha, 1.5, 0.3), InvalidLimits);
  CHECK_THROWS_AS(wave_parameters(alpha, -0.2, 1.0), InvalidLimits);
  CHECK_THROWS_AS(wave_parameters(alpha, 0.3, 50.0), InvalidLimits);
  const double bp = alpha.breakpoints().front();
  CHECK_THROWS_AS(wave_parameters(alpha, bp, 1.5), InvalidLimits);
}

TEST_CASE("profile ODE right-hand side") {
  const PiecewiseAlpha alpha = linear_alpha();
  const WaveParameters wp = wave_parameters(alpha, 0.5, 2.0);
  const double z_minus = 0.5, z_plus = 2.0;  // beta is the identity here

  CHECK(std::abs(wave_ode_rhs(alpha, wp, z_minus)) <= 1e-10);
  CHECK(std::abs(wave_ode_rhs(alpha, wp, z_plus)) <= 1e-10);
  CHECK(wave_ode_rhs(alpha, wp, 0.5 * (z_minus + z_plus)) < 0.0);

  // F(z) = K0 + c z - z + z^2 = z^2 - 2.5 z + 1 for the linear alpha.
  for (double z : {0.6, 1.0, 1.7}) {
    CHECK(wave_ode_rhs(alpha, wp, z) ==
          doctest::Approx(z * z - 2.5 * z + 1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(wave_ode_rhs(alpha, wp, 4.9), OutOfRange);
}

TEST_CASE("integrated profile: anchor, monotonicity, limits") {
  const PiecewiseAlpha alpha = linear_alpha();
  const WaveParameters wp = wave_parameters(alpha, 0.5, 2.0);
  const WaveProfile profile =
      integrate_profile(alpha, wp, 0.5, 2.0, -8.0, 8.0, 1e-8, 1e-3);

  CHECK(profile(0.0) == doctest::Approx(1.25).epsilon(1e-12));  // anchor v-mid
  const auto& v = profile.v();
  for (std::size_t i = 0; i + 1 < v.size(); ++i) CHECK(v[i] > v[i + 1]);
  CHECK(std::abs(profile(8.0) - 0.5) <= 1e-3);
  CHECK(std::abs(profile(-8.0) - 2.0) <= 1e-3);
  for (double vi : v) {
    CHECK(vi > 0.5 - 1e-12);
    CHECK(vi < 2.0 + 1e-12);
  }
}

TEST_CASE("halving the tolerance barely moves the samples") {
  const PiecewiseAlpha alpha = linear_alpha();
  const WaveParameters wp = wave_parameters(alpha, 0.5, 2.0);
  const double rel_tol = 1e-8;
  const WaveProfile coarse =
      integrate_profile(alpha, wp, 0.5, 2.0, -6.0, 6.0, rel_tol, 1e-2);
  const WaveProfile fine =
      integrate_profile(alpha, wp, 0.5, 2.0, -6.0, 6.0, rel_tol / 2, 1e-2);
  double worst = 0.0;
  for (std::size_t i = 0; i < coarse.v().size(); ++i)
    worst = std::max(worst, std::abs(coarse.v()[i] - fine.v()[i]));
  CHECK(worst <= 10.0 * rel_tol);
}

TEST_CASE("wide domains pad with the limiting values") {
  const PiecewiseAlpha alpha = linear_alpha();
  const WaveParameters wp = wave_parameters(alpha, 0.5, 2.0);
  const WaveProfile profile =
      integrate_profile(alpha, wp, 0.5, 2.0, -40.0, 40.0, 1e-8, 1e-2);
  CHECK(profile(40.0) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(profile(-40.0) == doctest::Approx(2.0).epsilon(1e-10));
  const auto& v = profile.v();
  for (std::size_t i = 0; i + 1 < v.size(); ++i) CHECK(v[i] >= v[i + 1]);
}

TEST_CASE("wave surface is a function of x + c(T - t)") {
  const PiecewiseAlpha alpha = linear_alpha();
  const WaveBenchmark bench =
      make_wave_benchmark(alpha, 0.5, 2.0, -8.0, 8.0, 1e-8, 1e-3);
  const double T = 2.0;

  // Terminal slice is the profile itself.
  for (double x : {-3.0, -1.0, 0.0, 2.5})
    CHECK(bench.value_at(x, T, T) == doctest::Approx(bench.profile(x)));

  // Same xi means the same value, independent of (x, t).
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> xd(-3.0, 3.0), td(0.0, T);
  for (int trial = 0; trial < 200; ++trial) {
    const double x1 = xd(rng), t1 = td(rng), t2 = td(rng);
    const double xi = x1 + bench.c * (T - t1);
    const double x2 = xi - bench.c * (T - t2);
    if (x2 < -8.0 || x2 > 8.0) continue;
    CHECK(std::abs(bench.value_at(x1, t1, T) - bench.value_at(x2, t2, T)) <=
          1e-8);
  }
}

TEST_CASE("six-asset benchmark wave: shape and limits") {
  const PiecewiseAlpha alpha = dax_alpha();
  const WaveParameters wp = wave_parameters(alpha, 0.3, 1.5);
  const double T = 10.0;
  REQUIRE(wp.c > 0.0);  // travels right for this market
  const WaveBenchmark bench = make_wave_benchmark(
      alpha, 0.3, 1.5, -4.0, 4.0 + wp.c * T, 1e-8, 1e-3);

  const auto& v = bench.profile.v();
  for (std::size_t i = 0; i + 1 < v.size(); ++i) CHECK(v[i] > v[i + 1]);
  CHECK(std::abs(bench.profile(4.0 + wp.c * T) - 0.3) <= 1e-3);
  CHECK(std::abs(bench.profile(-4.0) - 1.5) <= 1e-3);

  // G' changes sign: negative at v-, positive at v+.
  const double dv = 1e-6;
  const double gm =
      (wave_G(alpha, wp, 0.3 + dv) - wave_G(alpha, wp, 0.3 - dv)) / (2 * dv);
  const double gp =
      (wave_G(alpha, wp, 1.5 + dv) - wave_G(alpha, wp, 1.5 - dv)) / (2 * dv);
  CHECK(gm < 0.0);
  CHECK(gp > 0.0);
}

TEST_CASE("interpolated wave satisfies the flux-form equation discretely") {
  const PiecewiseAlpha alpha = linear_alpha();
  const WaveBenchmark bench =
      make_wave_benchmark(alpha, 0.5, 2.0, -10.0, 10.0, 1e-10, 5e-4);

  auto residual = [&](double d) {
    // c v' - d^2/dxi^2 alpha(v) - d/dxi [alpha(v)(1 - v)] at sample points.
    double worst = 0.0;
    for (double xi = -2.0; xi <= 2.0; xi += 0.37) {
      auto av = [&](double s) { return alpha.eval(bench.profile(s)).first; };
      auto hv = [&](double s) {
        const double vv = bench.profile(s);
        return alpha.eval(vv).first * (1.0 - vv);
      };
      const double vprime =
          (bench.profile(xi + d) - bench.profile(xi - d)) / (2 * d);
      const double a_xx = (av(xi + d) - 2 * av(xi) + av(xi - d)) / (d * d);
      const double h_x = (hv(xi + d) - hv(xi - d)) / (2 * d);
      worst = std::max(worst, std::abs(bench.c * vprime - a_xx - h_x));
    }
    return worst;
  };
  const double r1 = residual(0.2);
  const double r2 = residual(0.1);
  const double r3 = residual(0.05);
  CHECK(r2 < r1);
  CHECK(r3 < r2);
  CHECK(r1 / r2 >= 1.8);  // at least first order
  CHECK(r2 / r3 >= 1.8);
}
