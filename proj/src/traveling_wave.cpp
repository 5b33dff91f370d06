#include "riccati/traveling_wave.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace riccati {

namespace {

constexpr double kPadThreshold = 1e-12;  // |z - z_limit| treated as arrived
constexpr double kMinStep = 1e-14;

double alpha_of(const PiecewiseAlpha& alpha, double v) {
  return alpha.eval(v).first;
}

}  // namespace

WaveParameters wave_parameters(const PiecewiseAlpha& alpha, double v_minus,
                               double v_plus) {
  if (!(0.0 < v_minus && v_minus < v_plus))
    throw InvalidLimits("require 0 < v_minus < v_plus");
  for (double v : {v_minus, v_plus}) {
    if (!(v > alpha.phi_min()) || v > alpha.phi_max())
      throw InvalidLimits("limit outside the covered alpha domain");
    for (double bp : alpha.breakpoints())
      if (std::abs(v - bp) < 1e-12)
        throw InvalidLimits("limit sits on an alpha breakpoint");
  }
  const double h_plus = alpha_of(alpha, v_plus) * (1.0 - v_plus);
  const double h_minus = alpha_of(alpha, v_minus) * (1.0 - v_minus);
  WaveParameters wp;
  wp.c = (h_plus - h_minus) / (v_plus - v_minus);
  wp.K0 = -wp.c * v_plus + h_plus;
  wp.v_minus = v_minus;
  wp.v_plus = v_plus;
  wp.z_minus = alpha_of(alpha, v_minus);
  wp.z_plus = alpha_of(alpha, v_plus);
  return wp;
}

double wave_G(const PiecewiseAlpha& alpha, const WaveParameters& wp,
              double v) {
  return wp.K0 + wp.c * v - alpha_of(alpha, v) * (1.0 - v);
}

double wave_ode_rhs(const PiecewiseAlpha& alpha, const WaveParameters& wp,
                    double z) {
  const double slack = 1e-9 * std::max(1.0, wp.z_plus - wp.z_minus);
  if (z < wp.z_minus - slack || z > wp.z_plus + slack)
    throw OutOfRange("z outside [z-, z+]");
  const double v = alpha.inverse(std::clamp(z, wp.z_minus, wp.z_plus));
  return wp.K0 + wp.c * v - z + z * v;
}

WaveProfile::WaveProfile(std::vector<double> xi, std::vector<double> v)
    : xi_(std::move(xi)), v_(std::move(v)) {
  const std::size_t n = xi_.size();
  if (n < 2 || v_.size() != n)
    throw InvalidParams("profile needs matching samples, at least two");
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (!(xi_[i] < xi_[i + 1]))
      throw InvalidParams("profile abscissae must increase");

  // Fritsch-Carlson monotone slopes.
  slope_.assign(n, 0.0);
  std::vector<double> d(n - 1), hs(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    hs[i] = xi_[i + 1] - xi_[i];
    d[i] = (v_[i + 1] - v_[i]) / hs[i];
  }
  auto sgn = [](double x) { return (x > 0) - (x < 0); };
  if (n == 2) {
    slope_[0] = slope_[1] = d[0];
    return;
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (sgn(d[i - 1]) * sgn(d[i]) <= 0) {
      slope_[i] = 0.0;
    } else {
      const double w1 = 2.0 * hs[i] + hs[i - 1];
      const double w2 = hs[i] + 2.0 * hs[i - 1];
      slope_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
    }
  }
  auto endpoint = [&](double h0, double h1, double d0, double d1) {
    double m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (sgn(m) != sgn(d0))
      m = 0.0;
    else if (sgn(d0) != sgn(d1) && std::abs(m) > 3.0 * std::abs(d0))
      m = 3.0 * d0;
    return m;
  };
  slope_[0] = endpoint(hs[0], hs[1], d[0], d[1]);
  slope_[n - 1] = endpoint(hs[n - 2], hs[n - 3], d[n - 2], d[n - 3]);
}

double WaveProfile::operator()(double xi) const {
  const double slack = 1e-12 * std::max(1.0, std::abs(xi_.back()));
  if (xi < xi_.front() - slack || xi > xi_.back() + slack)
    throw OutOfRange("xi outside the sampled profile range");
  xi = std::clamp(xi, xi_.front(), xi_.back());
  const std::size_t hi =
      std::max<std::size_t>(
          1, std::lower_bound(xi_.begin(), xi_.end(), xi) - xi_.begin());
  const std::size_t i = std::min(hi, xi_.size() - 1) - 1;
  const double h = xi_[i + 1] - xi_[i];
  const double t = (xi - xi_[i]) / h;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * v_[i] + (t3 - 2 * t2 + t) * h * slope_[i] +
         (-2 * t3 + 3 * t2) * v_[i + 1] + (t3 - t2) * h * slope_[i + 1];
}

namespace {

// One classical RK4 step of the autonomous z' = F(z).
template <typename Rhs>
double rk4_step(const Rhs& f, double z, double h) {
  const double k1 = f(z);
  const double k2 = f(z + 0.5 * h * k1);
  const double k3 = f(z + 0.5 * h * k2);
  const double k4 = f(z + h * k3);
  return z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Advances z over a signed span, step-doubling for error control, and
// writes samples v = beta(z) at the requested offsets (sorted by
// increasing magnitude). z_limit is the stationary value being approached.
template <typename Rhs, typename Inv>
void march(const Rhs& f, const Inv& beta, double z0, double z_lo, double z_hi,
           double z_limit, double rel_tol, const std::vector<double>& offsets,
           std::vector<double>* out) {
  out->clear();
  out->reserve(offsets.size());
  const double scale = std::max(std::abs(z_hi - z_lo), 1e-30);
  double s = 0.0;  // progress along the march direction
  double z = z0;
  double h = offsets.empty() ? 0.0 : std::max(1e-6, offsets.front() * 0.5);
  bool arrived = false;

  for (double target : offsets) {
    if (!arrived) {
      while (s < target) {
        if (std::abs(z - z_limit) < kPadThreshold) {
          arrived = true;
          break;
        }
        double step = std::min(h, target - s);
        for (;;) {
          const double full = rk4_step(f, z, step);
          const double half =
              rk4_step(f, rk4_step(f, z, 0.5 * step), 0.5 * step);
          const double err = std::abs(half - full) / 15.0;
          const double tol = rel_tol * std::max(std::abs(z), scale);
          if (err <= tol) {
            z = std::clamp(half, z_lo, z_hi);
            s += step;
            const double grow =
                err > 0.0 ? 0.9 * std::pow(tol / err, 0.2) : 5.0;
            h = step * std::clamp(grow, 0.2, 5.0);
            break;
          }
          step *= std::clamp(0.9 * std::pow(tol / err, 0.2), 0.2, 0.9);
          if (step < kMinStep)
            throw StiffnessFailure("step size underflow at offset " +
                                   std::to_string(s));
        }
      }
    }
    out->push_back(arrived ? beta(z_limit) : beta(z));
  }
}

}  // namespace

WaveProfile integrate_profile(const PiecewiseAlpha& alpha,
                              const WaveParameters& wp, double v_minus,
                              double v_plus, double xi_lo, double xi_hi,
                              double rel_tol, double sample_dx) {
  if (!(rel_tol > 0.0)) throw InvalidParams("rel_tol must be positive");
  if (!(sample_dx > 0.0)) throw InvalidParams("sample_dx must be positive");
  if (!(xi_lo < xi_hi)) throw InvalidParams("xi range must be ordered");

  const double z_minus = alpha_of(alpha, v_minus);
  const double z_plus = alpha_of(alpha, v_plus);
  // Anchor the free shift so the profile passes through the midpoint of
  // its limiting values at xi = 0.
  const double z_anchor = alpha_of(alpha, 0.5 * (v_minus + v_plus));

  const int cells = std::max(1, static_cast<int>(
                                    std::ceil((xi_hi - xi_lo) / sample_dx)));
  std::vector<double> grid(cells + 1);
  for (int i = 0; i <= cells; ++i)
    grid[i] = xi_lo + (xi_hi - xi_lo) * i / cells;
  if (xi_lo < 0.0 && xi_hi > 0.0) {
    // The anchor xi = 0 is always a sample so v(0) is exact.
    auto pos = std::lower_bound(grid.begin(), grid.end(), 0.0);
    if (pos == grid.end() || std::abs(*pos) > 1e-15) grid.insert(pos, 0.0);
  }

  // Unchecked rhs for the integrator: stage values may poke marginally
  // past [z-, z+], so evaluate beta on the clamped argument.
  const double z_img_lo = alpha.eval(alpha.phi_min() * (1.0 + 1e-12)).first;
  const double z_img_hi = alpha.eval(alpha.phi_max()).first;
  auto rhs = [&, z_img_lo, z_img_hi](double z) {
    const double v = alpha.inverse(std::clamp(z, z_img_lo, z_img_hi));
    return wp.K0 + wp.c * v - z + z * v;
  };
  auto beta = [&](double z) { return alpha.inverse(z); };

  // Split the grid around the anchor xi = 0.
  std::vector<double> fwd_offsets, bwd_offsets;
  for (double xi : grid)
    (xi >= 0.0 ? fwd_offsets : bwd_offsets).push_back(xi);
  std::sort(bwd_offsets.begin(), bwd_offsets.end(), std::greater<>());
  for (double& o : bwd_offsets) o = -o;  // march in s = -xi

  std::vector<double> v_fwd, v_bwd;
  // Forward: z decreases toward z_minus.
  march(rhs, beta, z_anchor, z_minus, z_plus, z_minus, rel_tol, fwd_offsets,
        &v_fwd);
  // Backward: z' = -F(z), increasing toward z_plus.
  auto rhs_back = [&](double z) { return -rhs(z); };
  march(rhs_back, beta, z_anchor, z_minus, z_plus, z_plus, rel_tol, bwd_offsets,
        &v_bwd);

  std::vector<double> v(grid.size());
  const std::size_t nb = v_bwd.size();
  for (std::size_t i = 0; i < nb; ++i) v[nb - 1 - i] = v_bwd[i];
  for (std::size_t i = 0; i < v_fwd.size(); ++i) v[nb + i] = v_fwd[i];
  return WaveProfile(std::move(grid), std::move(v));
}

WaveBenchmark make_wave_benchmark(const PiecewiseAlpha& alpha, double v_minus,
                                  double v_plus, double xi_lo, double xi_hi,
                                  double rel_tol, double sample_dx) {
  const WaveParameters wp = wave_parameters(alpha, v_minus, v_plus);
  WaveProfile profile = integrate_profile(alpha, wp, v_minus, v_plus, xi_lo,
                                          xi_hi, rel_tol, sample_dx);
  return WaveBenchmark{v_minus,
                       v_plus,
                       wp.c,
                       wp.K0,
                       alpha_of(alpha, v_minus),
                       alpha_of(alpha, v_plus),
                       std::move(profile),
                       alpha};
}

}  // namespace riccati
