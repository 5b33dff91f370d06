#pragma once

#include <vector>

#include "riccati/alpha_function.hpp"
#include "riccati/errors.hpp"

namespace riccati {

/// Wave speed and flux intercept fixed by requiring G(v-) = G(v+) = 0 for
/// G(v) = K0 + c*v - alpha(v)*(1-v), together with the prescribed limits
/// and their images z = alpha(v).
struct WaveParameters {
  double c = 0.0;
  double K0 = 0.0;
  double v_minus = 0.0;
  double v_plus = 0.0;
  double z_minus = 0.0;
  double z_plus = 0.0;
};

/// Closed-form (c, K0) for prescribed limiting values 0 < v- < v+ inside
/// the covered alpha domain and away from its breakpoints. Throws
/// InvalidLimits.
WaveParameters wave_parameters(const PiecewiseAlpha& alpha, double v_minus,
                               double v_plus);

/// G(v) = K0 + c*v - alpha(v)*(1-v); negative exactly between the limits.
double wave_G(const PiecewiseAlpha& alpha, const WaveParameters& wp, double v);

/// Right-hand side of the profile ODE z' = F(z) in the transformed
/// variable z = alpha(v): F(z) = K0 + c*beta(z) - z + z*beta(z) with beta
/// the inverse of alpha. Defined for z in [z-, z+]; throws OutOfRange.
double wave_ode_rhs(const PiecewiseAlpha& alpha, const WaveParameters& wp,
                    double z);

/// Monotone-cubic interpolant of profile samples (xi, v). Evaluation
/// outside the sampled range throws OutOfRange.
class WaveProfile {
 public:
  WaveProfile(std::vector<double> xi, std::vector<double> v);

  double operator()(double xi) const;
  double xi_front() const { return xi_.front(); }
  double xi_back() const { return xi_.back(); }
  const std::vector<double>& xi() const { return xi_; }
  const std::vector<double>& v() const { return v_; }

 private:
  std::vector<double> xi_, v_, slope_;
};

/// Integrates z' = F(z) by adaptive step-doubling fourth-order
/// Runge-Kutta from the anchor v(0) = (v- + v+)/2, forward and backward,
/// emitting samples v = beta(z) on a uniform xi grid of spacing at most
/// sample_dx. Integration stops and pads with the limiting value once
/// |z - z_limit| < 1e-12; a step-size underflow below 1e-14 away from the
/// limits throws StiffnessFailure.
WaveProfile integrate_profile(const PiecewiseAlpha& alpha,
                              const WaveParameters& wp, double v_minus,
                              double v_plus, double xi_lo, double xi_hi,
                              double rel_tol = 1e-8, double sample_dx = 1e-3);

/// A fully assembled benchmark solution phi(x,t) = v(x + c(T-t)).
struct WaveBenchmark {
  double v_minus = 0.0;
  double v_plus = 0.0;
  double c = 0.0;
  double K0 = 0.0;
  double z_minus = 0.0;
  double z_plus = 0.0;
  WaveProfile profile;
  PiecewiseAlpha alpha;

  /// Profile value at xi = x + c*(T - t) (backward time t).
  double value_at(double x, double t, double T) const {
    return profile(x + c * (T - t));
  }
  /// Same surface in forward time tau = T - t.
  double value_at_tau(double x, double tau) const {
    return profile(x + c * tau);
  }
};

/// Builds the benchmark for limits (v-, v+) with the profile sampled over
/// [xi_lo, xi_hi].
WaveBenchmark make_wave_benchmark(const PiecewiseAlpha& alpha, double v_minus,
                                  double v_plus, double xi_lo, double xi_hi,
                                  double rel_tol = 1e-8,
                                  double sample_dx = 1e-3);

}  // namespace riccati
