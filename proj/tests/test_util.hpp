// Shared fixtures and independent oracles for the test suites. The lattice
// minimizers here deliberately avoid the library's active-set path so they
// can serve as independent checks.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <random>
#include <vector>

#include "riccati/alpha_function.hpp"
#include "riccati/qp_kernel.hpp"

namespace testutil {

// Six DAX stocks (Merck, Volkswagen, SAP, Fresenius Medical, Linde,
// Fresenius): annualized mean log-returns and covariance, Aug 2010 - Apr
// 2012 window.
inline riccati::MarketModel dax6_model() {
  Eigen::VectorXd mu(6);
  mu << 0.7315, 0.3413, 0.1877, 0.2202, 0.1932, 0.1351;
  Eigen::MatrixXd sigma(6, 6);
  sigma << 1.6266, -0.0155, -0.0104, -0.0146, -0.0017, -0.0033,
      -0.0155, 0.1584, 0.0345, 0.0292, 0.0569, 0.0238,
      -0.0104, 0.0345, 0.0516, 0.0183, 0.0240, 0.0143,
      -0.0146, 0.0292, 0.0183, 0.0434, 0.0227, 0.0248,
      -0.0017, 0.0569, 0.0240, 0.0227, 0.0530, 0.0201,
      -0.0033, 0.0238, 0.0143, 0.0248, 0.0201, 0.0386;
  return riccati::MarketModel(std::move(mu), std::move(sigma));
}

inline riccati::MarketModel random_pd_model(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> ret(0.0, 0.8);
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = unit(rng);
  Eigen::MatrixXd sigma = 0.3 * (a * a.transpose()) / n +
                          0.05 * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd mu(n);
  for (int i = 0; i < n; ++i) mu(i) = ret(rng);
  return riccati::MarketModel(std::move(mu), std::move(sigma));
}

inline riccati::TwoAssetParams random_two_asset(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> vol(0.05, 1.5);
  std::uniform_real_distribution<double> corr(-0.999, 0.999);
  std::uniform_real_distribution<double> ret(0.0, 1.0);
  for (;;) {
    riccati::TwoAssetParams p;
    p.sigma_s = vol(rng);
    p.sigma_b = vol(rng);
    p.rho = corr(rng);
    const double r1 = ret(rng), r2 = ret(rng);
    p.mu_s = std::max(r1, r2);
    p.mu_b = std::min(r1, r2);
    if (p.sigma_b - p.rho * p.sigma_s >= 0.0) return p;
  }
}

inline riccati::MarketModel two_asset_model(const riccati::TwoAssetParams& p) {
  Eigen::VectorXd mu(2);
  mu << p.mu_s, p.mu_b;
  Eigen::MatrixXd sigma(2, 2);
  const double cov = p.rho * p.sigma_s * p.sigma_b;
  sigma << p.sigma_s * p.sigma_s, cov, cov, p.sigma_b * p.sigma_b;
  return riccati::MarketModel(std::move(mu), std::move(sigma));
}

inline double objective(const riccati::MarketModel& m, double phi,
                        const Eigen::VectorXd& theta) {
  return -m.mu().dot(theta) + 0.5 * phi * theta.dot(m.sigma() * theta);
}

// Exact minimum of the objective over the lattice {k/S : sum k = S} by full
// enumeration. Exponential in n; used for n <= 3 and small S only.
inline double lattice_min_enumerate(const riccati::MarketModel& m, double phi,
                                    int subdivisions) {
  const int n = m.n();
  const int S = subdivisions;
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd theta(n);
  std::vector<int> k(n, 0);
  // Odometer over compositions of S into n parts.
  int depth = 0;
  k[0] = -1;
  while (depth >= 0) {
    if (depth == n - 1) {
      int rest = S;
      for (int i = 0; i < n - 1; ++i) rest -= k[i];
      if (rest >= 0) {
        k[n - 1] = rest;
        for (int i = 0; i < n; ++i) theta(i) = double(k[i]) / S;
        best = std::min(best, objective(m, phi, theta));
      }
      --depth;
      continue;
    }
    int used = 0;
    for (int i = 0; i < depth; ++i) used += k[i];
    if (++k[depth] > S - used) {
      k[depth] = -1;
      --depth;
    } else {
      ++depth;
      if (depth < n - 1) k[depth] = -1;
    }
  }
  return best;
}

// Exact lattice minimum for any n: the lattice decomposes into lines along
// e_{n-1} - e_n; on each line the objective is a one-dimensional convex
// quadratic whose integer minimum sits at the floor/ceil of its vertex.
inline double lattice_min(const riccati::MarketModel& m, double phi,
                          int subdivisions) {
  const int n = m.n();
  const int S = subdivisions;
  const double step = 1.0 / S;
  if (n == 1) return objective(m, phi, Eigen::VectorXd::Ones(1));

  Eigen::VectorXd dir = Eigen::VectorXd::Zero(n);
  dir(n - 2) = step;
  dir(n - 1) = -step;
  const double quad = phi * dir.dot(m.sigma() * dir);  // > 0 for PD sigma

  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd base(n), theta(n);
  std::vector<int> head(std::max(0, n - 2), 0);
  for (;;) {
    int used = 0;
    for (int v : head) used += v;
    const int rest = S - used;  // mass shared by the last two coordinates
    for (int i = 0; i < n - 2; ++i) base(i) = head[i] * step;
    base(n - 2) = 0.0;
    base(n - 1) = rest * step;

    const double slope =
        dir.dot(phi * (m.sigma() * base) - m.mu());  // d f / d t at t = 0
    const double vertex = quad > 0.0 ? -slope / quad : 0.0;
    const int cands[4] = {0, rest,
                          std::clamp(int(std::floor(vertex)), 0, rest),
                          std::clamp(int(std::ceil(vertex)), 0, rest)};
    for (int t : cands) {
      theta = base + double(t) * dir;
      best = std::min(best, objective(m, phi, theta));
    }

    // Advance the head odometer over k_0 + ... + k_{n-3} <= S.
    int pos = n - 3;
    while (pos >= 0) {
      ++head[pos];
      int total = 0;
      for (int v : head) total += v;
      if (total <= S) break;
      head[pos] = 0;
      --pos;
    }
    if (pos < 0) break;
    if (n == 2) break;
  }
  return best;
}

inline std::uint64_t hash_doubles(std::uint64_t seed,
                                  std::initializer_list<double> values) {
  std::uint64_t h = seed ? seed : 14695981039346656037ull;
  for (double v : values) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xff;
      h *= 1099511628211ull;
    }
  }
  return h;
}

}  // namespace testutil
