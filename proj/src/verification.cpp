#include "riccati/verification.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

namespace riccati {

ErrorNorms discrete_norms(const PhiField& numeric,
                          const std::function<double(double, double)>& exact) {
  if (numeric.nodes() < 4 || numeric.layers() < 1)
    throw ShapeMismatch("field too small for norm evaluation");
  const auto& grid = numeric.grid();
  const auto& times = numeric.times();
  const int n = numeric.nodes() - 2;  // interior cells
  const double h = grid[1] - grid[0];
  const double k = times.size() > 1 ? times[1] - times[0] : 0.0;

  ErrorNorms norms;
  double sum_w12_sq = 0.0;
  std::vector<double> e(n + 1);
  for (int j = 0; j < numeric.layers(); ++j) {
    for (int i = 1; i <= n; ++i)
      e[i] = numeric(j, i) - exact(grid[i], times[j]);
    double l2_sq = 0.0, deriv_sq = 0.0;
    for (int i = 1; i <= n; ++i) l2_sq += e[i] * e[i];
    for (int i = 1; i < n; ++i) {
      const double g = (e[i + 1] - e[i]) / h;
      deriv_sq += g * g;
    }
    const double l2 = std::sqrt(h * l2_sq);
    const double w12 = l2 + std::sqrt(h * deriv_sq);
    norms.linf_l2 = std::max(norms.linf_l2, l2);
    if (j >= 1) sum_w12_sq += w12 * w12;
  }
  norms.l2_w12 = std::sqrt(k * sum_w12_sq);
  return norms;
}

double KRule::k_for(double h) const {
  return power == 2 ? coef * h * h : coef * h;
}

std::string KRule::str() const {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g*h%s", coef, power == 2 ? "^2" : "");
  return buf;
}

KRule KRule::parse(const std::string& text) {
  KRule rule;
  char tail[8] = {0};
  if (std::sscanf(text.c_str(), "%lf*h^%d", &rule.coef, &rule.power) == 2) {
    if (rule.power != 1 && rule.power != 2)
      throw ConfigError("k rule power must be 1 or 2: " + text);
    return rule;
  }
  if (std::sscanf(text.c_str(), "%lf*%7s", &rule.coef, tail) == 2 &&
      std::string(tail) == "h") {
    rule.power = 1;
    return rule;
  }
  throw ConfigError("cannot parse k rule '" + text +
                    "' (expected <coef>*h or <coef>*h^2)");
}

PdeProblem benchmark_problem(const WaveBenchmark& benchmark,
                             const EocConfig& config, double h, double k) {
  const double span = config.x_hi - config.x_lo;
  const int cells = std::max(3, static_cast<int>(std::llround(span / h)));
  const int m = std::max(1, static_cast<int>(std::llround(config.horizon / k)));

  // The returned problem owns a copy of the profile, so it outlives the
  // benchmark it was built from.
  auto prof = std::make_shared<const WaveProfile>(benchmark.profile);
  const double c = benchmark.c;
  const double x_lo = config.x_lo;
  const double x_hi = config.x_hi;
  return PdeProblem{
      0.0,
      0.0,
      x_lo,
      x_hi,
      cells - 1,
      m,
      config.horizon,
      [prof](double x) { return (*prof)(x); },
      BoundaryCondition::dirichlet(
          [prof, c, x_lo](double tau) { return (*prof)(x_lo + c * tau); }),
      BoundaryCondition::dirichlet(
          [prof, c, x_hi](double tau) { return (*prof)(x_hi + c * tau); }),
      benchmark.alpha};
}

std::vector<ErrorReport> eoc_study(const WaveBenchmark& benchmark,
                                   const EocConfig& config, const KRule& rule,
                                   const std::vector<double>& levels,
                                   SolveStats* stats) {
  if (levels.size() < 2)
    throw InvalidParams("an EOC study needs at least two levels");
  for (std::size_t i = 0; i + 1 < levels.size(); ++i)
    if (!(levels[i] > levels[i + 1]))
      throw InvalidParams("levels must strictly decrease");

  std::vector<ErrorReport> reports;
  for (double h : levels) {
    const double k = rule.k_for(h);
    PdeProblem problem = benchmark_problem(benchmark, config, h, k);
    SolveOptions options;
    options.scheme = config.scheme;
    options.tol = config.tol;
    options.max_iters = config.max_iters;

    SolveStats level_stats;
    const PhiField field = solve_pde(problem, options, &level_stats);
    if (stats) {
      stats->max_iters_used =
          std::max(stats->max_iters_used, level_stats.max_iters_used);
      stats->total_iters += level_stats.total_iters;
      stats->iters_per_step.insert(stats->iters_per_step.end(),
                                   level_stats.iters_per_step.begin(),
                                   level_stats.iters_per_step.end());
    }

    const ErrorNorms norms = discrete_norms(
        field, [&benchmark](double x, double tau) {
          return benchmark.value_at_tau(x, tau);
        });

    ErrorReport report;
    report.h = problem.h();
    report.k = problem.horizon / problem.m_steps;
    report.err_linf_l2 = norms.linf_l2;
    report.err_l2_w12 = norms.l2_w12;
    if (!reports.empty()) {
      const ErrorReport& prev = reports.back();
      const double lh = std::log(report.h / prev.h);
      if (report.err_linf_l2 > 0.0 && prev.err_linf_l2 > 0.0)
        report.eoc_linf = std::log(report.err_linf_l2 / prev.err_linf_l2) / lh;
      if (report.err_l2_w12 > 0.0 && prev.err_l2_w12 > 0.0)
        report.eoc_l2 = std::log(report.err_l2_w12 / prev.err_l2_w12) / lh;
    }
    reports.push_back(report);
  }
  return reports;
}

}  // namespace riccati
