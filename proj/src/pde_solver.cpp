#include "riccati/pde_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace riccati {

BoundaryCondition BoundaryCondition::dirichlet(std::function<double(double)> g) {
  BoundaryCondition bc;
  bc.kind = Kind::Dirichlet;
  bc.value = std::move(g);
  return bc;
}

BoundaryCondition BoundaryCondition::dirichlet_const(double g) {
  return dirichlet([g](double) { return g; });
}

BoundaryCondition BoundaryCondition::robin(double d) {
  BoundaryCondition bc;
  bc.kind = Kind::Robin;
  bc.d = d;
  return bc;
}

BoundaryCondition BoundaryCondition::neumann() {
  BoundaryCondition bc;
  bc.kind = Kind::Neumann;
  return bc;
}

double BoundaryCondition::ghost_weight_inner(double h) const {
  switch (kind) {
    case Kind::Dirichlet:
      return 0.0;
    case Kind::Robin:
      if (1.0 + d * h <= 0.0)
        throw InvalidParams("Robin coefficient d makes 1 + d*h non-positive");
      return 1.0 / (1.0 + d * h);
    case Kind::Neumann:
      return 1.0;
  }
  return 0.0;
}

double BoundaryCondition::boundary_value(double tau) const {
  if (kind != Kind::Dirichlet) return 0.0;
  if (!value) throw InvalidParams("Dirichlet boundary needs a value function");
  return value(tau);
}

FluxTerms make_model_flux(const PiecewiseAlpha& alpha, double epsilon,
                          double r, ClampStats* stats) {
  const double lo = alpha.phi_min();
  const double hi = alpha.phi_max();
  // Evaluation point nudged just inside the open left end of the domain.
  const double lo_eval = lo + 1e-12 * std::max(1.0, std::abs(lo));

  auto clamped = [lo, hi, lo_eval, stats](double phi) {
    if (phi <= lo) {
      if (stats) {
        ++stats->below_domain;
        stats->worst_low = std::min(stats->worst_low, phi);
      }
      return lo_eval;
    }
    if (phi > hi) {
      if (stats) {
        ++stats->above_domain;
        stats->worst_high = std::max(stats->worst_high, phi - hi);
      }
      return hi;
    }
    return phi;
  };

  FluxTerms flux;
  flux.A = [alpha, clamped](double phi, double, double) {
    return alpha.eval(clamped(phi)).first;
  };
  flux.dA_dphi = [alpha, clamped](double phi, double, double) {
    return alpha.eval(clamped(phi)).second;
  };
  flux.dA_dx = [](double, double, double) { return 0.0; };
  flux.B = [alpha, clamped, epsilon, r](double phi, double x, double) {
    const double a = alpha.eval(clamped(phi)).first;
    return (epsilon * std::exp(-x) + r) * phi + a * (1.0 - phi);
  };
  flux.C = [](double, double, double) { return 0.0; };
  return flux;
}

PhiField::PhiField(std::vector<double> grid, std::vector<double> times,
                   std::vector<double> values)
    : grid_(std::move(grid)), times_(std::move(times)),
      values_(std::move(values)) {
  if (values_.size() != grid_.size() * times_.size())
    throw ShapeMismatch("phi field storage does not match grid and times");
}

std::vector<double> thomas_solve(std::span<const double> lower,
                                 std::span<const double> diag,
                                 std::span<const double> upper,
                                 std::span<const double> rhs) {
  const std::size_t n = diag.size();
  if (lower.size() != n || upper.size() != n || rhs.size() != n)
    throw InvalidParams("tridiagonal bands must share one length");
  std::vector<double> c_star(n), d_star(n), x(n);

  if (std::abs(diag[0]) < 1e-14) throw ZeroPivot("zero pivot at row 0");
  c_star[0] = upper[0] / diag[0];
  d_star[0] = rhs[0] / diag[0];
  for (std::size_t i = 1; i < n; ++i) {
    const double m = diag[i] - lower[i] * c_star[i - 1];
    if (std::abs(m) < 1e-14)
      throw ZeroPivot("zero pivot at row " + std::to_string(i));
    c_star[i] = upper[i] / m;
    d_star[i] = (rhs[i] - lower[i] * d_star[i - 1]) / m;
  }
  x[n - 1] = d_star[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = d_star[i] - c_star[i] * x[i + 1];
  return x;
}

namespace {

void validate_problem(const PdeProblem& p) {
  if (!(p.x_lo < p.x_hi)) throw InvalidParams("domain bounds must be ordered");
  if (p.n_interior < 2) throw InvalidParams("need at least two interior cells");
  if (p.m_steps < 0) throw InvalidParams("negative step count");
  if (!(p.horizon > 0.0)) throw InvalidParams("horizon must be positive");
  if (!p.terminal) throw InvalidParams("terminal condition missing");
  if (!(p.epsilon >= 0.0) || !(p.r >= 0.0))
    throw InvalidParams("epsilon and r must be non-negative");
}

// Shared assembly for both schemes: coefficients evaluated on eval_layer at
// tau_eval, gradients implicit at tau_next, time derivative against
// base_layer. Boundary relations at tau_next are folded into the edge rows.
class Stepper {
 public:
  Stepper(const PdeProblem& p, ClampStats* clamps)
      : p_(p), h_(p.h()), k_(p.k()),
        flux_(make_model_flux(p.alpha, p.epsilon, p.r, clamps)) {
    faces_x_.resize(p.n_interior + 1);
    for (int q = 0; q <= p.n_interior; ++q)
      faces_x_[q] = p.x_lo + (q + 0.5) * h_;
  }

  void apply_ghosts(std::vector<double>& layer, double tau) const {
    const int n = p_.n_interior;
    layer[0] = p_.left_bc.ghost_weight_boundary() *
                   p_.left_bc.boundary_value(tau) +
               p_.left_bc.ghost_weight_inner(h_) * layer[1];
    layer[n + 1] = p_.right_bc.ghost_weight_boundary() *
                       p_.right_bc.boundary_value(tau) +
                   p_.right_bc.ghost_weight_inner(h_) * layer[n];
  }

  std::vector<double> linear_step(std::span<const double> base_layer,
                                  std::span<const double> eval_layer,
                                  double tau_eval, double tau_next,
                                  double* min_dominance) const {
    const int n = p_.n_interior;
    std::vector<double> D(n + 1), E(n + 1), F(n + 1);
    for (int q = 0; q <= n; ++q) {
      const double phi_face = 0.5 * (eval_layer[q] + eval_layer[q + 1]);
      D[q] = flux_.dA_dphi(phi_face, faces_x_[q], tau_eval);
      E[q] = flux_.dA_dx(phi_face, faces_x_[q], tau_eval);
      F[q] = flux_.B(phi_face, faces_x_[q], tau_eval);
    }

    const double lam = k_ / (h_ * h_);
    const double adv = k_ / h_;
    std::vector<double> lower(n), diag(n), upper(n), rhs(n);
    for (int i = 1; i <= n; ++i) {
      const int row = i - 1;
      lower[row] = -lam * D[i - 1];
      diag[row] = 1.0 + lam * (D[i - 1] + D[i]);
      upper[row] = -lam * D[i];
      const double source =
          flux_.C(eval_layer[i], p_.cell_center(i), tau_eval);
      rhs[row] = base_layer[i] +
                 adv * (E[i] - E[i - 1] + F[i] - F[i - 1]) + k_ * source;
    }

    // phi_0 = L*g_l + M*phi_1 and phi_{n+1} = R*g_r + N*phi_n at tau_next.
    {
      const double M = p_.left_bc.ghost_weight_inner(h_);
      const double L = p_.left_bc.ghost_weight_boundary();
      const double g = p_.left_bc.boundary_value(tau_next);
      diag[0] += lower[0] * M;
      rhs[0] -= lower[0] * L * g;
      lower[0] = 0.0;
    }
    {
      const double N = p_.right_bc.ghost_weight_inner(h_);
      const double R = p_.right_bc.ghost_weight_boundary();
      const double g = p_.right_bc.boundary_value(tau_next);
      diag[n - 1] += upper[n - 1] * N;
      rhs[n - 1] -= upper[n - 1] * R * g;
      upper[n - 1] = 0.0;
    }

    if (min_dominance) {
      for (int row = 0; row < n; ++row) {
        const double margin =
            diag[row] - std::abs(lower[row]) - std::abs(upper[row]);
        *min_dominance = std::min(*min_dominance, margin);
      }
    }

    std::vector<double> interior = thomas_solve(lower, diag, upper, rhs);
    std::vector<double> layer(n + 2);
    std::copy(interior.begin(), interior.end(), layer.begin() + 1);
    apply_ghosts(layer, tau_next);
    return layer;
  }

  std::vector<double> semi_step(std::span<const double> layer_j,
                                double tau_next, double* min_dominance) const {
    return linear_step(layer_j, layer_j, tau_next - k_, tau_next,
                       min_dominance);
  }

  std::pair<std::vector<double>, int> full_step(std::span<const double> layer_j,
                                                double tau_next, double tol,
                                                int max_iters,
                                                double* min_dominance) const {
    std::vector<double> iterate(layer_j.begin(), layer_j.end());
    apply_ghosts(iterate, tau_next);
    for (int l = 1; l <= max_iters; ++l) {
      std::vector<double> next =
          linear_step(layer_j, iterate, tau_next, tau_next, min_dominance);
      double diff = 0.0;
      for (int i = 1; i <= p_.n_interior; ++i)
        diff = std::max(diff, std::abs(next[i] - iterate[i]));
      iterate = std::move(next);
      if (diff < tol) return {std::move(iterate), l};
    }
    throw NoConvergence("micro-iterations did not reach tol " +
                        std::to_string(tol) + " within " +
                        std::to_string(max_iters) + " iterations");
  }

 private:
  const PdeProblem& p_;
  double h_, k_;
  FluxTerms flux_;
  std::vector<double> faces_x_;
};

}  // namespace

std::vector<double> step_semi_implicit(const PdeProblem& problem,
                                       std::span<const double> layer_j,
                                       double tau_next) {
  validate_problem(problem);
  if (static_cast<int>(layer_j.size()) != problem.n_interior + 2)
    throw ShapeMismatch("layer must have n_interior + 2 entries");
  Stepper stepper(problem, nullptr);
  std::vector<double> out = stepper.semi_step(layer_j, tau_next, nullptr);
  for (int i = 1; i <= problem.n_interior; ++i)
    if (!(out[i] > 0.0))
      throw NonPositivePhi("semi-implicit step produced phi <= 0 at cell " +
                           std::to_string(i));
  return out;
}

std::pair<std::vector<double>, int> step_fully_implicit(
    const PdeProblem& problem, std::span<const double> layer_j,
    double tau_next, double tol, int max_iters) {
  validate_problem(problem);
  if (static_cast<int>(layer_j.size()) != problem.n_interior + 2)
    throw ShapeMismatch("layer must have n_interior + 2 entries");
  if (!(tol > 0.0)) throw InvalidParams("tolerance must be positive");
  Stepper stepper(problem, nullptr);
  auto [out, iters] =
      stepper.full_step(layer_j, tau_next, tol, max_iters, nullptr);
  for (int i = 1; i <= problem.n_interior; ++i)
    if (!(out[i] > 0.0))
      throw NonPositivePhi("fully-implicit step produced phi <= 0 at cell " +
                           std::to_string(i));
  return {std::move(out), iters};
}

PhiField solve_pde(const PdeProblem& problem, const SolveOptions& options,
                   SolveStats* stats) {
  validate_problem(problem);
  const int n = problem.n_interior;
  const int m = problem.m_steps;

  std::vector<double> grid(n + 2);
  for (int i = 0; i <= n + 1; ++i) grid[i] = problem.cell_center(i);
  std::vector<double> times(m + 1);
  for (int j = 0; j <= m; ++j)
    times[j] = m == 0 ? 0.0 : problem.horizon * j / m;

  std::vector<double> layer(n + 2);
  double phi_plus = 0.0;
  for (int i = 0; i <= n + 1; ++i) {
    layer[i] = problem.terminal(grid[i]);
    if (!(layer[i] > 0.0))
      throw InvalidParams("terminal condition must be positive");
    phi_plus = std::max(phi_plus, layer[i]);
  }
  // The comparison bound majorizes the terminal data and, on a bounded
  // domain, any prescribed Dirichlet data.
  for (const BoundaryCondition* bc : {&problem.left_bc, &problem.right_bc})
    if (bc->kind == BoundaryCondition::Kind::Dirichlet)
      for (int j = 0; j <= m; ++j)
        phi_plus = std::max(phi_plus, bc->boundary_value(times[j]));

  SolveStats local_stats;
  SolveStats& st = stats ? *stats : local_stats;
  st.min_diag_dominance = std::numeric_limits<double>::infinity();
  st.clamps.worst_low = std::numeric_limits<double>::infinity();

  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(m + 1) * (n + 2));
  values.insert(values.end(), layer.begin(), layer.end());

  Stepper stepper(problem, &st.clamps);
  for (int j = 0; j < m; ++j) {
    const double tau_next = times[j + 1];
    std::vector<double> next;
    int iters = 1;
    try {
      if (options.scheme == Scheme::SemiImplicit) {
        next = stepper.semi_step(layer, tau_next, &st.min_diag_dominance);
      } else {
        std::tie(next, iters) =
            stepper.full_step(layer, tau_next, options.tol, options.max_iters,
                              &st.min_diag_dominance);
      }
    } catch (const NoConvergence& e) {
      throw NoConvergence(std::string(e.what()) + " at layer " +
                          std::to_string(j + 1));
    } catch (const ZeroPivot& e) {
      throw ZeroPivot(std::string(e.what()) + " at layer " +
                      std::to_string(j + 1));
    }

    for (int i = 0; i <= n + 1; ++i) {
      if (!std::isfinite(next[i]))
        throw Error("non-finite value at layer " + std::to_string(j + 1));
      if (i >= 1 && i <= n && !(next[i] > 0.0))
        throw NonPositivePhi("phi <= 0 at layer " + std::to_string(j + 1) +
                             ", cell " + std::to_string(i));
      if (next[i] > phi_plus + 1e-6)
        throw Error("comparison bound violated at layer " +
                    std::to_string(j + 1) + ": phi = " +
                    std::to_string(next[i]) + " > " + std::to_string(phi_plus));
    }

    st.iters_per_step.push_back(iters);
    st.max_iters_used = std::max(st.max_iters_used, iters);
    st.total_iters += iters;
    values.insert(values.end(), next.begin(), next.end());
    layer = std::move(next);
  }

  if (st.clamps.worst_low == std::numeric_limits<double>::infinity())
    st.clamps.worst_low = 0.0;
  if (st.min_diag_dominance == std::numeric_limits<double>::infinity())
    st.min_diag_dominance = 0.0;
  return PhiField(std::move(grid), std::move(times), std::move(values));
}

}  // namespace riccati
