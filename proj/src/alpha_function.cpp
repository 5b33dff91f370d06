#include "riccati/alpha_function.hpp"

#include <algorithm>
#include <cmath>

namespace riccati {

namespace {

constexpr double kBreakpointResolution = 1e-8;
constexpr int kInitialScanIntervals = 1024;
constexpr int kMaxRefineRounds = 4;

// A piece is identified by its pinned set plus, for the Merton variant,
// whether the budget constraint is tight.
struct Signature {
  std::vector<int> active_set;
  bool budget_active = true;

  bool operator==(const Signature&) const = default;
};

Signature signature_at(const MarketModel& model, double phi,
                       ConstraintSet constraints) {
  const QpSolution sol = solve_qp(model, phi, constraints);
  Signature sig;
  sig.active_set = sol.active_set;
  sig.budget_active = constraints == ConstraintSet::Simplex ||
                      std::abs(sol.theta.sum() - 1.0) <= 1e-9;
  return sig;
}

// Recursive bisection of an active-set change down to the breakpoint
// resolution. Appends located breakpoints in increasing order.
void bisect_changes(const MarketModel& model, ConstraintSet constraints,
                    double lo, const Signature& sig_lo, double hi,
                    const Signature& sig_hi, std::vector<double>* out) {
  if (sig_lo == sig_hi) return;
  if (hi - lo <= kBreakpointResolution) {
    out->push_back(0.5 * (lo + hi));
    return;
  }
  const double mid = 0.5 * (lo + hi);
  const Signature sig_mid = signature_at(model, mid, constraints);
  bisect_changes(model, constraints, lo, sig_lo, mid, sig_mid, out);
  bisect_changes(model, constraints, mid, sig_mid, hi, sig_hi, out);
}

std::vector<double> scan_breakpoints(const MarketModel& model,
                                     ConstraintSet constraints, double lo,
                                     double hi, int intervals) {
  std::vector<double> phis(intervals + 1);
  for (int k = 0; k <= intervals; ++k)
    phis[k] = lo + (hi - lo) * k / intervals;
  std::vector<Signature> sigs(phis.size());
  for (std::size_t k = 0; k < phis.size(); ++k)
    sigs[k] = signature_at(model, phis[k], constraints);

  std::vector<double> bps;
  for (std::size_t k = 0; k + 1 < phis.size(); ++k)
    bisect_changes(model, constraints, phis[k], sigs[k], phis[k + 1],
                   sigs[k + 1], &bps);
  return bps;
}

AlphaPiece make_piece(const MarketModel& model, ConstraintSet constraints,
                      double lo, double hi) {
  const double mid = 0.5 * (lo + hi);
  const Signature sig = signature_at(model, mid, constraints);
  const ReducedCoefficients rc =
      reduced_coefficients(model, sig.active_set, sig.budget_active);
  AlphaPiece piece;
  piece.lo = lo;
  piece.hi = hi;
  piece.a = rc.a;
  piece.b = rc.b;
  piece.c = rc.c;
  piece.active_set = sig.active_set;
  piece.theta_a = rc.theta_a;
  piece.theta_b = rc.theta_b;
  piece.budget_active = rc.budget_active;
  return piece;
}

// A piece is accepted when the QP at interior probes reproduces its active
// set and its rational form matches the QP value.
bool piece_consistent(const MarketModel& model, ConstraintSet constraints,
                      const AlphaPiece& piece) {
  for (double q : {0.25, 0.5, 0.75}) {
    const double phi = piece.lo + q * (piece.hi - piece.lo);
    const QpSolution sol = solve_qp(model, phi, constraints);
    if (sol.active_set != piece.active_set) return false;
    if (std::abs(sol.value - piece.alpha(phi)) >
        1e-9 * std::max(1.0, std::abs(sol.value)))
      return false;
  }
  return true;
}

}  // namespace

PiecewiseAlpha::PiecewiseAlpha(std::vector<AlphaPiece> pieces)
    : pieces_(std::move(pieces)) {
  if (pieces_.empty()) throw InvalidParams("piecewise alpha needs pieces");
  for (std::size_t p = 0; p < pieces_.size(); ++p) {
    if (!(pieces_[p].lo < pieces_[p].hi))
      throw InvalidParams("piece interval is empty");
    if (p > 0 && std::abs(pieces_[p].lo - pieces_[p - 1].hi) > 1e-12)
      throw InvalidParams("pieces do not tile the domain");
  }
  alpha_at_hi_.resize(pieces_.size());
  for (std::size_t p = 0; p < pieces_.size(); ++p)
    alpha_at_hi_[p] = pieces_[p].alpha(pieces_[p].hi);
}

std::size_t PiecewiseAlpha::piece_index(double phi) const {
  if (!(phi > phi_min()) || phi > phi_max())
    throw OutOfDomain("phi outside the covered alpha domain");
  // First piece whose closed right end reaches phi.
  std::size_t lo = 0, hi = pieces_.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (pieces_[mid].hi >= phi)
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

const AlphaPiece& PiecewiseAlpha::piece_at(double phi) const {
  return pieces_[piece_index(phi)];
}

std::pair<double, double> PiecewiseAlpha::eval(double phi) const {
  const AlphaPiece& piece = piece_at(phi);
  return {piece.alpha(phi), piece.alpha_prime(phi)};
}

Eigen::VectorXd PiecewiseAlpha::theta(double phi) const {
  return piece_at(phi).theta(phi);
}

std::vector<double> PiecewiseAlpha::breakpoints() const {
  std::vector<double> bps;
  for (std::size_t p = 0; p + 1 < pieces_.size(); ++p)
    bps.push_back(pieces_[p].hi);
  return bps;
}

double PiecewiseAlpha::inverse(double z) const {
  const double z_lo = pieces_.front().alpha(phi_min());
  const double z_hi = alpha_at_hi_.back();
  if (z < z_lo - 1e-12 || z > z_hi + 1e-12)
    throw OutOfRange("z outside the image of alpha");

  // First piece whose right-end value reaches z (alpha is increasing).
  std::size_t p = std::lower_bound(alpha_at_hi_.begin(), alpha_at_hi_.end(), z) -
                  alpha_at_hi_.begin();
  if (p == pieces_.size()) p = pieces_.size() - 1;
  const AlphaPiece& piece = pieces_[p];

  double phi;
  if (piece.a > 0.0 && piece.b > 0.0) {
    const double s = z - piece.c;
    phi = (s + std::sqrt(s * s + 4.0 * piece.a * piece.b)) / (2.0 * piece.a);
  } else if (piece.a > 0.0) {
    phi = (z - piece.c) / piece.a;
  } else if (piece.b > 0.0) {
    phi = piece.b / (piece.c - z);  // slack-budget piece: alpha = c - b/phi
  } else {
    throw OutOfRange("alpha is constant on the bracketing piece");
  }
  phi = std::clamp(phi, piece.lo, piece.hi);
  // One Newton step removes the last bits of roundoff.
  for (int it = 0; it < 2 && std::abs(piece.alpha(phi) - z) > 1e-13; ++it)
    phi -= (piece.alpha(phi) - z) / piece.alpha_prime(phi);
  return std::clamp(phi, piece.lo, piece.hi);
}

PiecewiseAlpha build_piecewise_alpha(const MarketModel& model, double phi_min,
                                     double phi_max,
                                     ConstraintSet constraints) {
  if (!(phi_min > 0.0)) throw NonPositivePhi("phi_min must be positive");
  if (!(phi_min < phi_max)) throw EmptyRange("phi_min must be below phi_max");

  std::vector<double> bps = scan_breakpoints(model, constraints, phi_min,
                                             phi_max, kInitialScanIntervals);

  for (int round = 0; round < kMaxRefineRounds; ++round) {
    std::vector<double> bounds;
    bounds.push_back(phi_min);
    bounds.insert(bounds.end(), bps.begin(), bps.end());
    bounds.push_back(phi_max);

    std::vector<AlphaPiece> pieces;
    bool all_consistent = true;
    for (std::size_t p = 0; p + 1 < bounds.size(); ++p) {
      AlphaPiece piece = make_piece(model, constraints, bounds[p], bounds[p + 1]);
      if (!piece_consistent(model, constraints, piece)) {
        // A hidden change inside: re-scan this interval more finely.
        all_consistent = false;
        std::vector<double> extra = scan_breakpoints(
            model, constraints, bounds[p], bounds[p + 1], 64);
        bps.insert(bps.end(), extra.begin(), extra.end());
      }
      pieces.push_back(std::move(piece));
    }
    if (all_consistent) return PiecewiseAlpha(std::move(pieces));
    std::sort(bps.begin(), bps.end());
    bps.erase(std::unique(bps.begin(), bps.end(),
                          [](double x, double y) {
                            return std::abs(x - y) <= kBreakpointResolution;
                          }),
              bps.end());
  }
  throw Error("piecewise alpha construction did not stabilize");
}

TwoAssetResult alpha_two_asset(const TwoAssetParams& p, double phi) {
  if (!(phi > 0.0)) throw NonPositivePhi("phi must be positive");
  if (!(p.sigma_s > 0.0) || !(p.sigma_b > 0.0))
    throw InvalidParams("volatilities must be positive");
  if (!(p.mu_s >= p.mu_b) || !(p.mu_b >= 0.0))
    throw InvalidParams("require mu_s >= mu_b >= 0");
  if (p.rho < -1.0 || p.rho > 1.0) throw InvalidParams("rho outside [-1,1]");
  if (p.sigma_b - p.rho * p.sigma_s < -1e-15)
    throw InvalidParams("require sigma_b - rho*sigma_s >= 0");

  const double gamma = p.sigma_s * p.sigma_s + p.sigma_b * p.sigma_b -
                       2.0 * p.sigma_s * p.sigma_b * p.rho;
  const double delta = p.sigma_b * p.sigma_b - p.sigma_s * p.sigma_b * p.rho;

  TwoAssetResult res;
  if (gamma <= 1e-15) {
    // Perfectly substitutable assets: hold the higher-return one.
    res.theta_stock = 1.0;
    res.alpha = 0.5 * p.sigma_s * p.sigma_s * phi - p.mu_s;
    return res;
  }

  const double omega = (p.mu_s - p.mu_b) / gamma;
  const double theta_uc = omega / phi + delta / gamma;
  if (theta_uc >= 1.0) {
    res.theta_stock = 1.0;
    res.alpha = 0.5 * p.sigma_s * p.sigma_s * phi - p.mu_s;
  } else {
    res.theta_stock = theta_uc;
    const double cross = p.sigma_s * p.sigma_b;
    res.alpha = -p.mu_b - omega * delta - 0.5 * omega * omega * gamma / phi +
                0.5 * phi * (1.0 - p.rho * p.rho) * cross * cross / gamma;
  }
  return res;
}

}  // namespace riccati
