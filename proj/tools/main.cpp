// Command-line front end: subcommands alpha, solve, wave, eoc, portfolio.
//
// Exit codes: 0 success, 1 input/configuration error, 2 numerical failure.
// Errors print one machine-parsable line on stderr: "error: <Kind>: <what>".

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "riccati/csv.hpp"
#include "riccati/manifest.hpp"
#include "riccati/portfolio.hpp"
#include "riccati/traveling_wave.hpp"
#include "riccati/verification.hpp"

using namespace riccati;

namespace {

class StageTimer {
 public:
  explicit StageTimer(RunManifest* manifest) : manifest_(manifest) {}

  template <typename Fn>
  auto time(const std::string& stage, Fn&& fn) -> decltype(fn()) {
    const auto t0 = std::chrono::steady_clock::now();
    auto finish = [&] {
      const auto t1 = std::chrono::steady_clock::now();
      manifest_->timings_ms[stage] =
          std::chrono::duration<double, std::milli>(t1 - t0).count();
    };
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      finish();
    } else {
      auto result = fn();
      finish();
      return result;
    }
  }

 private:
  RunManifest* manifest_;
};

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

void note_input(RunManifest* manifest, const std::string& path) {
  manifest->input_digests[path] = hex64(csv::fnv1a_file(path));
}

void write_manifest(const RunManifest& manifest, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write manifest: " + path);
  out << manifest.to_json().dump(2) << "\n";
}

std::string join_active_set(const std::vector<int>& active) {
  std::string s;
  for (std::size_t i = 0; i < active.size(); ++i) {
    if (i) s += ';';
    s += std::to_string(active[i] + 1);  // 1-based in file outputs
  }
  return s;
}

// Piecewise-linear table loaded from a two-column CSV, used for Dirichlet
// data and tabulated terminal conditions.
std::function<double(double)> load_table_fn(const std::string& path,
                                            const std::string& what) {
  std::vector<double> xs, ys;
  for (const std::string& line : csv::read_lines(path)) {
    const auto fields = csv::split_line(line);
    if (fields.size() != 2)
      throw ConfigError(what + " table rows need two columns: " + path);
    if (xs.empty() && (fields[0] == "x" || fields[0] == "tau")) continue;
    xs.push_back(csv::parse_double(fields[0], what));
    ys.push_back(csv::parse_double(fields[1], what));
  }
  if (xs.size() < 2) throw ConfigError(what + " table needs two rows");
  for (std::size_t i = 0; i + 1 < xs.size(); ++i)
    if (!(xs[i] < xs[i + 1]))
      throw ConfigError(what + " table abscissae must increase");
  return [xs, ys](double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    const std::size_t hi =
        std::lower_bound(xs.begin(), xs.end(), x) - xs.begin();
    const double t = (x - xs[hi - 1]) / (xs[hi] - xs[hi - 1]);
    return ys[hi - 1] + t * (ys[hi] - ys[hi - 1]);
  };
}

struct BcSpec {
  BoundaryCondition bc;
  double dirichlet_sup = 0.0;  // max of tabulated data, when Dirichlet
};

BcSpec parse_bc(const std::string& text, RunManifest* manifest) {
  BcSpec spec;
  if (text == "neumann") {
    spec.bc = BoundaryCondition::neumann();
    return spec;
  }
  if (text.rfind("robin:", 0) == 0) {
    spec.bc = BoundaryCondition::robin(
        csv::parse_double(text.substr(6), "robin coefficient"));
    return spec;
  }
  if (text.rfind("dirichlet:", 0) == 0) {
    const std::string path = text.substr(10);
    note_input(manifest, path);
    bool first = true;
    for (const std::string& line : csv::read_lines(path)) {
      const auto fields = csv::split_line(line);
      if (first && fields.size() == 2 && fields[0] == "tau") {
        first = false;
        continue;
      }
      first = false;
      if (fields.size() == 2)
        spec.dirichlet_sup =
            std::max(spec.dirichlet_sup,
                     csv::parse_double(fields[1], "dirichlet value"));
    }
    spec.bc = BoundaryCondition::dirichlet(load_table_fn(path, "dirichlet"));
    return spec;
  }
  throw ConfigError("cannot parse boundary condition '" + text +
                    "' (expected dirichlet:<file>|robin:<d>|neumann)");
}

void write_alpha_csv(const PiecewiseAlpha& alpha, int samples,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "phi,alpha,alpha_prime,active_set,piece_id\n";
  const double lo = alpha.phi_min();
  const double hi = alpha.phi_max();
  for (int s = 1; s <= samples; ++s) {
    const double phi = lo + (hi - lo) * s / samples;
    const std::size_t idx = alpha.piece_index(phi);
    const AlphaPiece& piece = alpha.pieces()[idx];
    out << csv::format_double(phi) << ','
        << csv::format_double(piece.alpha(phi)) << ','
        << csv::format_double(piece.alpha_prime(phi)) << ','
        << join_active_set(piece.active_set) << ',' << idx << "\n";
  }
}

nlohmann::json pieces_json(const PiecewiseAlpha& alpha) {
  nlohmann::json pieces = nlohmann::json::array();
  for (const AlphaPiece& piece : alpha.pieces()) {
    nlohmann::json active = nlohmann::json::array();
    for (int i : piece.active_set) active.push_back(i + 1);
    nlohmann::json theta_a = nlohmann::json::array();
    nlohmann::json theta_b = nlohmann::json::array();
    for (int i = 0; i < piece.theta_a.size(); ++i) {
      theta_a.push_back(piece.theta_a(i));
      theta_b.push_back(piece.theta_b(i));
    }
    pieces.push_back({{"lo", piece.lo},
                      {"hi", piece.hi},
                      {"a", piece.a},
                      {"b", piece.b},
                      {"c", piece.c},
                      {"active_set", active},
                      {"theta_a", theta_a},
                      {"theta_b", theta_b},
                      {"budget_active", piece.budget_active}});
  }
  return nlohmann::json{{"phi_min", alpha.phi_min()},
                        {"phi_max", alpha.phi_max()},
                        {"breakpoints", alpha.breakpoints()},
                        {"pieces", pieces}};
}

PiecewiseAlpha alpha_from_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open alpha json: " + path);
  nlohmann::json j;
  in >> j;
  std::vector<AlphaPiece> pieces;
  for (const auto& pj : j.at("pieces")) {
    AlphaPiece piece;
    piece.lo = pj.at("lo").get<double>();
    piece.hi = pj.at("hi").get<double>();
    piece.a = pj.at("a").get<double>();
    piece.b = pj.at("b").get<double>();
    piece.c = pj.at("c").get<double>();
    for (const auto& i : pj.at("active_set"))
      piece.active_set.push_back(i.get<int>() - 1);
    const auto& ta = pj.at("theta_a");
    const auto& tb = pj.at("theta_b");
    piece.theta_a.resize(ta.size());
    piece.theta_b.resize(tb.size());
    for (std::size_t i = 0; i < ta.size(); ++i) {
      piece.theta_a(i) = ta[i].get<double>();
      piece.theta_b(i) = tb[i].get<double>();
    }
    piece.budget_active = pj.value("budget_active", true);
    pieces.push_back(std::move(piece));
  }
  return PiecewiseAlpha(std::move(pieces));
}

void write_phi_csv(const PhiField& field, int stride,
                   const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "tau,x,phi\n";
  auto emit_layer = [&](int j) {
    for (int i = 0; i < field.nodes(); ++i)
      out << csv::format_double(field.times()[j]) << ','
          << csv::format_double(field.grid()[i]) << ','
          << csv::format_double(field(j, i)) << "\n";
  };
  for (int j = 0; j < field.layers(); j += stride) emit_layer(j);
  if ((field.layers() - 1) % stride != 0) emit_layer(field.layers() - 1);
}

void write_strategy_csv(const StrategySurface& surf, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "t,x,y";
  for (int a = 0; a < surf.n_assets; ++a) out << ",theta_" << (a + 1);
  out << ",active_set\n";
  for (int s = 0; s < surf.slices(); ++s)
    for (int i = 0; i < surf.nodes(); ++i) {
      out << csv::format_double(surf.t[s]) << ','
          << csv::format_double(surf.x[i]) << ','
          << csv::format_double(surf.y[i]);
      for (int a = 0; a < surf.n_assets; ++a)
        out << ',' << csv::format_double(surf.weight(s, i, a));
      out << ',' << join_active_set(surf.active_set(s, i)) << "\n";
    }
}

// ----- subcommand option blocks -------------------------------------------

struct AlphaOpts {
  std::string model;
  double phi_min = 1e-3;
  double phi_max = 10.0;
  int samples = 1000;
  bool merton = false;
  std::string out = "alpha.csv";
  std::string breakpoints;
  std::string manifest;
};

int run_alpha(const AlphaOpts& o) {
  RunManifest manifest;
  manifest.subcommand = "alpha";
  manifest.version = kLibraryVersion;
  manifest.config = {{"model", o.model},     {"phi_min", o.phi_min},
                     {"phi_max", o.phi_max}, {"samples", o.samples},
                     {"merton", o.merton},   {"out", o.out}};
  note_input(&manifest, o.model);

  StageTimer timer(&manifest);
  const MarketModel model =
      timer.time("load", [&] { return load_model_csv(o.model); });
  const PiecewiseAlpha alpha = timer.time("build", [&] {
    return build_piecewise_alpha(
        model, o.phi_min, o.phi_max,
        o.merton ? ConstraintSet::MertonSimplex : ConstraintSet::Simplex);
  });
  timer.time("write", [&] { write_alpha_csv(alpha, o.samples, o.out); });
  manifest.results = {{"pieces", alpha.pieces().size()},
                      {"breakpoints", alpha.breakpoints()}};
  if (!o.breakpoints.empty()) {
    std::ofstream bp(o.breakpoints);
    if (!bp) throw ConfigError("cannot write " + o.breakpoints);
    bp << pieces_json(alpha).dump(2) << "\n";
  }
  if (!o.manifest.empty()) write_manifest(manifest, o.manifest);
  return 0;
}

struct SolveOpts {
  std::string model;
  double epsilon = 0.0;
  double r = 0.0;
  double x_lo = -4.0;
  double x_hi = 4.0;
  int n_interior = 79;
  double horizon = 10.0;
  int m_steps = 0;
  std::string k_rule = "0.1*h";
  std::string scheme = "full";
  double tol = 1e-9;
  int max_iters = 100;
  std::string bc_left = "neumann";
  std::string bc_right = "neumann";
  std::string terminal;
  double phi_min = 1e-3;
  std::string out = "phi.csv";
  std::string manifest = "manifest.json";
  int stride = 1;
};

int run_solve(const SolveOpts& o) {
  RunManifest manifest;
  manifest.subcommand = "solve";
  manifest.version = kLibraryVersion;

  if (o.scheme != "semi" && o.scheme != "full")
    throw ConfigError("--scheme must be semi or full");
  const Scheme scheme =
      o.scheme == "semi" ? Scheme::SemiImplicit : Scheme::FullyImplicit;

  note_input(&manifest, o.model);
  const MarketModel model = load_model_csv(o.model);

  std::function<double(double)> terminal;
  if (o.terminal.rfind("cara:", 0) == 0) {
    terminal = cara_terminal(
        csv::parse_double(o.terminal.substr(5), "cara coefficient"));
  } else if (o.terminal.rfind("csv:", 0) == 0) {
    const std::string path = o.terminal.substr(4);
    note_input(&manifest, path);
    terminal = load_table_fn(path, "terminal");
  } else {
    throw ConfigError("--terminal must be cara:<a> or csv:<file>");
  }

  const BcSpec left = parse_bc(o.bc_left, &manifest);
  const BcSpec right = parse_bc(o.bc_right, &manifest);

  const double h = (o.x_hi - o.x_lo) / (o.n_interior + 1);
  int m_steps = o.m_steps;
  if (m_steps <= 0) {
    const KRule rule = KRule::parse(o.k_rule);
    m_steps = std::max(1, int(std::llround(o.horizon / rule.k_for(h))));
  }

  // Alpha must cover the terminal and any Dirichlet data.
  double phi_cap = 0.0;
  for (int i = 0; i <= o.n_interior + 1; ++i)
    phi_cap = std::max(phi_cap, terminal(o.x_lo + i * h));
  phi_cap = std::max({phi_cap, left.dirichlet_sup, right.dirichlet_sup});
  if (!(phi_cap > o.phi_min))
    throw ConfigError("terminal data must exceed the alpha domain floor");

  const PiecewiseAlpha alpha =
      build_piecewise_alpha(model, o.phi_min, phi_cap);

  PdeProblem problem{o.epsilon, o.r,     o.x_lo,    o.x_hi,
                     o.n_interior, m_steps, o.horizon, terminal,
                     left.bc,      right.bc, alpha};
  SolveOptions options;
  options.scheme = scheme;
  options.tol = o.tol;
  options.max_iters = o.max_iters;

  manifest.config = {{"model", o.model},      {"epsilon", o.epsilon},
                     {"r", o.r},              {"x_lo", o.x_lo},
                     {"x_hi", o.x_hi},        {"n", o.n_interior},
                     {"T", o.horizon},        {"m", m_steps},
                     {"scheme", o.scheme},    {"tol", o.tol},
                     {"max_iters", o.max_iters}, {"bc_left", o.bc_left},
                     {"bc_right", o.bc_right}, {"terminal", o.terminal},
                     {"phi_min", o.phi_min},  {"out", o.out},
                     {"stride", o.stride}};

  StageTimer timer(&manifest);
  SolveStats stats;
  const PhiField field =
      timer.time("solve", [&] { return solve_pde(problem, options, &stats); });
  timer.time("write",
             [&] { write_phi_csv(field, std::max(1, o.stride), o.out); });

  manifest.results = {{"h", problem.h()},
                      {"k", o.horizon / m_steps},
                      {"max_iters_used", stats.max_iters_used},
                      {"total_iters", stats.total_iters},
                      {"iters_per_step", stats.iters_per_step}};
  if (stats.clamps.below_domain > 0 || stats.clamps.above_domain > 0)
    manifest.warnings.push_back(
        "alpha domain clamps: " + std::to_string(stats.clamps.below_domain) +
        " below, " + std::to_string(stats.clamps.above_domain) + " above");
  if (!o.manifest.empty()) write_manifest(manifest, o.manifest);
  return 0;
}

struct WaveOpts {
  std::string model;
  std::string alpha_json;
  double v_minus = 0.0;
  double v_plus = 0.0;
  std::vector<double> domain{-4.0, 4.0};
  double horizon = 10.0;
  double rel_tol = 1e-8;
  double sample_dx = 1e-3;
  double phi_min = 1e-3;
  double phi_max = 10.0;
  std::string out = "profile.csv";
  std::string json = "wave.json";
  std::string manifest;
};

int run_wave(const WaveOpts& o) {
  RunManifest manifest;
  manifest.subcommand = "wave";
  manifest.version = kLibraryVersion;

  if (o.domain.size() != 2 || !(o.domain[0] < o.domain[1]))
    throw ConfigError("--domain needs x_lo,x_hi with x_lo < x_hi");
  if (o.model.empty() == o.alpha_json.empty())
    throw ConfigError("give exactly one of --model or --alpha-json");

  StageTimer timer(&manifest);
  PiecewiseAlpha alpha = timer.time("alpha", [&] {
    if (!o.alpha_json.empty()) {
      note_input(&manifest, o.alpha_json);
      return alpha_from_json(o.alpha_json);
    }
    note_input(&manifest, o.model);
    return build_piecewise_alpha(load_model_csv(o.model), o.phi_min,
                                 o.phi_max);
  });

  const WaveParameters wp = wave_parameters(alpha, o.v_minus, o.v_plus);
  const double xi_lo = o.domain[0] + std::min(0.0, wp.c * o.horizon);
  const double xi_hi = o.domain[1] + std::max(0.0, wp.c * o.horizon);
  const WaveBenchmark bench = timer.time("integrate", [&] {
    return make_wave_benchmark(alpha, o.v_minus, o.v_plus, xi_lo, xi_hi,
                               o.rel_tol, o.sample_dx);
  });

  timer.time("write", [&] {
    std::ofstream out(o.out);
    if (!out) throw ConfigError("cannot write " + o.out);
    out << "xi,v\n";
    for (std::size_t i = 0; i < bench.profile.xi().size(); ++i)
      out << csv::format_double(bench.profile.xi()[i]) << ','
          << csv::format_double(bench.profile.v()[i]) << "\n";
  });

  const nlohmann::json header{{"c", bench.c},
                              {"K0", bench.K0},
                              {"z_minus", bench.z_minus},
                              {"z_plus", bench.z_plus},
                              {"v_minus", o.v_minus},
                              {"v_plus", o.v_plus},
                              {"xi_lo", xi_lo},
                              {"xi_hi", xi_hi}};
  if (!o.json.empty()) {
    std::ofstream jo(o.json);
    if (!jo) throw ConfigError("cannot write " + o.json);
    jo << header.dump(2) << "\n";
  }
  manifest.config = {{"v_minus", o.v_minus},  {"v_plus", o.v_plus},
                     {"domain", o.domain},    {"T", o.horizon},
                     {"rel_tol", o.rel_tol},  {"sample_dx", o.sample_dx},
                     {"model", o.model},      {"alpha_json", o.alpha_json},
                     {"out", o.out}};
  manifest.results = header;
  if (!o.manifest.empty()) write_manifest(manifest, o.manifest);
  return 0;
}

struct EocOpts {
  std::string model;
  std::vector<double> levels;
  std::string k_rule = "0.1*h";
  double v_minus = 0.3;
  double v_plus = 1.5;
  double x_lo = -4.0;
  double x_hi = 4.0;
  double horizon = 10.0;
  std::string scheme = "full";
  double phi_min = 1e-3;
  double phi_max = 10.0;
  std::string out = "eoc.csv";
  std::string manifest;
};

int run_eoc(const EocOpts& o) {
  RunManifest manifest;
  manifest.subcommand = "eoc";
  manifest.version = kLibraryVersion;

  if (o.scheme != "semi" && o.scheme != "full")
    throw ConfigError("--scheme must be semi or full");
  const KRule rule = KRule::parse(o.k_rule);

  note_input(&manifest, o.model);
  StageTimer timer(&manifest);
  const MarketModel model = load_model_csv(o.model);
  const PiecewiseAlpha alpha = timer.time("alpha", [&] {
    return build_piecewise_alpha(model, o.phi_min, o.phi_max);
  });
  const WaveParameters wp = wave_parameters(alpha, o.v_minus, o.v_plus);
  const double xi_lo = o.x_lo + std::min(0.0, wp.c * o.horizon);
  const double xi_hi = o.x_hi + std::max(0.0, wp.c * o.horizon);
  const WaveBenchmark bench = timer.time("wave", [&] {
    return make_wave_benchmark(alpha, o.v_minus, o.v_plus, xi_lo, xi_hi);
  });

  EocConfig config;
  config.x_lo = o.x_lo;
  config.x_hi = o.x_hi;
  config.horizon = o.horizon;
  config.scheme =
      o.scheme == "semi" ? Scheme::SemiImplicit : Scheme::FullyImplicit;
  const std::vector<ErrorReport> reports = timer.time(
      "study", [&] { return eoc_study(bench, config, rule, o.levels); });

  std::ofstream out(o.out);
  if (!out) throw ConfigError("cannot write " + o.out);
  out << "h,k,linf_l2_err,eoc_linf_l2,l2_w12_err,eoc_l2_w12\n";
  std::printf("%-10s %-14s %-8s %-14s %-8s\n", "h", "LinfL2-err", "EOC",
              "L2W12-err", "EOC");
  for (const ErrorReport& rep : reports) {
    out << csv::format_double(rep.h) << ',' << csv::format_double(rep.k)
        << ',' << csv::format_double(rep.err_linf_l2) << ','
        << (rep.eoc_linf ? csv::format_double(*rep.eoc_linf) : "") << ','
        << csv::format_double(rep.err_l2_w12) << ','
        << (rep.eoc_l2 ? csv::format_double(*rep.eoc_l2) : "") << "\n";
    char e1[16] = "-", e2[16] = "-";
    if (rep.eoc_linf) std::snprintf(e1, sizeof(e1), "%.3f", *rep.eoc_linf);
    if (rep.eoc_l2) std::snprintf(e2, sizeof(e2), "%.3f", *rep.eoc_l2);
    std::printf("%-10.5g %-14.6e %-8s %-14.6e %-8s\n", rep.h, rep.err_linf_l2,
                e1, rep.err_l2_w12, e2);
  }

  manifest.config = {{"model", o.model},   {"levels", o.levels},
                     {"k_rule", rule.str()}, {"v_minus", o.v_minus},
                     {"v_plus", o.v_plus}, {"x_lo", o.x_lo},
                     {"x_hi", o.x_hi},     {"T", o.horizon},
                     {"scheme", o.scheme}, {"out", o.out}};
  nlohmann::json rows = nlohmann::json::array();
  for (const ErrorReport& rep : reports) {
    nlohmann::json row{{"h", rep.h},
                       {"k", rep.k},
                       {"linf_l2", rep.err_linf_l2},
                       {"l2_w12", rep.err_l2_w12}};
    if (rep.eoc_linf) row["eoc_linf_l2"] = *rep.eoc_linf;
    if (rep.eoc_l2) row["eoc_l2_w12"] = *rep.eoc_l2;
    rows.push_back(row);
  }
  manifest.results = {{"c", wp.c}, {"K0", wp.K0}, {"rows", rows}};
  if (!o.manifest.empty()) write_manifest(manifest, o.manifest);
  return 0;
}

struct PortfolioOpts {
  std::string prices;
  std::string model;
  int periods_per_year = 252;
  double a = 9.0;
  double epsilon = 1.0;
  double r = 0.0;
  double horizon = 10.0;
  double y_lo = 0.01;
  double y_hi = 10.0;
  double h = 0.1;
  std::string k_rule = "0.1*h^2";
  std::string scheme = "full";
  double tol = 1e-9;
  int max_iters = 100;
  bool merton = false;
  int strategy_stride = 0;
  int phi_stride = 0;
  std::string out_dir = ".";
};

int run_portfolio(const PortfolioOpts& o) {
  RunManifest manifest;
  manifest.subcommand = "portfolio";
  manifest.version = kLibraryVersion;

  PipelineConfig cfg;
  if (!o.prices.empty()) {
    cfg.prices_path = o.prices;
    note_input(&manifest, o.prices);
  }
  if (!o.model.empty()) {
    cfg.model_path = o.model;
    note_input(&manifest, o.model);
  }
  cfg.periods_per_year = o.periods_per_year;
  cfg.risk_aversion = o.a;
  cfg.epsilon = o.epsilon;
  cfg.r = o.r;
  cfg.horizon = o.horizon;
  cfg.y_lo = o.y_lo;
  cfg.y_hi = o.y_hi;
  cfg.h = o.h;
  const KRule rule = KRule::parse(o.k_rule);
  cfg.k_coef = rule.coef;
  cfg.k_power = rule.power;
  if (o.scheme != "semi" && o.scheme != "full")
    throw ConfigError("--scheme must be semi or full");
  cfg.scheme =
      o.scheme == "semi" ? Scheme::SemiImplicit : Scheme::FullyImplicit;
  cfg.tol = o.tol;
  cfg.max_iters = o.max_iters;
  if (o.merton) cfg.constraints = ConstraintSet::MertonSimplex;
  cfg.strategy_stride = o.strategy_stride;

  manifest.config = {{"prices", o.prices},
                     {"model", o.model},
                     {"periods_per_year", o.periods_per_year},
                     {"a", o.a},
                     {"epsilon", o.epsilon},
                     {"r", o.r},
                     {"T", o.horizon},
                     {"y_lo", o.y_lo},
                     {"y_hi", o.y_hi},
                     {"h", o.h},
                     {"k_rule", rule.str()},
                     {"scheme", o.scheme},
                     {"tol", o.tol},
                     {"max_iters", o.max_iters},
                     {"merton", o.merton},
                     {"strategy_stride", o.strategy_stride},
                     {"phi_stride", o.phi_stride},
                     {"out_dir", o.out_dir}};

  StageTimer timer(&manifest);
  const PipelineResult result =
      timer.time("pipeline", [&] { return run_pipeline(cfg); });

  const int stride =
      o.phi_stride > 0 ? o.phi_stride
                       : std::max(1, (result.phi.layers() + 399) / 400);
  timer.time("write", [&] {
    write_phi_csv(result.phi, stride, o.out_dir + "/phi.csv");
    write_strategy_csv(result.strategy, o.out_dir + "/strategy.csv");
    write_alpha_csv(result.alpha, 1000, o.out_dir + "/alpha.csv");
  });

  manifest.warnings = result.warnings;
  manifest.results = {{"n_interior", result.n_interior},
                      {"m_steps", result.m_steps},
                      {"h", result.resolved_h},
                      {"k", result.resolved_k},
                      {"x_lo", result.x_lo},
                      {"x_hi", result.x_hi},
                      {"max_iters_used", result.stats.max_iters_used},
                      {"total_iters", result.stats.total_iters},
                      {"pieces", result.alpha.pieces().size()},
                      {"breakpoints", result.alpha.breakpoints()},
                      {"phi_stride", stride}};
  write_manifest(manifest, o.out_dir + "/manifest.json");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained optimal-allocation solver"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  AlphaOpts ao;
  CLI::App* alpha = app.add_subcommand(
      "alpha", "Build the piecewise-rational QP value function");
  alpha->add_option("--model", ao.model,
                    "model CSV: first row mu, then n covariance rows")
      ->required();
  alpha->add_option("--phi-min", ao.phi_min, "domain floor (open end)");
  alpha->add_option("--phi-max", ao.phi_max, "domain cap (closed end)");
  alpha->add_option("--samples", ao.samples, "CSV sample count");
  alpha->add_flag("--merton", ao.merton, "use the 1'theta <= 1 variant");
  alpha->add_option("--out", ao.out, "output CSV path");
  alpha->add_option("--breakpoints", ao.breakpoints,
                    "also write piece/breakpoint JSON here");
  alpha->add_option("--manifest", ao.manifest, "manifest JSON path");

  SolveOpts so;
  CLI::App* solve =
      app.add_subcommand("solve", "March the transformed equation");
  solve->add_option("--model", so.model, "model CSV")->required();
  solve->add_option("--epsilon", so.epsilon, "inflow rate");
  solve->add_option("--r", so.r, "interest rate");
  solve->add_option("--x-lo", so.x_lo);
  solve->add_option("--x-hi", so.x_hi);
  solve->add_option("--n", so.n_interior, "interior cell count");
  solve->add_option("--T", so.horizon, "time horizon");
  solve->add_option("--m", so.m_steps,
                    "time steps (overrides --k-rule when positive)");
  solve->add_option("--k-rule", so.k_rule, "<coef>*h or <coef>*h^2");
  solve->add_option("--scheme", so.scheme, "semi|full");
  solve->add_option("--tol", so.tol, "micro-iteration stop");
  solve->add_option("--max-iters", so.max_iters,
                    "micro-iteration cap");
  solve->add_option("--bc-left", so.bc_left,
                    "dirichlet:<file>|robin:<d>|neumann");
  solve->add_option("--bc-right", so.bc_right,
                    "dirichlet:<file>|robin:<d>|neumann");
  solve->add_option("--terminal", so.terminal, "cara:<a>|csv:<file>")
      ->required();
  solve->add_option("--phi-min", so.phi_min, "alpha domain floor");
  solve->add_option("--out", so.out);
  solve->add_option("--manifest", so.manifest);
  solve->add_option("--stride", so.stride, "write every stride-th layer");

  WaveOpts wo;
  CLI::App* wave = app.add_subcommand(
      "wave", "Construct the semi-explicit benchmark profile");
  wave->add_option("--model", wo.model, "model CSV");
  wave->add_option("--alpha-json", wo.alpha_json,
                   "piece JSON from `alpha --breakpoints`");
  wave->add_option("--v-minus", wo.v_minus)->required();
  wave->add_option("--v-plus", wo.v_plus)->required();
  wave->add_option("--domain", wo.domain, "x_lo,x_hi")
      ->delimiter(',')
      ->expected(2);
  wave->add_option("--T", wo.horizon, "profile extended by c*T");
  wave->add_option("--rel-tol", wo.rel_tol,
                   "integrator tolerance");
  wave->add_option("--sample-dx", wo.sample_dx);
  wave->add_option("--phi-min", wo.phi_min);
  wave->add_option("--phi-max", wo.phi_max);
  wave->add_option("--out", wo.out, "profile CSV (xi,v)");
  wave->add_option("--json", wo.json, "header JSON (c, K0, z-, z+)");
  wave->add_option("--manifest", wo.manifest);

  EocOpts eo;
  CLI::App* eoc = app.add_subcommand(
      "eoc", "Grid-refinement study against the benchmark wave");
  eoc->add_option("--model", eo.model)->required();
  eoc->add_option("--levels", eo.levels, "spatial steps, decreasing")
      ->delimiter(',')
      ->required();
  eoc->add_option("--k-rule", eo.k_rule, "<coef>*h or <coef>*h^2");
  eoc->add_option("--v-minus", eo.v_minus);
  eoc->add_option("--v-plus", eo.v_plus);
  eoc->add_option("--x-lo", eo.x_lo);
  eoc->add_option("--x-hi", eo.x_hi);
  eoc->add_option("--T", eo.horizon);
  eoc->add_option("--scheme", eo.scheme, "semi|full");
  eoc->add_option("--phi-min", eo.phi_min);
  eoc->add_option("--phi-max", eo.phi_max);
  eoc->add_option("--out", eo.out);
  eoc->add_option("--manifest", eo.manifest);

  PortfolioOpts po;
  CLI::App* pf = app.add_subcommand(
      "portfolio", "Full pipeline: moments, alpha, PDE, strategy");
  pf->set_help_flag("--help", "Print this help message and exit");
  pf->add_option("--prices", po.prices, "price CSV: date,<ticker>,...");
  pf->add_option("--model", po.model, "model CSV (skips estimation)");
  pf->add_option("--periods-per-year", po.periods_per_year,
                 "annualization factor for estimated moments");
  pf->add_option("--a", po.a, "CARA risk-aversion coefficient (> 1)");
  pf->add_option("--epsilon", po.epsilon, "inflow rate");
  pf->add_option("--r", po.r, "interest rate");
  pf->add_option("--T", po.horizon);
  pf->add_option("--y-lo", po.y_lo);
  pf->add_option("--y-hi", po.y_hi);
  pf->add_option("--h", po.h, "spatial step in x = ln y");
  pf->add_option("--k-rule", po.k_rule);
  pf->add_option("--scheme", po.scheme, "semi|full");
  pf->add_option("--tol", po.tol);
  pf->add_option("--max-iters", po.max_iters);
  pf->add_flag("--merton", po.merton);
  pf->add_option("--strategy-stride", po.strategy_stride,
                 "time slices kept in strategy.csv (0 = about 200)");
  pf->add_option("--phi-stride", po.phi_stride,
                 "layers kept in phi.csv (0 = about 400)");
  pf->add_option("--out-dir", po.out_dir);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "error: config: " << e.what() << "\n";
    return 1;
  }

  try {
    if (alpha->parsed()) return run_alpha(ao);
    if (solve->parsed()) return run_solve(so);
    if (wave->parsed()) return run_wave(wo);
    if (eoc->parsed()) return run_eoc(eo);
    if (pf->parsed()) return run_portfolio(po);
  } catch (const NoConvergence& e) {
    std::cerr << "error: NoConvergence: " << e.what() << "\n";
    return 2;
  } catch (const NonPositivePhi& e) {
    std::cerr << "error: NonPositivePhi: " << e.what() << "\n";
    return 2;
  } catch (const ZeroPivot& e) {
    std::cerr << "error: ZeroPivot: " << e.what() << "\n";
    return 2;
  } catch (const StiffnessFailure& e) {
    std::cerr << "error: StiffnessFailure: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
