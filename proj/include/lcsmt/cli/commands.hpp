#pragma once

#include <map>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "lcsmt/birkhoff.hpp"
#include "lcsmt/cli/config.hpp"
#include "lcsmt/elastic.hpp"
#include "lcsmt/ergopt.hpp"
#include "lcsmt/torus.hpp"

namespace lcsmt::cli {

struct CommandOutput {
  json payload = json::object();
  std::vector<std::string> warnings;
  std::map<std::string, std::string> files;  // name -> CSV contents
  bool exact = false;
  bool inconclusive = false;  // some verdict was Inconclusive
};

namespace detail {

template <class S>
constexpr bool is_finite_v = std::is_same_v<S, FiniteSystem>;

inline json scalar_json(double v) { return v; }
inline json scalar_json(const Rational& v) { return to_string(v); }

inline json point_json(double x) { return x; }
inline json point_json(std::size_t s) { return s; }
inline json point_json(const Vec2& p) { return json::array({p[0], p[1]}); }

inline std::string cell(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}
inline std::string cell(const Rational& v) { return to_string(v); }
inline std::string cell(std::size_t v) { return std::to_string(v); }
inline std::string cell(const Vec2& p) { return format_point(p); }

template <ConformalDynamics S>
std::vector<typename S::point_type> grid_points(const S& sys) {
  return sys.sample_points();
}

template <ConformalDynamics S>
std::pair<double, double> factor_range(const S& sys) {
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& x : grid_points(sys)) {
    const double v = to_double(sys.factor(x));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

template <class Scalar>
json limit_json(const LimitEstimate<Scalar>& e) {
  json j;
  j["L_minus"] = scalar_json(e.L_minus);
  j["L_plus"] = scalar_json(e.L_plus);
  j["n_used"] = e.n_used;
  j["exact"] = e.exact;
  j["stable"] = e.stable;
  if (e.error_bound) j["error_bound"] = *e.error_bound;
  else j["error_bound"] = "heuristic";
  return j;
}

template <ConformalDynamics S>
TableFor<S> analysis_table(const S& sys, const RunParams& p) {
  TableOptions opts;
  opts.auto_row_limit = p.csv_row_limit;
  opts.budget.max_iterations = p.max_iterations;
  return birkhoff_table(sys, grid_points(sys), p.n_max, opts);
}

template <ConformalDynamics S>
LimitEstimate<typename S::scalar_type> analysis_limits(const S& sys, const TableFor<S>& t, const RunParams& p,
                                                       CommandOutput& out) {
  LimitOptions lo;
  lo.stabilization_tol = p.stabilization_tol;
  auto est = limit_estimates(sys, t, lo);
  if (!est.exact) {
    if (!est.error_bound)
      out.warnings.push_back("limit estimates are grid-sampled envelope values (heuristic, not certified bounds)");
    if (!est.stable) out.warnings.push_back("envelopes did not stabilize within n_max; estimate flagged unstable");
  }
  out.exact = est.exact;
  return est;
}

template <class Table>
std::string extrema_csv(const Table& t) {
  std::ostringstream os;
  os << "n,min_A_n,max_A_n,inf_env_minus,sup_env_plus\n";
  for (std::size_t n = 1; n <= t.n_max; ++n)
    os << n << ',' << cell(t.min_average[n - 1]) << ',' << cell(t.max_average[n - 1]) << ','
       << cell(t.inf_env_minus[n - 1]) << ',' << cell(t.sup_env_plus[n - 1]) << '\n';
  return os.str();
}

template <class Table>
std::string birkhoff_csv(const Table& t) {
  std::ostringstream os;
  os << "point,n,S_n,A_n,env_minus,env_plus\n";
  for (std::size_t p = 0; p < t.points.size(); ++p)
    for (std::size_t n = 1; n <= t.n_max; ++n)
      os << cell(t.points[p]) << ',' << n << ',' << cell(t.sums[p][n - 1]) << ',' << cell(t.averages[p][n - 1]) << ','
         << cell(t.env_minus[p][n - 1]) << ',' << cell(t.env_plus[p][n - 1]) << '\n';
  return os.str();
}

inline std::vector<double> requested_ks(const RunParams& p, bool required, const char* command) {
  std::vector<double> ks;
  if (p.k) ks.push_back(*p.k);
  if (p.k_range)
    for (double k : p.k_range->values()) ks.push_back(k);
  if (required && ks.empty()) throw ValidationError(std::string(command) + " needs k or k_range");
  return ks;
}

// Commands ---------------------------------------------------------------

template <ConformalDynamics S>
CommandOutput analyze(const S& sys, const RunParams& p) {
  CommandOutput out;
  const auto t = analysis_table(sys, p);
  const auto est = analysis_limits(sys, t, p, out);
  const auto curve = coboundary_residual_curve(sys, std::min<std::size_t>(p.n_max, 500), t.points);
  typename S::scalar_type worst{};
  for (const auto& r : curve) worst = std::max(worst, r);

  auto& j = out.payload;
  j["system"] = sys.label();
  j["space"] = std::string(to_string(sys.space().kind));
  j["points"] = t.points.size();
  j["n_max"] = t.n_max;
  j["limits"] = limit_json(est);
  j["at_n_max"] = {{"min_A_n", scalar_json(t.min_average.back())},
                   {"max_A_n", scalar_json(t.max_average.back())},
                   {"inf_env_minus", scalar_json(t.inf_env_minus.back())},
                   {"sup_env_plus", scalar_json(t.sup_env_plus.back())}};
  j["coboundary_residual"] = {{"n_max", curve.size()}, {"max", scalar_json(worst)}};
  out.files["extrema.csv"] = extrema_csv(t);
  if (t.rows_kept) out.files["birkhoff.csv"] = birkhoff_csv(t);
  else out.warnings.push_back("birkhoff.csv skipped: points * n_max exceeds csv_row_limit");
  return out;
}

template <ConformalDynamics S>
CommandOutput admissible(const S& sys, const RunParams& p) {
  using Scalar = typename S::scalar_type;
  CommandOutput out;
  const auto t = analysis_table(sys, p);
  const auto est = analysis_limits(sys, t, p, out);
  auto& j = out.payload;
  j["system"] = sys.label();
  j["limits"] = limit_json(est);
  j["gap"] = json::array({scalar_json(est.L_minus), scalar_json(est.L_plus)});
  j["rays"] = json::array({json::array({"-inf", scalar_json(est.L_minus)}), json::array({scalar_json(est.L_plus), "+inf"})});
  j["rays_open"] = true;
  j["excluded"] = json::array({0});
  if (est.error_bound && !est.exact) j["gap_tolerance"] = *est.error_bound;
  if (est.L_minus == est.L_plus) j["gap_is_point"] = true;

  const auto ks = requested_ks(p, false, "admissible");
  if (!ks.empty()) {
    std::ostringstream csv;
    csv << std::boolalpha << "k,in_gap,admissible,witness_n\n";
    json per = json::array();
    for (double k : ks) {
      Scalar kk;
      if constexpr (is_finite_v<S>) kk = rational_from_double(k);
      else kk = k;
      const bool in_gap = est.L_minus <= kk && kk <= est.L_plus;
      const bool adm = !in_gap && k != 0.0;
      // smallest n with k outside Im(A_n(h)) on the samples: a sufficient witness
      json witness = nullptr;
      if (k != 0.0)
        for (std::size_t n = 1; n <= t.n_max; ++n)
          if (kk < t.min_average[n - 1] || kk > t.max_average[n - 1]) {
            witness = n;
            break;
          }
      per.push_back({{"k", k}, {"in_gap", in_gap}, {"admissible", adm}, {"witness_n", witness}});
      csv << cell(k) << ',' << in_gap << ',' << adm << ',' << (witness.is_null() ? std::string() : witness.dump()) << '\n';
    }
    j["k_values"] = std::move(per);
    out.files["phase.csv"] = csv.str();
  }
  return out;
}

template <ConformalDynamics S>
CommandOutput probe(const S& sys, const RunParams& p) {
  using Scalar = typename S::scalar_type;
  CommandOutput out;
  const auto ks = requested_ks(p, true, "probe");
  const auto starts = grid_points(sys);
  ProbeOptions po;
  po.n_max = p.n_max;
  po.t_samples = p.t_starts;
  std::ostringstream phase;
  phase << "k,verdict,witness_n,escape_bound\n";
  json reports = json::array();
  bool all_rigorous = true;
  for (double k : ks) {
    Scalar kk;
    if constexpr (is_finite_v<S>) kk = rational_from_double(k);
    else kk = k;
    const auto act = make_action(sys, kk);
    const auto rep = properness_probe(act, starts, po);
    json r{{"k", k},
           {"band", json::array({rep.band.lo, rep.band.hi})},
           {"verdict", std::string(to_string(rep.verdict))},
           {"rigorous", rep.rigorous},
           {"returns_observed", rep.returns_observed},
           {"method", rep.method}};
    if (rep.witness)
      r["witness"] = {{"start", point_json(rep.witness->start)},
                      {"start_t", rep.witness->start_t},
                      {"n", rep.witness->n},
                      {"t", rep.witness->t}};
    if (rep.escape_bound) r["escape_bound"] = *rep.escape_bound;
    reports.push_back(r);
    if (rep.verdict == ProbeVerdict::Inconclusive) out.inconclusive = true;
    if (!rep.rigorous) all_rigorous = false;
    phase << cell(k) << ',' << to_string(rep.verdict) << ','
          << (rep.witness ? std::to_string(rep.witness->n) : std::string()) << ','
          << (rep.escape_bound ? std::to_string(*rep.escape_bound) : std::string()) << '\n';
    if (ks.size() == 1) {
      std::ostringstream tr;
      tr << "n,x,t\n";
      const double t0 = 0.5 * (rep.band.lo + rep.band.hi);
      for (const auto& [n, x, t] : orbit_trace(act, starts.front(), t0, p.trace_steps))
        tr << n << ',' << cell(x) << ',' << cell(t) << '\n';
      out.files["trace.csv"] = tr.str();
    }
  }
  if (!all_rigorous)
    out.warnings.push_back("probe verdicts on sampled orbits are evidence, not proof, unless marked rigorous");
  out.payload["system"] = sys.label();
  out.payload["n_max"] = p.n_max;
  out.payload["reports"] = std::move(reports);
  out.files["phase.csv"] = phase.str();
  out.exact = false;
  return out;
}

template <ConformalDynamics S>
CommandOutput optimize(const S& sys, const RunParams& p) {
  CommandOutput out;
  const std::string name = p.method.empty() ? (is_finite_v<S> ? "exact_finite" : "birkhoff_fn") : p.method;
  const auto method = parse_method(name);
  OptimizeOptions o;
  o.n = p.order;
  if constexpr (!is_finite_v<S>) o.grid = sys.space().grid_resolution;
  const auto up = minmax_coboundary(sys, method, o);
  const auto down = maxmin_coboundary(sys, method, o);
  auto side = [](const auto& r) {
    json j{{"value", scalar_json(r.value)}, {"certificate", r.certificate}, {"method", r.method},
           {"exact", r.exact},           {"heuristic", r.heuristic}};
    if (r.order) j["order"] = r.order;
    if (r.sweeps) j["sweeps"] = r.sweeps;
    return j;
  };
  auto& j = out.payload;
  j["system"] = sys.label();
  j["minmax"] = side(up);
  j["maxmin"] = side(down);
  j["gap"] = json::array({scalar_json(down.value), scalar_json(up.value)});
  if constexpr (is_finite_v<S>) {
    const auto cyc = cycle_mean_extrema(sys);
    json cycles = json::array();
    for (const auto& c : cyc.cycles) cycles.push_back({{"states", c.states}, {"mean", scalar_json(c.mean)}});
    j["cycles"] = std::move(cycles);
    const auto strict = is_strict_finite(sys);
    j["strict"] = strict.strict;
  }
  out.exact = up.exact && down.exact;
  if (up.heuristic || down.heuristic)
    out.warnings.push_back("grid_descent relaxes on snapped dynamics: values are heuristic");
  if (method == OptimizationMethod::BirkhoffFn)
    out.warnings.push_back("birkhoff_fn values are bounds from f_n on the grid (minmax above, maxmin below the optimum)");
  std::ostringstream csv;
  csv << "node,f_minmax,f_maxmin\n";
  for (std::size_t i = 0; i < up.nodes.size(); ++i)
    csv << cell(up.nodes[i]) << ',' << cell(up.potential[i]) << ',' << cell(down.potential[i]) << '\n';
  out.files["potential.csv"] = csv.str();
  return out;
}

template <ConformalDynamics S>
CommandOutput construct(const S& sys, const RunParams& p) {
  CommandOutput out;
  if (!p.k) throw ValidationError("construct needs k");
  const double k = *p.k;
  const auto pts = grid_points(sys);
  auto& j = out.payload;
  j["system"] = sys.label();
  j["k"] = k;
  j["t_window"] = json::array({p.t_window.lo, p.t_window.hi});
  const std::size_t T = p.t_samples;
  auto height = [&](std::size_t i) {
    return p.t_window.lo + p.t_window.width() * static_cast<double>(i) / static_cast<double>(T - 1);
  };

  const auto [hmin, hmax] = factor_range(sys);
  if (hmin <= k && k <= hmax) {
    j["g"] = {{"built", false}, {"reason", "k lies in the sampled range of h; g is built for A_n(h) inside mu"}};
  } else {
    const auto g = build_g(sys, k, p.t_window);
    double residual = 0.0, slope = INFINITY;
    for (const auto& x : pts)
      for (std::size_t i = 0; i < T; ++i) {
        residual = std::max(residual, std::fabs(g_functional_residual(g, x, height(i))));
        slope = std::min(slope, std::fabs(g.dt(x, height(i)) + k));
      }
    j["g"] = {{"built", true},
              {"mirrored", g.mirrored()},
              {"shift", g.shift()},
              {"epsilon", g.epsilon()},
              {"cutoff_delta", g.cutoff().delta()},
              {"cutoff_derivative_sup", g.cutoff().derivative_sup()},
              {"functional_residual", residual},
              {"min_abs_dt_g_plus_k", slope}};
  }

  MuOptions mo;
  mo.n_scan = p.n_scan;
  mo.samples = p.samples;
  mo.seed = p.seed;
  const auto mu = build_mu(sys, k, p.t_window, mo);
  double conj = 0.0;
  const std::size_t stride = std::max<std::size_t>(1, pts.size() / 64);
  for (std::size_t i = 0; i < pts.size(); i += stride)
    for (std::size_t s = 0; s < T; s += std::max<std::size_t>(1, T / 50))
      conj = std::max(conj, std::fabs(mu.conjugation_residual(pts[i], height(s), 1.0)));
  j["mu"] = {{"order", mu.order()},
             {"cocycle_residual", mu.residual},
             {"samples", mu.samples_checked},
             {"seed", p.seed},
             {"conjugation_residual", conj},
             {"g_mirrored", mu.g().mirrored()},
             {"g_shift", mu.g().shift()}};
  return out;
}

template <ConformalDynamics S>
LiouvilleProfile torus_profile(const S& sys, const RunParams& p, double k) {
  TorusProfileOptions o;
  o.t_samples = p.t_samples;
  o.mu.n_scan = p.n_scan;
  o.mu.samples = std::min<std::size_t>(p.samples, 100);
  o.mu.seed = p.seed;
  return mapping_torus_profile(sys, k, p.t_window, o);
}

inline json elasticity_json(const ElasticitySet& E, const LiouvilleProfile& prof, const ElasticOptions& eo) {
  json forbidden = json::array();
  for (const auto& iv : E.forbidden) forbidden.push_back(json::array({iv.lo, iv.hi}));
  return {{"forbidden", std::move(forbidden)},
          {"equality", E.equality},
          {"contains_zero_u", E.contains_zero_u},
          {"first_kind", first_kind_test(prof, eo)},
          {"punctured_line", is_punctured_line(E)},
          {"samples", prof.samples.size()}};
}

inline CommandOutput elasticity(const std::optional<AnySystem>& system, const RunParams& p) {
  CommandOutput out;
  ElasticOptions eo;
  eo.resolution = p.resolution;
  eo.tol_zero = p.tol_zero;
  eo.tol_profile = p.tol_profile;
  LiouvilleProfile prof;
  std::string source;
  json link;
  if (p.profile) {
    prof.samples = *p.profile;
    prof.lambda_nonvanishing = p.lambda_nonvanishing;
    source = "params.profile";
  } else if (p.profile_csv) {
    prof = read_profile_csv(*p.profile_csv, p.lambda_nonvanishing);
    source = *p.profile_csv;
  } else if (system && p.k) {
    std::visit(
        [&](const auto& sys) {
          prof = torus_profile(sys, p, *p.k);
          source = "mapping_torus";
          const auto t = analysis_table(sys, p);
          CommandOutput scratch;
          const auto est = analysis_limits(sys, t, p, scratch);
          link = {{"k", *p.k},
                  {"gap", json::array({to_double(est.L_minus), to_double(est.L_plus)})},
                  {"gap_over_k", json::array({to_double(est.L_minus) / *p.k, to_double(est.L_plus) / *p.k})}};
        },
        *system);
  } else {
    throw ValidationError("elasticity needs params.profile, params.profile_csv, or a system with k");
  }
  const auto E = elasticity_from_profile(prof, eo);
  out.payload = elasticity_json(E, prof, eo);
  out.payload["source"] = source;
  if (!link.is_null()) {
    // every c in E must put c k outside the gap: gap / k has to sit inside the forbidden hull
    const double a = std::min(link["gap_over_k"][0].get<double>(), link["gap_over_k"][1].get<double>());
    const double b = std::max(link["gap_over_k"][0].get<double>(), link["gap_over_k"][1].get<double>());
    bool covered = false;
    for (const auto& iv : E.forbidden) covered = covered || (iv.lo <= a + 1e-3 && b - 1e-3 <= iv.hi);
    link["gap_inside_forbidden"] = covered;
    out.payload["scaled_admissibility"] = std::move(link);
  }
  if (!E.equality)
    out.warnings.push_back("lambda may vanish: E is only contained in the reported complement, not equal to it");
  out.exact = false;
  return out;
}

inline CommandOutput rank(const RunParams& p) {
  CommandOutput out;
  PeriodGroup g;
  for (const auto& s : p.generators) g.generators.push_back(parse_period(s));
  out.payload = {{"generators", p.generators}, {"rank", lcs_rank(g)}};
  out.exact = true;
  return out;
}

}  // namespace detail

inline CommandOutput run_command(const RunConfig& cfg) {
  const auto& p = cfg.params;
  if (cfg.command == "rank") return detail::rank(p);
  if (cfg.command == "elasticity") return detail::elasticity(cfg.system, p);
  return std::visit(
      [&](const auto& sys) -> CommandOutput {
        if (cfg.command == "analyze") return detail::analyze(sys, p);
        if (cfg.command == "admissible") return detail::admissible(sys, p);
        if (cfg.command == "probe") return detail::probe(sys, p);
        if (cfg.command == "optimize") return detail::optimize(sys, p);
        if (cfg.command == "construct") return detail::construct(sys, p);
        throw ValidationError("unknown command: " + cfg.command);
      },
      *cfg.system);
}

}  // namespace lcsmt::cli
