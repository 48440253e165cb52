#pragma once

// The Z-action rho(x, t) = (psi(x), t + k - h(x)) on N x R, the band K used to
// probe its proper discontinuity, and the explicit smooth constructions that
// conjugate it to the translation action: the transfer function g, the
// diffeomorphism sigma_k and the cocycle mu with mu o rho = mu - k.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "lcsmt/birkhoff.hpp"
#include "lcsmt/core.hpp"
#include "lcsmt/cycles.hpp"

namespace lcsmt {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return lo <= v && v <= hi; }
  double width() const { return hi - lo; }
};

template <ConformalDynamics S>
struct TorusAction {
  using point_type = typename S::point_type;
  using scalar_type = typename S::scalar_type;
  S sys;
  scalar_type k;
};

template <ConformalDynamics S>
TorusAction<S> make_action(S sys, typename S::scalar_type k) {
  if constexpr (std::is_same_v<typename S::scalar_type, double>) {
    if (!std::isfinite(k)) throw ValidationError("k must be finite");
  }
  return TorusAction<S>{std::move(sys), std::move(k)};
}

/// (x, t) -> (psi(x), t + k - h(x)).
template <ConformalDynamics S>
std::pair<typename S::point_type, typename S::scalar_type> action_step(const TorusAction<S>& act,
                                                                       const typename S::point_type& x,
                                                                       const typename S::scalar_type& t) {
  using Scalar = typename S::scalar_type;
  if (!act.sys.contains(x)) throw DomainError("point " + format_point(x) + " outside the model space");
  return {act.sys.forward(x), Scalar(t + act.k - act.sys.factor(x))};
}

/// Inverse of action_step: (x, t) -> (psi^-1(x), t - k + h(psi^-1 x)).
template <ConformalDynamics S>
std::pair<typename S::point_type, typename S::scalar_type> action_step_inverse(const TorusAction<S>& act,
                                                                               const typename S::point_type& x,
                                                                               const typename S::scalar_type& t) {
  using Scalar = typename S::scalar_type;
  if (!act.sys.contains(x)) throw DomainError("point " + format_point(x) + " outside the model space");
  const auto y = act.sys.backward(x);
  return {y, Scalar(t - act.k + act.sys.factor(y))};
}

/// rho^n(x, t) = (psi^n(x), t + n (k - A_n(h)(x))) by the closed formula.
template <ConformalDynamics S>
std::pair<typename S::point_type, typename S::scalar_type> action_power(const TorusAction<S>& act,
                                                                        const typename S::point_type& x,
                                                                        const typename S::scalar_type& t,
                                                                        std::int64_t n, const Budget& budget = {}) {
  using Scalar = typename S::scalar_type;
  if (n < 0) throw ValidationError("action_power needs n >= 0");
  if (n > budget.max_iterations) throw BudgetError("iteration count exceeds budget");
  if (!act.sys.contains(x)) throw DomainError("point " + format_point(x) + " outside the model space");
  if (n == 0) return {x, t};
  const Scalar nn(static_cast<long>(n));
  const Scalar avg = birkhoff_average(act.sys, x, static_cast<std::size_t>(n));
  return {iterate(act.sys, x, n, budget), Scalar(t + nn * (act.k - avg))};
}

/// K = [-max(max h, k - min h), -min(min h, k - max h)] (t-component).
inline Interval compact_band(double h_min, double h_max, double k) {
  return {-std::max(h_max, k - h_min), -std::min(h_min, k - h_max)};
}

enum class ProbeVerdict { RecurrentEvidence, EscapeCertified, Inconclusive };

inline std::string_view to_string(ProbeVerdict v) {
  switch (v) {
    case ProbeVerdict::RecurrentEvidence: return "RecurrentEvidence";
    case ProbeVerdict::EscapeCertified: return "EscapeCertified";
    case ProbeVerdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

template <class Point>
struct ProbeWitness {
  Point start{};
  double start_t = 0.0;
  std::size_t n = 0;
  double t = 0.0;
};

template <class Point>
struct ProbeReport {
  double k = 0.0;
  Interval band;
  ProbeVerdict verdict = ProbeVerdict::Inconclusive;
  std::optional<ProbeWitness<Point>> witness;  // earliest return into K
  std::optional<std::size_t> escape_bound;     // N0: no return into K for n >= N0
  bool rigorous = false;                       // escape argument exact (finite systems)
  std::size_t returns_observed = 0;
  std::optional<std::size_t> last_return;
  std::string method;  // which drift bound certified the escape
};

struct ProbeOptions {
  std::size_t n_max = 1000;
  std::size_t t_samples = 3;  // start heights spread over the band
};

namespace detail {

inline std::optional<std::size_t> escape_after(double drift, double spread, double width) {
  // t_n >= t_0 + n * drift - spread with t_0 in the band leaves it once n * drift > width + spread
  if (!(drift > 0.0)) return std::nullopt;
  const double n0 = std::floor((width + spread) / drift) + 1.0;
  if (!(n0 < 9.0e15)) return std::nullopt;
  return static_cast<std::size_t>(std::max(1.0, n0));
}

}  // namespace detail

/// Simulates orbits starting in K. An exact or generator-based drift bound
/// that forces every orbit out of K after N0 steps yields EscapeCertified
/// (finitely many early returns are compatible with proper discontinuity);
/// otherwise any observed return is RecurrentEvidence.
template <ConformalDynamics S>
ProbeReport<typename S::point_type> properness_probe(const TorusAction<S>& act,
                                                     const std::vector<typename S::point_type>& starts,
                                                     const ProbeOptions& opts = {}) {
  using Point = typename S::point_type;
  if (opts.n_max < 1) throw ValidationError("probe needs n_max >= 1");
  if (starts.empty()) throw ValidationError("probe needs at least one start point");
  const auto& sys = act.sys;
  const double k = to_double(act.k);

  double h_min = INFINITY, h_max = -INFINITY;
  for (const auto& x : starts) {
    if (!sys.contains(x)) throw DomainError("start point " + format_point(x) + " outside the model space");
    const double v = to_double(sys.factor(x));
    h_min = std::min(h_min, v);
    h_max = std::max(h_max, v);
  }

  ProbeReport<Point> rep;
  rep.k = k;
  rep.band = compact_band(h_min, h_max, k);

  std::vector<double> heights;
  const std::size_t T = std::max<std::size_t>(1, opts.t_samples);
  if (T == 1) {
    heights.push_back(0.5 * (rep.band.lo + rep.band.hi));
  } else {
    for (std::size_t j = 0; j < T; ++j)
      heights.push_back(rep.band.lo + rep.band.width() * static_cast<double>(j) / static_cast<double>(T - 1));
  }

  const std::size_t N = opts.n_max;
  const std::size_t tail_from = std::max<std::size_t>(1, N / 2);
  double tail_hi = -INFINITY, tail_lo = INFINITY;  // extrema of A_n over n in [tail_from, N]
  std::size_t best_n = 0;
  for (const auto& x0 : starts) {
    Point x = x0;
    double S_n = 0.0;
    for (std::size_t n = 1; n <= N; ++n) {
      S_n += to_double(sys.factor(x));
      x = sys.forward(x);
      if (n >= tail_from) {
        const double a = S_n / static_cast<double>(n);
        tail_hi = std::max(tail_hi, a);
        tail_lo = std::min(tail_lo, a);
      }
      const double shift = static_cast<double>(n) * k - S_n;
      for (double t0 : heights) {
        const double t = t0 + shift;
        if (!rep.band.contains(t)) continue;
        ++rep.returns_observed;
        if (!rep.last_return || n > *rep.last_return) rep.last_return = n;
        if (!rep.witness || n < best_n) {
          best_n = n;
          rep.witness = ProbeWitness<Point>{x0, t0, n, t};
        }
      }
    }
  }

  // Drift bounds: t_n - t_0 - n*drift is confined to [-spread, spread] or better.
  double drift = 0.0, spread = 0.0;
  bool have_bound = false;
  if constexpr (std::is_same_v<S, FiniteSystem>) {
    const auto cyc = cycle_mean_extrema(sys);
    const double M = to_double(cyc.max_mean), m = to_double(cyc.min_mean);
    spread = static_cast<double>(cyc.longest()) * (h_max - h_min);
    if (k > M) drift = k - M;
    else if (k < m) drift = m - k;
    have_bound = drift > 0.0;
    rep.rigorous = have_bound;
    rep.method = "cycle means";
  } else {
    if (sys.has_generator()) {
      double fmin = INFINITY, fmax = -INFINITY;
      for (const auto& x : starts) {
        const double v = to_double(sys.generator(x));
        fmin = std::min(fmin, v);
        fmax = std::max(fmax, v);
      }
      spread = fmax - fmin;
      drift = std::fabs(k);
      have_bound = drift > 0.0;
      rep.method = "coboundary telescoping";
    } else {
      if (k > tail_hi) drift = k - tail_hi;
      else if (k < tail_lo) drift = tail_lo - k;
      have_bound = drift > 0.0;
      rep.method = "sampled tail envelopes";
    }
  }

  if (have_bound) {
    auto n0 = detail::escape_after(drift, spread, rep.band.width());
    if (n0 && !rep.method.empty() && rep.method == "sampled tail envelopes") *n0 = std::max(*n0, tail_from);
    // a return at or after N0 would contradict the bound
    if (n0 && !(rep.last_return && *rep.last_return >= *n0)) {
      rep.verdict = ProbeVerdict::EscapeCertified;
      rep.escape_bound = n0;
      return rep;
    }
  }
  rep.rigorous = false;
  rep.verdict = rep.returns_observed > 0 ? ProbeVerdict::RecurrentEvidence : ProbeVerdict::Inconclusive;
  return rep;
}

/// (n, x, t) along rho from (x, t), n = 0..steps.
template <ConformalDynamics S>
std::vector<std::tuple<std::size_t, typename S::point_type, double>> orbit_trace(const TorusAction<S>& act,
                                                                                 typename S::point_type x, double t,
                                                                                 std::size_t steps) {
  std::vector<std::tuple<std::size_t, typename S::point_type, double>> out;
  out.reserve(steps + 1);
  out.emplace_back(0, x, t);
  const double k = to_double(act.k);
  for (std::size_t n = 1; n <= steps; ++n) {
    t = t + k - to_double(act.sys.factor(x));
    x = act.sys.forward(x);
    out.emplace_back(n, x, t);
  }
  return out;
}

// Cutoff ------------------------------------------------------------------

/// Linear ramp from delta to 1 - delta, convolved with a compact bump of
/// half-width delta: chi = 0 on (-inf, 0], chi = 1 on [1, inf), chi' supported
/// in [0, 1] with 0 <= chi' <= 1 / (1 - 2 delta). The bump's distribution
/// function is the C^3 septic smoothstep, so chi is C^4.
class CutoffFunction {
 public:
  explicit CutoffFunction(double delta) : delta_(delta) {
    if (!(delta > 0.0 && delta < 0.5)) throw ValidationError("mollifier width must lie in (0, 1/2)");
  }

  double delta() const { return delta_; }
  double derivative_sup() const { return 1.0 / (1.0 - 2.0 * delta_); }

  double value(double s) const {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    return std::clamp(derivative_sup() * (ramp_integral(s - delta_) - ramp_integral(s - 1.0 + delta_)), 0.0, 1.0);
  }
  double derivative(double s) const {
    if (s <= 0.0 || s >= 1.0) return 0.0;
    return std::clamp(derivative_sup() * (bump_cdf(s - delta_) - bump_cdf(s - 1.0 + delta_)), 0.0, derivative_sup());
  }
  double operator()(double s) const { return value(s); }

 private:
  static double step(double v) { return v * v * v * v * (35.0 + v * (-84.0 + v * (70.0 - 20.0 * v))); }
  static double step_integral(double v) { return v * v * v * v * v * (7.0 + v * (-14.0 + v * (10.0 - 2.5 * v))); }

  double bump_cdf(double u) const {
    if (u <= -delta_) return 0.0;
    if (u >= delta_) return 1.0;
    return step((u + delta_) / (2.0 * delta_));
  }
  double ramp_integral(double u) const {
    if (u <= -delta_) return 0.0;
    if (u >= delta_) return u;
    return 2.0 * delta_ * step_integral((u + delta_) / (2.0 * delta_));
  }

  double delta_;
};

/// Cutoff whose derivative stays strictly below `bound`.
inline CutoffFunction build_cutoff(double bound) {
  if (!(bound > 1.0))
    throw ValidationError("cutoff derivative bound must exceed 1: a 0->1 transition on [0,1] has slope >= 1 somewhere");
  const double delta = std::min(0.2, 0.999 * 0.5 * (1.0 - 1.0 / bound));
  return CutoffFunction(delta);
}

// g -----------------------------------------------------------------------

struct GOptions {
  std::size_t max_terms = 1'000'000;  // per truncated sum
  std::size_t grid = 0;               // factor-range sampling, 0 = system grid
};

/// g with g(psi x, t + 1) = g(x, t) - phi(x) and d_t g + k one-signed,
/// for a factor phi whose range misses k.
///
/// Base case (phi < k, k > 0):
///   g(x,t) = sum_{i>=0} (1 - chi(t+1+i)) phi(psi^i x) - sum_{i>=0} chi(t-i) phi(psi^{-i-1} x)
/// with chi' < 1/(1 - eps/k), eps = min((k - max phi)/2, k/2), so d_t g + k > 0.
/// phi > k with k < 0 runs the base case on (psi^-1, -phi o psi^-1, -k) and
/// flips t. The remaining cases (k between 0 and the range of phi) first move
/// to (phi - c, k - c) for a constant c, then use g - c t.
template <ConformalDynamics S>
class GFunction {
 public:
  using point_type = typename S::point_type;
  using Factor = std::function<double(const point_type&)>;

  GFunction(S sys, Factor factor, double factor_min, double factor_max, double k, Interval window, GOptions opts)
      : sys_(std::move(sys)), factor_(std::move(factor)), k_(k), window_(window), opts_(opts), cutoff_(0.25) {
    if (!std::isfinite(k)) throw ValidationError("k must be finite");
    if (!(window.lo <= window.hi) || !std::isfinite(window.lo) || !std::isfinite(window.hi))
      throw ValidationError("t_window must be a finite interval");
    if (factor_min <= k && k <= factor_max)
      throw ValidationError("k lies in the sampled range of the factor; g needs k outside Im(h)");
    const double reach = std::max(std::fabs(window.lo), std::fabs(window.hi)) + 2.0;
    if (reach > static_cast<double>(opts.max_terms)) throw BudgetError("t_window needs more terms than the index budget");

    double phi_max = 0.0;
    if (factor_max < k) {
      mirrored_ = false;
      shift_ = k > 0.0 ? 0.0 : 0.5 * (k + factor_max);
      kappa_ = k - shift_;
      phi_max = factor_max - shift_;
    } else {
      mirrored_ = true;
      shift_ = k < 0.0 ? 0.0 : 0.5 * (k + factor_min);
      kappa_ = -(k - shift_);
      phi_max = -(factor_min - shift_);
    }
    epsilon_ = std::min(0.5 * (kappa_ - phi_max), 0.5 * kappa_);
    cutoff_ = build_cutoff(1.0 / (1.0 - epsilon_ / kappa_));
  }

  /// g(x, t) and d_t g(x, t).
  std::pair<double, double> evaluate(const point_type& x, double t) const {
    auto [v, d] = mirrored_ ? base(x, -t) : base(x, t);
    if (mirrored_) d = -d;
    return {v - shift_ * t, d - shift_};
  }
  double operator()(const point_type& x, double t) const { return evaluate(x, t).first; }
  double dt(const point_type& x, double t) const { return evaluate(x, t).second; }

  double factor(const point_type& x) const { return factor_(x); }
  double k() const { return k_; }
  int slope_sign() const { return mirrored_ ? -1 : 1; }
  bool mirrored() const { return mirrored_; }
  double shift() const { return shift_; }
  double epsilon() const { return epsilon_; }
  const CutoffFunction& cutoff() const { return cutoff_; }
  const Interval& window() const { return window_; }
  const S& system() const { return sys_; }

 private:
  // Base-case factor phi on the possibly inverted dynamics.
  double phi(const point_type& y) const {
    if (!mirrored_) return factor_(y) - shift_;
    return -(factor_(sys_.backward(y)) - shift_);
  }
  point_type ahead(const point_type& y) const { return mirrored_ ? sys_.backward(y) : sys_.forward(y); }
  point_type behind(const point_type& y) const { return mirrored_ ? sys_.forward(y) : sys_.backward(y); }

  std::pair<double, double> base(const point_type& x, double s) const {
    const double reach = std::ceil(std::fabs(s)) + 1.0;
    if (reach > static_cast<double>(opts_.max_terms)) throw BudgetError("g evaluation exceeds the index budget");
    double value = 0.0, slope = 0.0;
    // first sum: nonzero only while t + 1 + i < 1, i.e. i < -s
    point_type y = x;
    for (std::int64_t i = 0; static_cast<double>(i) < -s; ++i) {
      const double p = phi(y);
      value += (1.0 - cutoff_.value(s + 1.0 + i)) * p;
      slope -= cutoff_.derivative(s + 1.0 + i) * p;
      y = ahead(y);
    }
    // second sum: nonzero only while s - i > 0
    point_type z = behind(x);
    for (std::int64_t i = 0; static_cast<double>(i) < s; ++i) {
      const double p = phi(z);
      value -= cutoff_.value(s - i) * p;
      slope -= cutoff_.derivative(s - i) * p;
      z = behind(z);
    }
    return {value, slope};
  }

  S sys_;
  Factor factor_;
  double k_;
  Interval window_;
  GOptions opts_;
  CutoffFunction cutoff_;
  bool mirrored_ = false;
  double shift_ = 0.0;
  double kappa_ = 0.0;
  double epsilon_ = 0.0;
};

namespace detail {

template <ConformalDynamics S>
std::vector<typename S::point_type> range_samples(const S& sys, std::size_t grid) {
  if constexpr (std::is_same_v<S, FiniteSystem>) {
    (void)grid;
    return sys.sample_points();
  } else {
    return sys.sample_points(grid);
  }
}

}  // namespace detail

/// g for the system's own factor h.
template <ConformalDynamics S>
GFunction<S> build_g(const S& sys, double k, Interval window, const GOptions& opts = {}) {
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& x : detail::range_samples(sys, opts.grid)) {
    const double v = to_double(sys.factor(x));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  typename GFunction<S>::Factor h = [sys](const typename S::point_type& x) { return to_double(sys.factor(x)); };
  return GFunction<S>(sys, std::move(h), lo, hi, k, window, opts);
}

/// g for an arbitrary factor on the same dynamics, with its known range.
template <ConformalDynamics S>
GFunction<S> build_g(const S& sys, typename GFunction<S>::Factor factor, double factor_min, double factor_max,
                     double k, Interval window, const GOptions& opts = {}) {
  return GFunction<S>(sys, std::move(factor), factor_min, factor_max, k, window, opts);
}

/// g(psi x, t + 1) - g(x, t) + phi(x).
template <ConformalDynamics S>
double g_functional_residual(const GFunction<S>& g, const typename S::point_type& x, double t) {
  return g(g.system().forward(x), t + 1.0) - g(x, t) + g.factor(x);
}

// mu ----------------------------------------------------------------------

struct MuOptions {
  std::size_t n_scan = 64;
  std::size_t grid = 0;  // sampling for the A_n range scan, 0 = system grid
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
  double root_tol = 1e-12;
  GOptions g;
};

/// sigma_k(x, t) = (x, g(x, t) + t k + f_n(x)) with g built for A_n(h), and
/// mu = -k * (t o sigma_k^-1), so that mu o rho = mu - k.
template <ConformalDynamics S>
class MuConstruction {
 public:
  using point_type = typename S::point_type;

  MuConstruction(S sys, std::size_t n, double k, GFunction<S> g, double root_tol)
      : sys_(std::move(sys)), n_(n), k_(k), g_(std::move(g)), fn_(sys_, n), root_tol_(root_tol) {}

  std::size_t order() const { return n_; }
  double k() const { return k_; }
  const GFunction<S>& g() const { return g_; }

  double transfer(const point_type& x) const { return to_double(fn_(x)); }

  /// t-component of sigma scaled to c k: g(x,t) + t c k + f_n(x).
  double sigma(const point_type& x, double t, double scale = 1.0) const {
    return g_(x, t) + t * scale * k_ + transfer(x);
  }
  double sigma_slope(const point_type& x, double t) const { return g_.dt(x, t) + k_; }

  /// The t with sigma(x, t) = s. sigma is strictly monotone in t.
  double sigma_inverse(const point_type& x, double s) const {
    const double fx = transfer(x);
    const int sign = g_.slope_sign();
    auto F = [&](double t) { return sign * (g_(x, t) + t * k_ + fx - s); };  // increasing
    double lo = 0.0, hi = 0.0;
    double step = 1.0;
    double f0 = F(0.0);
    if (f0 == 0.0) return 0.0;
    if (f0 < 0.0) {
      lo = 0.0;
      hi = step;
      while (F(hi) < 0.0) {
        lo = hi;
        step *= 2.0;
        hi += step;
        if (step > 1e12) throw NotFound("sigma inverse bracket failed");
      }
    } else {
      hi = 0.0;
      lo = -step;
      while (F(lo) > 0.0) {
        hi = lo;
        step *= 2.0;
        lo -= step;
        if (step > 1e12) throw NotFound("sigma inverse bracket failed");
      }
    }
    while (hi - lo > 1e-6) {
      const double mid = 0.5 * (lo + hi);
      (F(mid) < 0.0 ? lo : hi) = mid;
    }
    double t = 0.5 * (lo + hi);
    for (int it = 0; it < 50; ++it) {
      const auto [gv, gd] = g_.evaluate(x, t);
      const double val = gv + t * k_ + fx - s;
      if (val == 0.0) return t;
      const double slope = gd + k_;
      double next = t - val / slope;
      if (!(next >= lo && next <= hi)) next = 0.5 * (lo + hi);
      if (sign * (val) < 0.0) lo = t; else hi = t;
      const double change = std::fabs(next - t);
      t = next;
      if (change <= root_tol_ * std::max(1.0, std::fabs(t))) break;
    }
    return t;
  }

  double mu(const point_type& x, double s) const { return -k_ * sigma_inverse(x, s); }

  /// mu(rho(x, s)) - mu(x, s) + k.
  double cocycle_residual(const point_type& x, double s) const {
    const double s1 = s + k_ - to_double(sys_.factor(x));
    return mu(sys_.forward(x), s1) - mu(x, s) + k_;
  }

  /// t-component mismatch of sigma_{ck} o rho_(psi,1) and rho_(psi, ck - h) o sigma_{ck}.
  double conjugation_residual(const point_type& x, double t, double scale) const {
    const double lhs = sigma(sys_.forward(x), t + 1.0, scale);
    const double rhs = sigma(x, t, scale) + scale * k_ - to_double(sys_.factor(x));
    return lhs - rhs;
  }

  double residual = 0.0;  // max |cocycle_residual| over random samples
  std::size_t samples_checked = 0;

 private:
  S sys_;
  std::size_t n_;
  double k_;
  GFunction<S> g_;
  TransferPotential<S> fn_;
  double root_tol_;
};

/// First n <= n_scan for which k misses the sampled range of A_n(h), then
/// the full sigma_k / mu pipeline, with the cocycle residual checked on
/// random (x, s) samples.
template <ConformalDynamics S>
MuConstruction<S> build_mu(const S& sys, double k, Interval window, const MuOptions& opts = {}) {
  const auto pts = detail::range_samples(sys, opts.grid);
  TableOptions topt;
  topt.rows = TableOptions::Rows::Drop;
  const auto table = birkhoff_table(sys, pts, opts.n_scan, topt);
  std::size_t n = 0;
  for (std::size_t i = 1; i <= opts.n_scan; ++i) {
    const double lo = to_double(table.min_average[i - 1]);
    const double hi = to_double(table.max_average[i - 1]);
    // A_n of a constant factor is only constant up to rounding
    const double tol = 1e-12 * std::max({1.0, std::fabs(lo), std::fabs(hi)});
    if (k < lo - tol || k > hi + tol) {
      n = i;
      break;
    }
  }
  if (n == 0) throw NotFound("no n <= " + std::to_string(opts.n_scan) + " with k outside Im(A_n(h)); k may not be admissible");

  const double lo = to_double(table.min_average[n - 1]);
  const double hi = to_double(table.max_average[n - 1]);
  typename GFunction<S>::Factor averaged = [sys, n](const typename S::point_type& x) {
    return to_double(birkhoff_average(sys, x, n));
  };
  auto g = build_g(sys, std::move(averaged), lo, hi, k, window, opts.g);
  MuConstruction<S> mu(sys, n, k, std::move(g), opts.root_tol);

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> height(window.lo, window.hi);
  double worst = 0.0;
  for (std::size_t i = 0; i < opts.samples; ++i) {
    const auto x = random_point(sys, rng);
    const double s = height(rng);
    worst = std::max(worst, std::fabs(mu.cocycle_residual(x, s)));
  }
  mu.residual = worst;
  mu.samples_checked = opts.samples;
  return mu;
}

}  // namespace lcsmt
