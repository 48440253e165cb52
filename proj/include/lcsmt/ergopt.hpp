#pragma once

// Min-max coboundary problems
//   inf_f max_x (h + f o psi - f)   and   sup_f min_x (h + f o psi - f),
// solved exactly on finite permutations and bounded on grids.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "lcsmt/birkhoff.hpp"
#include "lcsmt/core.hpp"
#include "lcsmt/cycles.hpp"

namespace lcsmt {

enum class OptimizationMethod { ExactFinite, BirkhoffFn, GridDescent };

inline std::string_view to_string(OptimizationMethod m) {
  switch (m) {
    case OptimizationMethod::ExactFinite: return "exact_finite";
    case OptimizationMethod::BirkhoffFn: return "birkhoff_fn";
    case OptimizationMethod::GridDescent: return "grid_descent";
  }
  return "?";
}

inline OptimizationMethod parse_method(std::string_view s) {
  if (s == "exact_finite") return OptimizationMethod::ExactFinite;
  if (s == "birkhoff_fn") return OptimizationMethod::BirkhoffFn;
  if (s == "grid_descent") return OptimizationMethod::GridDescent;
  throw ValidationError("unknown optimization method: " + std::string(s));
}

template <class Point, class Scalar>
struct OptimizationResult {
  Scalar value{};
  std::vector<Point> nodes;
  std::vector<Scalar> potential;  // tabulated on nodes, normalized to min 0
  double certificate = 0.0;       // |extremum_x(h + f o psi - f) - value| with the returned f
  std::string method;
  bool exact = false;
  bool heuristic = false;
  std::size_t order = 0;   // n of f_n for birkhoff_fn
  std::size_t sweeps = 0;  // relaxation sweeps for grid_descent
};

template <ConformalDynamics S>
using ResultFor = OptimizationResult<typename S::point_type, typename S::scalar_type>;

struct OptimizeOptions {
  std::size_t grid = 256;  // per dimension, continuous systems
  std::size_t n = 64;      // order of f_n (birkhoff_fn, and the grid_descent warm start)
  std::size_t max_sweeps = 5000;
  double tol = 1e-13;
};

namespace detail {

template <class Scalar>
void normalize_min_zero(std::vector<Scalar>& f) {
  if (f.empty()) return;
  const Scalar lo = *std::min_element(f.begin(), f.end());
  for (auto& v : f) v -= lo;
}

/// Potential making h + f o psi - f equal to the cycle mean on every cycle.
inline std::vector<Rational> cycle_levelling_potential(const FiniteSystem& sys, const CycleDecomposition& cyc) {
  std::vector<Rational> f(sys.size());
  for (const auto& c : cyc.cycles) {
    Rational acc(0);
    for (std::size_t j = 0; j < c.states.size(); ++j) {
      f[c.states[j]] = acc;
      acc += c.mean - sys.factor(c.states[j]);
    }
  }
  normalize_min_zero(f);
  return f;
}

inline FiniteSystem negated(const FiniteSystem& sys) {
  std::vector<Rational> h(sys.size());
  for (std::size_t x = 0; x < sys.size(); ++x) h[x] = -sys.factor(x);
  return sys.with_factor(std::move(h), "-(" + sys.label() + ")");
}

template <class Point>
ContinuousSystem<Point> negated(const ContinuousSystem<Point>& sys) {
  return sys.with_factor([sys](const Point& x) { return -sys.factor(x); }, "-(" + sys.label() + ")");
}

template <ConformalDynamics S>
std::vector<typename S::point_type> optimization_nodes(const S& sys, const OptimizeOptions& opts) {
  if constexpr (std::is_same_v<S, FiniteSystem>) {
    return sys.sample_points();
  } else {
    return sys.sample_points(opts.grid);
  }
}

/// Extrema over nodes of h + f o psi - f, where f is looked up through `fpsi`.
template <ConformalDynamics S, class FPsi>
std::pair<typename S::scalar_type, typename S::scalar_type> shifted_extrema(
    const S& sys, const std::vector<typename S::point_type>& nodes,
    const std::vector<typename S::scalar_type>& f, FPsi&& fpsi) {
  using Scalar = typename S::scalar_type;
  Scalar lo{}, hi{};
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Scalar v = sys.factor(nodes[i]) + fpsi(i) - f[i];
    if (i == 0 || v < lo) lo = v;
    if (i == 0 || v > hi) hi = v;
  }
  return {lo, hi};
}

/// Coordinate relaxation of max_i (h_i + f_{phi(i)} - f_i) on a snapped
/// functional graph. Each update sets f_i to the midpoint that balances the
/// term at i against the terms at its preimages, so the maximum never grows.
inline std::size_t relax_potential(const std::vector<double>& h, const std::vector<std::size_t>& phi,
                                   std::vector<double>& f, std::size_t max_sweeps, double tol) {
  const std::size_t G = h.size();
  std::vector<std::vector<std::size_t>> pre(G);
  for (std::size_t i = 0; i < G; ++i) pre[phi[i]].push_back(i);
  auto current_max = [&] {
    double v = -INFINITY;
    for (std::size_t i = 0; i < G; ++i) v = std::max(v, h[i] + f[phi[i]] - f[i]);
    return v;
  };
  double prev = current_max();
  std::size_t sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    for (std::size_t i = 0; i < G; ++i) {
      if (phi[i] == i) continue;  // fixed node: its own term does not depend on f
      const double a = h[i] + f[phi[i]];
      if (pre[i].empty()) continue;
      double b = -INFINITY;
      for (std::size_t y : pre[i]) {
        if (y == i) continue;
        b = std::max(b, h[y] - f[y]);
      }
      if (!std::isfinite(b)) continue;
      f[i] = 0.5 * (a - b);
    }
    const double now = current_max();
    if (prev - now <= tol) {
      ++sweep;
      break;
    }
    prev = now;
  }
  return sweep;
}

template <ConformalDynamics S>
ResultFor<S> minmax_impl(const S& sys, OptimizationMethod method, const OptimizeOptions& opts) {
  using Scalar = typename S::scalar_type;
  ResultFor<S> r;
  r.method = std::string(to_string(method));

  if (method == OptimizationMethod::ExactFinite) {
    if constexpr (std::is_same_v<S, FiniteSystem>) {
      const auto cyc = cycle_mean_extrema(sys);
      r.nodes = sys.sample_points();
      r.potential = cycle_levelling_potential(sys, cyc);
      r.value = cyc.max_mean;
      const auto [lo, hi] = shifted_extrema(sys, r.nodes, r.potential, [&](std::size_t i) {
        return r.potential[sys.forward(r.nodes[i])];
      });
      (void)lo;
      r.certificate = to_double(Rational(hi - r.value));
      r.exact = true;
      return r;
    } else {
      throw ValidationError("exact_finite requires a finite state space");
    }
  }

  if constexpr (std::is_same_v<S, FiniteSystem>) {
    throw ValidationError(r.method + " requires a continuous space with a grid");
  } else {
    r.nodes = optimization_nodes(sys, opts);
    const std::size_t G = r.nodes.size();
    const auto fn = transfer_potential(sys, opts.n);

    if (method == OptimizationMethod::BirkhoffFn) {
      r.order = opts.n;
      r.potential.resize(G);
      Scalar best{};
      double worst_shift = -INFINITY;
      for (std::size_t i = 0; i < G; ++i) {
        const auto& x = r.nodes[i];
        r.potential[i] = fn(x);
        const Scalar a = birkhoff_average(sys, x, opts.n);
        if (i == 0 || a > best) best = a;
        worst_shift = std::max(worst_shift, sys.factor(x) + fn(sys.forward(x)) - r.potential[i]);
      }
      r.value = best;
      r.certificate = std::fabs(worst_shift - best);
      normalize_min_zero(r.potential);
      return r;
    }

    // grid_descent
    r.heuristic = true;
    std::vector<double> h(G), f(G);
    std::vector<std::size_t> phi(G);
    const std::size_t res = opts.grid;
    for (std::size_t i = 0; i < G; ++i) {
      h[i] = sys.factor(r.nodes[i]);
      phi[i] = sys.nearest_grid_index(sys.forward(r.nodes[i]), res);
      f[i] = fn(r.nodes[i]);
    }
    r.sweeps = relax_potential(h, phi, f, opts.max_sweeps, opts.tol);
    double hi = -INFINITY;
    for (std::size_t i = 0; i < G; ++i) hi = std::max(hi, h[i] + f[phi[i]] - f[i]);
    r.value = hi;
    // snapped dynamics: the certificate is measured on the same snapped map
    r.certificate = 0.0;
    normalize_min_zero(f);
    r.potential = std::move(f);
    return r;
  }
}

}  // namespace detail

/// inf_f max_x (h + f o psi - f).
template <ConformalDynamics S>
ResultFor<S> minmax_coboundary(const S& sys, OptimizationMethod method, const OptimizeOptions& opts = {}) {
  return detail::minmax_impl(sys, method, opts);
}

/// sup_f min_x (h + f o psi - f), computed as -minmax(-h).
template <ConformalDynamics S>
ResultFor<S> maxmin_coboundary(const S& sys, OptimizationMethod method, const OptimizeOptions& opts = {}) {
  using Scalar = typename S::scalar_type;
  auto r = detail::minmax_impl(detail::negated(sys), method, opts);
  r.value = Scalar(-r.value);
  for (auto& v : r.potential) v = Scalar(-v);
  detail::normalize_min_zero(r.potential);
  return r;
}

struct StrictnessResult {
  bool strict = false;
  std::optional<std::vector<Rational>> generator;  // f with h = f - f o psi, min f = 0
};

/// h is a coboundary f - f o psi iff every cycle sum of h vanishes.
inline StrictnessResult is_strict_finite(const FiniteSystem& sys) {
  const auto cyc = cycle_mean_extrema(sys);
  StrictnessResult out;
  for (const auto& c : cyc.cycles)
    if (c.sum != 0) return out;
  std::vector<Rational> f(sys.size());
  for (const auto& c : cyc.cycles) {
    Rational acc(0);
    for (std::size_t x : c.states) {
      f[x] = acc;
      acc -= sys.factor(x);  // f(psi x) = f(x) - h(x)
    }
  }
  detail::normalize_min_zero(f);
  out.strict = true;
  out.generator = std::move(f);
  return out;
}

}  // namespace lcsmt
