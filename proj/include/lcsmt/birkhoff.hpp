#pragma once

// Birkhoff partial sums S_n(h)(x) = sum_{i<n} h(psi^i x), averages A_n = S_n / n,
// truncated tail envelopes and the transfer potential f_n that turns A_n(h)
// into a cohomologous copy of h:  A_n(h) = h + f_n o psi - f_n.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "lcsmt/core.hpp"
#include "lcsmt/cycles.hpp"
#include "lcsmt/parallel.hpp"

namespace lcsmt {

template <class Scalar>
Scalar scalar_abs(const Scalar& v) {
  return v < Scalar(0) ? Scalar(-v) : v;
}

template <class Point, class Scalar>
struct BirkhoffTable {
  std::string sys_label;
  std::vector<Point> points;
  std::size_t n_max = 0;
  bool rows_kept = false;

  // Per point, index n-1. Empty unless rows_kept.
  std::vector<std::vector<Scalar>> sums;
  std::vector<std::vector<Scalar>> averages;
  std::vector<std::vector<Scalar>> env_minus;  // min of A_i over n <= i <= n_max
  std::vector<std::vector<Scalar>> env_plus;   // max of A_i over n <= i <= n_max

  // Per n, index n-1, over all sampled points.
  std::vector<Scalar> min_average;
  std::vector<Scalar> max_average;
  std::vector<Scalar> inf_env_minus;
  std::vector<Scalar> sup_env_plus;

  Scalar factor_min{};
  Scalar factor_max{};
};

template <ConformalDynamics S>
using TableFor = BirkhoffTable<typename S::point_type, typename S::scalar_type>;

struct TableOptions {
  enum class Rows { Auto, Keep, Drop };
  Rows rows = Rows::Auto;
  std::size_t auto_row_limit = 2'000'000;  // points * n_max kept under Auto
  Budget budget;
};

template <ConformalDynamics S>
typename S::scalar_type birkhoff_sum(const S& sys, typename S::point_type x, std::size_t n) {
  using Scalar = typename S::scalar_type;
  Scalar s(0);
  for (std::size_t i = 0; i < n; ++i) {
    s += sys.factor(x);
    x = sys.forward(x);
  }
  return s;
}

template <ConformalDynamics S>
typename S::scalar_type birkhoff_average(const S& sys, const typename S::point_type& x, std::size_t n) {
  using Scalar = typename S::scalar_type;
  if (n == 0) throw ValidationError("Birkhoff average needs n >= 1");
  return birkhoff_sum(sys, x, n) / Scalar(static_cast<long>(n));
}

/// One forward orbit of length n_max per point; envelopes are suffix min/max
/// of that orbit's averages.
template <ConformalDynamics S>
TableFor<S> birkhoff_table(const S& sys, std::vector<typename S::point_type> points, std::size_t n_max,
                           const TableOptions& opts = {}) {
  using Scalar = typename S::scalar_type;
  if (n_max < 1) throw ValidationError("n_max must be >= 1");
  if (points.empty()) throw ValidationError("sample set is empty");
  if (static_cast<std::int64_t>(n_max) > opts.budget.max_iterations)
    throw BudgetError("n_max " + std::to_string(n_max) + " exceeds iteration budget");
  for (const auto& p : points)
    if (!sys.contains(p)) throw DomainError("sample point " + format_point(p) + " outside the model space");

  TableFor<S> t;
  t.sys_label = sys.label();
  t.n_max = n_max;
  t.points = std::move(points);
  const std::size_t P = t.points.size();
  t.rows_kept = opts.rows == TableOptions::Rows::Keep ||
                (opts.rows == TableOptions::Rows::Auto && P * n_max <= opts.auto_row_limit);
  if (t.rows_kept) {
    t.sums.assign(P, {});
    t.averages.assign(P, {});
    t.env_minus.assign(P, {});
    t.env_plus.assign(P, {});
  }

  struct Partial {
    std::vector<Scalar> lo_avg, hi_avg, lo_env, hi_env;
    Scalar h_lo{}, h_hi{};
    bool used = false;
  };
  const std::size_t chunks = std::min<std::size_t>(P, std::max<std::size_t>(1, std::thread::hardware_concurrency()));
  std::vector<Partial> partial(chunks);
  const std::size_t per = (P + chunks - 1) / chunks;

  parallel_for(chunks, [&](std::size_t c) {
    Partial& acc = partial[c];
    std::vector<Scalar> S_(n_max), A(n_max), emin(n_max), emax(n_max);
    for (std::size_t p = c * per; p < std::min(P, (c + 1) * per); ++p) {
      auto x = t.points[p];
      const Scalar h0 = sys.factor(x);
      Scalar running(0);
      for (std::size_t i = 0; i < n_max; ++i) {
        running += sys.factor(x);
        S_[i] = running;
        A[i] = running / Scalar(static_cast<long>(i + 1));
        x = sys.forward(x);
      }
      emin[n_max - 1] = A[n_max - 1];
      emax[n_max - 1] = A[n_max - 1];
      for (std::size_t i = n_max - 1; i-- > 0;) {
        emin[i] = std::min(A[i], emin[i + 1]);
        emax[i] = std::max(A[i], emax[i + 1]);
      }
      if (!acc.used) {
        acc.lo_avg = A;
        acc.hi_avg = A;
        acc.lo_env = emin;
        acc.hi_env = emax;
        acc.h_lo = h0;
        acc.h_hi = h0;
        acc.used = true;
      } else {
        for (std::size_t i = 0; i < n_max; ++i) {
          if (A[i] < acc.lo_avg[i]) acc.lo_avg[i] = A[i];
          if (A[i] > acc.hi_avg[i]) acc.hi_avg[i] = A[i];
          if (emin[i] < acc.lo_env[i]) acc.lo_env[i] = emin[i];
          if (emax[i] > acc.hi_env[i]) acc.hi_env[i] = emax[i];
        }
        acc.h_lo = std::min(acc.h_lo, h0);
        acc.h_hi = std::max(acc.h_hi, h0);
      }
      if (t.rows_kept) {
        t.sums[p] = S_;
        t.averages[p] = A;
        t.env_minus[p] = emin;
        t.env_plus[p] = emax;
      }
    }
  });

  bool first = true;
  for (auto& acc : partial) {
    if (!acc.used) continue;
    if (first) {
      t.min_average = std::move(acc.lo_avg);
      t.max_average = std::move(acc.hi_avg);
      t.inf_env_minus = std::move(acc.lo_env);
      t.sup_env_plus = std::move(acc.hi_env);
      t.factor_min = acc.h_lo;
      t.factor_max = acc.h_hi;
      first = false;
      continue;
    }
    for (std::size_t i = 0; i < n_max; ++i) {
      t.min_average[i] = std::min(t.min_average[i], acc.lo_avg[i]);
      t.max_average[i] = std::max(t.max_average[i], acc.hi_avg[i]);
      t.inf_env_minus[i] = std::min(t.inf_env_minus[i], acc.lo_env[i]);
      t.sup_env_plus[i] = std::max(t.sup_env_plus[i], acc.hi_env[i]);
    }
    t.factor_min = std::min(t.factor_min, acc.h_lo);
    t.factor_max = std::max(t.factor_max, acc.h_hi);
  }
  return t;
}

/// f_n = (1/n) sum_{i=1}^{n-1} S_i(h), evaluated from scratch at each point.
template <ConformalDynamics S>
class TransferPotential {
 public:
  using point_type = typename S::point_type;
  using scalar_type = typename S::scalar_type;

  TransferPotential(S sys, std::size_t n) : sys_(std::move(sys)), n_(n) {
    if (n_ < 1) throw ValidationError("transfer potential needs n >= 1");
  }

  scalar_type operator()(point_type x) const {
    scalar_type partial(0), total(0);
    for (std::size_t i = 1; i < n_; ++i) {
      partial += sys_.factor(x);  // partial == S_i(x)
      total += partial;
      x = sys_.forward(x);
    }
    return total / scalar_type(static_cast<long>(n_));
  }

  std::size_t order() const { return n_; }

 private:
  S sys_;
  std::size_t n_;
};

template <ConformalDynamics S>
TransferPotential<S> transfer_potential(const S& sys, std::size_t n) {
  return TransferPotential<S>(sys, n);
}

/// max_x |A_n(h)(x) - (h(x) + f_n(psi x) - f_n(x))| over the given points.
template <ConformalDynamics S>
typename S::scalar_type coboundary_residual(const S& sys, std::size_t n,
                                            const std::vector<typename S::point_type>& points) {
  using Scalar = typename S::scalar_type;
  const auto f = transfer_potential(sys, n);
  Scalar worst(0);
  for (const auto& x : points) {
    const Scalar lhs = birkhoff_average(sys, x, n);
    const Scalar rhs = sys.factor(x) + f(sys.forward(x)) - f(x);
    worst = std::max(worst, scalar_abs(Scalar(lhs - rhs)));
  }
  return worst;
}

/// Residual of the transfer identity for every n in [1, n_max] at once.
/// The orbit of psi(x) is the orbit of x shifted by one, so one orbit of
/// length n_max + 1 per point serves every n.
template <ConformalDynamics S>
std::vector<typename S::scalar_type> coboundary_residual_curve(const S& sys, std::size_t n_max,
                                                               const std::vector<typename S::point_type>& points) {
  using Scalar = typename S::scalar_type;
  std::vector<Scalar> worst(n_max, Scalar(0));
  std::vector<Scalar> h(n_max + 1);
  for (const auto& x0 : points) {
    auto x = x0;
    for (std::size_t i = 0; i <= n_max; ++i) {
      h[i] = sys.factor(x);
      x = sys.forward(x);
    }
    // S_i(x) = sum_{j<i} h_j ;  S_i(psi x) = sum_{1<=j<=i} h_j
    Scalar S_x(0), S_px(0), T_x(0), T_px(0);
    for (std::size_t n = 1; n <= n_max; ++n) {
      if (n >= 2) {
        T_x += S_x;
        T_px += S_px;
      }
      S_x += h[n - 1];
      S_px += h[n];
      const Scalar nn(static_cast<long>(n));
      const Scalar avg = S_x / nn;
      const Scalar rhs = h[0] + T_px / nn - T_x / nn;
      worst[n - 1] = std::max(worst[n - 1], scalar_abs(Scalar(avg - rhs)));
    }
  }
  return worst;
}

/// h -> h + f0 o psi - f0 on the same dynamics.
inline FiniteSystem gauge_shift(const FiniteSystem& sys, const std::vector<Rational>& f0) {
  if (f0.size() != sys.size()) throw ValidationError("potential size differs from state count");
  std::vector<Rational> h(sys.size());
  for (std::size_t x = 0; x < sys.size(); ++x) h[x] = sys.factor(x) + f0[sys.forward(x)] - f0[x];
  return sys.with_factor(std::move(h), sys.label() + "+gauge");
}

template <class Point>
ContinuousSystem<Point> gauge_shift(const ContinuousSystem<Point>& sys, std::function<double(const Point&)> f0) {
  auto h = [sys, f0](const Point& x) { return sys.factor(x) + f0(sys.forward(x)) - f0(x); };
  return sys.with_factor(h, sys.label() + "+gauge");
}

template <class Scalar>
struct LimitEstimate {
  Scalar L_minus{};
  Scalar L_plus{};
  std::size_t n_used = 0;
  std::optional<double> error_bound;  // nullopt: heuristic
  bool exact = false;
  bool stable = false;
};

struct LimitOptions {
  double stabilization_tol = 1e-6;
  double window_fraction = 0.1;
};

/// Envelope-based estimate on sampled points. The envelopes are truncated at
/// n_max, so the reported n* leaves a window of at least 10% of n_max above it.
template <class Point>
LimitEstimate<double> envelope_limits(const BirkhoffTable<Point, double>& t, const LimitOptions& opts = {}) {
  const std::size_t N = t.n_max;
  const auto W = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(opts.window_fraction * N)));
  auto lo = [&](std::size_t n) { return t.inf_env_minus[n - 1]; };
  auto hi = [&](std::size_t n) { return t.sup_env_plus[n - 1]; };
  auto flat = [&](double a, double b) { return std::fabs(b - a) <= opts.stabilization_tol * std::max(1.0, std::fabs(a)); };

  LimitEstimate<double> est;
  est.stable = false;
  est.n_used = N > W ? N - W : 1;
  for (std::size_t n = N > W ? N - W : 0; n >= 1; --n) {
    if (flat(lo(n), lo(n + W)) && flat(hi(n), hi(n + W))) {
      est.n_used = n;
      est.stable = true;
      break;
    }
  }
  est.L_minus = lo(est.n_used);
  est.L_plus = hi(est.n_used);
  return est;
}

/// Estimates of lim inf_x A_n^- and lim sup_x A_n^+. Exact on finite
/// permutations (extremal cycle means); envelope-based otherwise, with a
/// rigorous error bound only for strict systems that carry their generator.
template <ConformalDynamics S>
LimitEstimate<typename S::scalar_type> limit_estimates(const S& sys, const TableFor<S>& table,
                                                       const LimitOptions& opts = {}) {
  if constexpr (std::is_same_v<S, FiniteSystem>) {
    const auto cycles = cycle_mean_extrema(sys);
    LimitEstimate<Rational> est;
    est.L_minus = cycles.min_mean;
    est.L_plus = cycles.max_mean;
    est.n_used = table.n_max;
    est.exact = true;
    est.stable = true;
    est.error_bound = 0.0;
    return est;
  } else {
    auto est = envelope_limits(table, opts);
    if (sys.has_generator()) {
      double fmin = sys.generator(table.points.front()), fmax = fmin;
      for (const auto& p : table.points) {
        const double v = sys.generator(p);
        fmin = std::min(fmin, v);
        fmax = std::max(fmax, v);
      }
      est.error_bound = 2.0 * (fmax - fmin) / static_cast<double>(est.n_used);
    }
    return est;
  }
}

}  // namespace lcsmt
