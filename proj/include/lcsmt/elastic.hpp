#pragma once

// Elasticity sets from Liouville profiles u = eta(Z_lambda):
// c is forbidden exactly where 1 + (1 - c) u vanishes, i.e. c = (1 + u)/u.
// Also the LCS rank of a period group.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "lcsmt/core.hpp"
#include "lcsmt/rational.hpp"
#include "lcsmt/torus.hpp"

namespace lcsmt {

struct LiouvilleProfile {
  std::vector<double> samples;
  bool lambda_nonvanishing = true;
  std::string label;
  bool connected = false;  // samples of a continuous u on a connected domain: image is one interval
};

struct ElasticOptions {
  double tol_zero = 1e-12;     // |u| below this counts as u = 0
  double resolution = 1e-3;    // gaps up to this are merged into one interval
  double tol_profile = 1e-12;  // first-kind test tolerance
};

/// Complement of a finite union of closed intervals.
struct ElasticitySet {
  std::vector<Interval> forbidden;  // sorted, disjoint
  bool contains_zero_u = false;
  bool equality = false;  // true: E equals the complement (lambda nonvanishing)

  bool is_forbidden(double c) const {
    auto it = std::upper_bound(forbidden.begin(), forbidden.end(), c,
                               [](double v, const Interval& iv) { return v < iv.lo; });
    if (it == forbidden.begin()) return false;
    return std::prev(it)->contains(c);
  }
  bool contains(double c) const { return !is_forbidden(c); }
};

inline void check_profile(const LiouvilleProfile& p) {
  if (p.samples.empty()) throw ValidationError("Liouville profile has no samples");
  for (double u : p.samples)
    if (!std::isfinite(u)) throw ValidationError("Liouville profile contains a non-finite sample");
}

/// min over samples of |1 + (1 - c) u|; zero exactly when c is a sample image.
inline double vanishing_margin(const LiouvilleProfile& p, double c) {
  double m = INFINITY;
  for (double u : p.samples) m = std::min(m, std::fabs(1.0 + (1.0 - c) * u));
  return m;
}

inline ElasticitySet elasticity_from_profile(const LiouvilleProfile& profile, const ElasticOptions& opts = {}) {
  check_profile(profile);
  ElasticitySet E;
  E.equality = profile.lambda_nonvanishing;
  std::vector<double> images;
  images.reserve(profile.samples.size());
  for (double u : profile.samples) {
    if (std::fabs(u) < opts.tol_zero) {
      E.contains_zero_u = true;
      continue;
    }
    images.push_back((1.0 + u) / u + 0.0);  // + 0.0 turns -0 into 0
  }
  std::sort(images.begin(), images.end());
  if (profile.connected && !images.empty()) {
    E.forbidden.push_back({images.front(), images.back()});
    return E;
  }
  for (double q : images) {
    if (!E.forbidden.empty() && q - E.forbidden.back().hi <= opts.resolution) {
      E.forbidden.back().hi = std::max(E.forbidden.back().hi, q);
    } else {
      E.forbidden.push_back({q, q});
    }
  }
  return E;
}

/// First kind iff u == -1 everywhere, iff E = R \ {0}.
inline bool first_kind_test(const LiouvilleProfile& profile, const ElasticOptions& opts = {}) {
  check_profile(profile);
  return std::all_of(profile.samples.begin(), profile.samples.end(),
                     [&](double u) { return std::fabs(u + 1.0) <= opts.tol_profile; });
}

/// E = R \ {0} as a set: forbidden is exactly the single point 0.
inline bool is_punctured_line(const ElasticitySet& E) {
  return E.forbidden.size() == 1 && E.forbidden.front().lo == 0.0 && E.forbidden.front().hi == 0.0;
}

/// One value per line (or first column of a CSV); a non-numeric first line is a header.
inline LiouvilleProfile read_profile_csv(const std::string& path, bool lambda_nonvanishing = true) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open profile file " + path);
  LiouvilleProfile p;
  p.lambda_nonvanishing = lambda_nonvanishing;
  p.label = path;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    const auto cut = line.find(',');
    std::string cell = line.substr(0, cut);
    if (cell.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      std::size_t used = 0;
      const double v = std::stod(cell, &used);
      p.samples.push_back(v);
    } catch (const std::exception&) {
      if (!first) throw ValidationError("bad profile value '" + cell + "' in " + path);
    }
    first = false;
  }
  check_profile(p);
  return p;
}

struct TorusProfileOptions {
  std::size_t t_samples = 2001;
  std::size_t grid = 0;  // x-samples, 0 = system grid
  MuOptions mu;
};

/// Liouville profile of the exact pair built on the mapping torus of size k:
/// u = d_t mu = -k / (d_t g + k), so (1 + u)/u = d_t g / (-k).
template <ConformalDynamics S>
LiouvilleProfile mapping_torus_profile(const S& sys, double k, Interval window, const TorusProfileOptions& opts = {}) {
  const auto mu = build_mu(sys, k, window, opts.mu);
  const auto& g = mu.g();
  LiouvilleProfile p;
  p.lambda_nonvanishing = true;
  p.connected = true;
  p.label = sys.label() + " mapping torus k=" + format_point(k);
  const auto xs = detail::range_samples(sys, opts.grid);
  const std::size_t T = std::max<std::size_t>(2, opts.t_samples);
  p.samples.reserve(xs.size() * T);
  for (const auto& x : xs) {
    for (std::size_t j = 0; j < T; ++j) {
      const double t = window.lo + window.width() * static_cast<double>(j) / static_cast<double>(T - 1);
      p.samples.push_back(-k / (g.dt(x, t) + k));
    }
  }
  return p;
}

// LCS rank ------------------------------------------------------------------

/// Periods a + b s with a, b rational and s a formal irrational symbol.
struct PeriodGroup {
  struct Generator {
    Rational rational;
    Rational symbol;
  };
  std::vector<Generator> generators;
};

/// Accepts "3/2", "-1", "s", "-s", "2s", "2*s", "1/3*s", "1+s", "1/2-3s".
inline PeriodGroup::Generator parse_period(std::string_view text) {
  std::string s;
  for (char c : text)
    if (c != ' ' && c != '\t') s.push_back(c);
  if (s.empty()) throw ValidationError("empty period generator");
  PeriodGroup::Generator g;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t end = pos + 1;
    while (end < s.size() && s[end] != '+' && s[end] != '-') ++end;
    std::string term = s.substr(pos, end - pos);
    pos = end;
    bool negative = false;
    if (!term.empty() && (term[0] == '+' || term[0] == '-')) {
      negative = term[0] == '-';
      term.erase(0, 1);
    }
    if (term.empty()) throw ValidationError("malformed period generator: " + std::string(text));
    Rational coef(1);
    bool symbolic = false;
    if (term.back() == 's') {
      symbolic = true;
      term.pop_back();
      if (!term.empty() && term.back() == '*') term.pop_back();
      if (!term.empty()) coef = parse_rational(term);
    } else {
      coef = parse_rational(term);
    }
    if (negative) coef = -coef;
    (symbolic ? g.symbol : g.rational) += coef;
  }
  return g;
}

/// Rank of the Z-module generated: the rank over Q of the (rational, symbol)
/// coefficient matrix, since 1 and s are Q-independent.
inline std::size_t lcs_rank(const PeriodGroup& group) {
  const auto& gs = group.generators;
  bool any = false;
  for (const auto& g : gs) any = any || g.rational != 0 || g.symbol != 0;
  if (!any) return 0;
  for (std::size_t i = 0; i < gs.size(); ++i)
    for (std::size_t j = i + 1; j < gs.size(); ++j)
      if (gs[i].rational * gs[j].symbol - gs[i].symbol * gs[j].rational != 0) return 2;
  return 1;
}

}  // namespace lcsmt
