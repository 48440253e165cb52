#pragma once

// JSON run configuration:
//   {"space": {...}, "map": {...}, "factor": {...}, "command": "...", "params": {...}, "out": "dir"}

#include "json.hpp"

#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lcsmt/core.hpp"
#include "lcsmt/errors.hpp"
#include "lcsmt/rational.hpp"
#include "lcsmt/torus.hpp"

namespace lcsmt::cli {

using json = nlohmann::json;

inline const std::set<std::string>& known_commands() {
  static const std::set<std::string> c{"analyze", "admissible", "probe", "optimize", "construct", "elasticity", "rank"};
  return c;
}

/// Commands that need no dynamical system.
inline bool system_optional(const std::string& command) { return command == "rank" || command == "elasticity"; }

struct KRange {
  double lo = 0.0, hi = 0.0, step = 0.0;

  std::vector<double> values() const {
    std::vector<double> out;
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i) out.push_back(lo + step * static_cast<double>(i));
    return out;
  }
};

/// "a:b:step" with a <= b and step > 0.
inline KRange parse_k_range(const std::string& text) {
  const auto c1 = text.find(':');
  const auto c2 = c1 == std::string::npos ? std::string::npos : text.find(':', c1 + 1);
  if (c2 == std::string::npos) throw ValidationError("k_range must look like a:b:step, got '" + text + "'");
  KRange r;
  try {
    std::size_t used = 0;
    auto num = [&](const std::string& s) {
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    };
    r.lo = num(text.substr(0, c1));
    r.hi = num(text.substr(c1 + 1, c2 - c1 - 1));
    r.step = num(text.substr(c2 + 1));
  } catch (const std::exception&) {
    throw ValidationError("k_range must look like a:b:step, got '" + text + "'");
  }
  if (!(r.step > 0.0) || !(r.lo <= r.hi) || !std::isfinite(r.hi)) throw ValidationError("k_range needs a <= b and step > 0");
  if ((r.hi - r.lo) / r.step > 1e6) throw ValidationError("k_range has more than 1e6 values");
  return r;
}

struct RunParams {
  std::size_t n_max = 1000;
  std::optional<std::size_t> grid;  // overrides space.grid
  std::optional<double> k;
  std::optional<KRange> k_range;
  std::optional<std::string> k_range_text;
  std::uint64_t seed = 0;
  std::string method;  // optimize; empty = exact_finite on finite spaces, birkhoff_fn otherwise
  std::size_t order = 64;
  Interval t_window{-10.0, 10.0};
  std::size_t t_samples = 2001;
  std::size_t n_scan = 64;
  std::size_t samples = 1000;
  std::size_t t_starts = 3;
  std::size_t trace_steps = 200;
  double resolution = 1e-3;
  double tol_zero = 1e-12;
  double tol_profile = 1e-12;
  double tol_inverse = 1e-9;
  double stabilization_tol = 1e-6;
  std::int64_t max_iterations = 10'000'000;
  std::size_t csv_row_limit = 2'000'000;
  std::optional<std::vector<double>> profile;
  std::optional<std::string> profile_csv;
  bool lambda_nonvanishing = true;
  std::vector<std::string> generators;
};

struct RunConfig {
  json raw;  // canonical document (after flag overrides), without "out"
  std::string command;
  std::optional<AnySystem> system;
  RunParams params;
  std::string out = "out";
};

namespace detail {

inline const json& require(const json& j, const char* key, const char* where) {
  if (!j.is_object() || !j.contains(key)) throw ValidationError(std::string(where) + " is missing '" + key + "'");
  return j.at(key);
}

inline void check_keys(const json& j, const char* where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ValidationError(std::string(where) + " must be an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ValidationError(std::string("unknown key '") + key + "' in " + where);
  }
}

template <class T>
T get_as(const json& j, const char* what) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("bad value for ") + what + ": " + j.dump());
  }
}

inline double get_real(const json& j, const char* what) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "golden") return (std::sqrt(5.0) - 1.0) / 2.0;
    return to_double(parse_rational(s));
  }
  if (!j.is_number()) throw ValidationError(std::string("expected a number for ") + what + ", got " + j.dump());
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ValidationError(std::string(what) + " must be finite");
  return v;
}

inline std::size_t get_count(const json& j, const char* what, std::size_t min_value = 0) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < static_cast<std::int64_t>(min_value))
    throw ValidationError(std::string(what) + " must be an integer >= " + std::to_string(min_value));
  return j.get<std::size_t>();
}

/// Exact rationals: integers, "p/q" strings or decimal strings. Doubles are
/// taken by their shortest decimal form.
inline Rational get_rational(const json& j, const char* what) {
  if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
  if (j.is_string()) return parse_rational(j.get<std::string>());
  if (j.is_number_float()) return parse_rational(json(j.get<double>()).dump());
  throw ValidationError(std::string("expected a rational for ") + what + ", got " + j.dump());
}

template <std::size_t D>
TrigPolynomial<D> parse_trig(const json& j, const char* what) {
  TrigPolynomial<D> p;
  if (j.is_number() || j.is_string()) {
    p.constant = get_real(j, what);
    return p;
  }
  check_keys(j, what, {"constant", "terms"});
  if (j.contains("constant")) p.constant = get_real(j.at("constant"), what);
  if (j.contains("terms")) {
    if (!j.at("terms").is_array()) throw ValidationError(std::string(what) + ".terms must be an array");
    for (const auto& t : j.at("terms")) {
      check_keys(t, what, {"freq", "cos", "sin"});
      typename TrigPolynomial<D>::Term term;
      const auto& f = require(t, "freq", what);
      if constexpr (D == 1) {
        if (f.is_number_integer()) term.freq[0] = f.get<int>();
        else if (f.is_array() && f.size() == 1 && f[0].is_number_integer()) term.freq[0] = f[0].get<int>();
        else throw ValidationError(std::string(what) + ": circle frequency must be an integer");
      } else {
        if (!f.is_array() || f.size() != D) throw ValidationError(std::string(what) + ": torus frequency needs 2 integers");
        for (std::size_t d = 0; d < D; ++d) term.freq[d] = get_as<int>(f[d], what);
      }
      if (t.contains("cos")) term.cos_coef = get_real(t.at("cos"), what);
      if (t.contains("sin")) term.sin_coef = get_real(t.at("sin"), what);
      p.terms.push_back(term);
    }
  }
  return p;
}

inline std::vector<Rational> parse_values(const json& j, const char* what) {
  if (!j.is_array()) throw ValidationError(std::string(what) + " must be an array");
  std::vector<Rational> out;
  for (const auto& v : j) out.push_back(get_rational(v, what));
  return out;
}

inline AnySystem parse_system(const json& doc, std::optional<std::size_t> grid_override, const Budget& budget) {
  const json& space = require(doc, "space", "config");
  const json& map = require(doc, "map", "config");
  const json& factor = require(doc, "factor", "config");
  check_keys(space, "space", {"kind", "grid", "states"});
  check_keys(map, "map", {"builtin", "angle", "matrix", "shift", "table"});
  check_keys(factor, "factor", {"constant", "terms", "values", "generator"});

  const auto kind = get_as<std::string>(require(space, "kind", "space"), "space.kind");
  const auto builtin = get_as<std::string>(require(map, "builtin", "map"), "map.builtin");
  BuiltinParams p;
  p.budget = budget;

  if (kind == "circle" || kind == "torus2") {
    p.grid = space.contains("grid") ? get_count(space.at("grid"), "space.grid", 2) : (kind == "circle" ? 256 : 64);
    if (grid_override) p.grid = *grid_override;
    if (p.grid < 2) throw ValidationError("grid must be >= 2");
    const bool torus = kind == "torus2";
    if (torus != (builtin == "cat_map") && (builtin == "rotation" || builtin == "strict_rotation" || builtin == "cat_map"))
      throw ValidationError("map '" + builtin + "' does not live on space '" + kind + "'");
    if (builtin == "rotation" || builtin == "strict_rotation") {
      p.angle = get_real(require(map, "angle", "map"), "map.angle");
      if (builtin == "rotation") {
        json h = factor;
        h.erase("generator");
        if (factor.contains("values")) throw ValidationError("factor.values is for finite spaces");
        p.circle_function = parse_trig<1>(h, "factor");
      } else {
        p.circle_function = parse_trig<1>(require(factor, "generator", "factor"), "factor.generator");
      }
    } else if (builtin == "cat_map") {
      if (map.contains("matrix")) {
        const auto& m = map.at("matrix");
        if (!m.is_array() || m.size() != 2 || !m[0].is_array() || m[0].size() != 2 || !m[1].is_array() || m[1].size() != 2)
          throw ValidationError("map.matrix must be a 2x2 integer array");
        for (int r = 0; r < 2; ++r)
          for (int c = 0; c < 2; ++c) p.matrix[r][c] = get_as<long>(m[r][c], "map.matrix");
      }
      if (map.contains("shift")) {
        const auto& s = map.at("shift");
        if (!s.is_array() || s.size() != 2) throw ValidationError("map.shift must have 2 entries");
        p.shift = {get_real(s[0], "map.shift"), get_real(s[1], "map.shift")};
      }
      json h = factor;
      h.erase("generator");
      p.torus_function = parse_trig<2>(h, "factor");
    }
  } else if (kind == "finite") {
    const std::size_t m = get_count(require(space, "states", "space"), "space.states", 1);
    if (builtin != "finite_permutation" && builtin != "strict_permutation")
      throw ValidationError("map '" + builtin + "' does not live on space 'finite'");
    for (const auto& v : get_as<std::vector<std::int64_t>>(require(map, "table", "map"), "map.table")) {
      if (v < 0) throw ValidationError("map.table entries must be nonnegative");
      p.table.push_back(static_cast<std::size_t>(v));
    }
    if (p.table.size() != m) throw ValidationError("map.table must have space.states entries");
    const char* key = builtin == "strict_permutation" ? "generator" : "values";
    p.values = parse_values(require(factor, key, "factor"), key);
    if (p.values.size() != m) throw ValidationError(std::string("factor.") + key + " must have space.states entries");
  } else {
    throw ValidationError("space.kind must be one of circle, torus2, finite");
  }
  return builtin_system(builtin, p);
}

inline RunParams parse_params(const json& j) {
  RunParams r;
  if (j.is_null()) return r;
  check_keys(j, "params",
             {"n_max", "grid", "k", "k_range", "seed", "method", "order", "t_window", "t_samples", "n_scan", "samples",
              "t_starts", "trace_steps", "resolution", "tol_zero", "tol_profile", "tol_inverse", "stabilization_tol",
              "max_iterations", "csv_row_limit", "profile", "profile_csv", "lambda_nonvanishing", "generators"});
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0)) throw ValidationError(std::string(what) + " must be positive");
    return v;
  };
  if (j.contains("n_max")) r.n_max = get_count(j.at("n_max"), "n_max", 1);
  if (j.contains("grid")) r.grid = get_count(j.at("grid"), "grid", 2);
  if (j.contains("k")) r.k = get_real(j.at("k"), "k");
  if (j.contains("k_range")) {
    r.k_range_text = get_as<std::string>(j.at("k_range"), "k_range");
    r.k_range = parse_k_range(*r.k_range_text);
  }
  if (j.contains("seed")) r.seed = get_as<std::uint64_t>(j.at("seed"), "seed");
  if (j.contains("method")) r.method = get_as<std::string>(j.at("method"), "method");
  if (j.contains("order")) r.order = get_count(j.at("order"), "order", 1);
  if (j.contains("t_window")) {
    const auto w = j.at("t_window");
    if (!w.is_array() || w.size() != 2) throw ValidationError("t_window must be [lo, hi]");
    r.t_window = {get_real(w[0], "t_window"), get_real(w[1], "t_window")};
    if (!(r.t_window.lo < r.t_window.hi)) throw ValidationError("t_window needs lo < hi");
  }
  if (j.contains("t_samples")) r.t_samples = get_count(j.at("t_samples"), "t_samples", 2);
  if (j.contains("n_scan")) r.n_scan = get_count(j.at("n_scan"), "n_scan", 1);
  if (j.contains("samples")) r.samples = get_count(j.at("samples"), "samples", 1);
  if (j.contains("t_starts")) r.t_starts = get_count(j.at("t_starts"), "t_starts", 1);
  if (j.contains("trace_steps")) r.trace_steps = get_count(j.at("trace_steps"), "trace_steps");
  if (j.contains("resolution")) r.resolution = positive(get_real(j.at("resolution"), "resolution"), "resolution");
  if (j.contains("tol_zero")) r.tol_zero = positive(get_real(j.at("tol_zero"), "tol_zero"), "tol_zero");
  if (j.contains("tol_profile")) r.tol_profile = positive(get_real(j.at("tol_profile"), "tol_profile"), "tol_profile");
  if (j.contains("tol_inverse")) r.tol_inverse = positive(get_real(j.at("tol_inverse"), "tol_inverse"), "tol_inverse");
  if (j.contains("stabilization_tol"))
    r.stabilization_tol = positive(get_real(j.at("stabilization_tol"), "stabilization_tol"), "stabilization_tol");
  if (j.contains("max_iterations")) r.max_iterations = static_cast<std::int64_t>(get_count(j.at("max_iterations"), "max_iterations", 1));
  if (j.contains("csv_row_limit")) r.csv_row_limit = get_count(j.at("csv_row_limit"), "csv_row_limit");
  if (j.contains("profile")) {
    std::vector<double> v;
    if (!j.at("profile").is_array()) throw ValidationError("profile must be an array of numbers");
    for (const auto& x : j.at("profile")) v.push_back(get_real(x, "profile"));
    r.profile = std::move(v);
  }
  if (j.contains("profile_csv")) r.profile_csv = get_as<std::string>(j.at("profile_csv"), "profile_csv");
  if (j.contains("lambda_nonvanishing")) r.lambda_nonvanishing = get_as<bool>(j.at("lambda_nonvanishing"), "lambda_nonvanishing");
  if (j.contains("generators")) {
    const auto& g = j.at("generators");
    if (g.is_string()) {
      // "1, s" shorthand
      std::string s = g.get<std::string>(), cur;
      for (char c : s + ",") {
        if (c == ',') {
          const auto a = cur.find_first_not_of(" \t");
          if (a != std::string::npos) r.generators.push_back(cur.substr(a, cur.find_last_not_of(" \t") - a + 1));
          cur.clear();
        } else {
          cur.push_back(c);
        }
      }
    } else if (g.is_array()) {
      for (const auto& x : g) r.generators.push_back(x.is_string() ? x.get<std::string>() : x.dump());
    } else {
      throw ValidationError("generators must be a list or a comma-separated string");
    }
  }
  return r;
}

}  // namespace detail

/// Validates `doc` and builds the system. `doc` must already contain any
/// flag overrides; "out" is split off so it never reaches the cache key.
inline RunConfig load_config(json doc) {
  if (!doc.is_object()) throw ValidationError("config must be a JSON object");
  detail::check_keys(doc, "config", {"space", "map", "factor", "command", "params", "out"});
  RunConfig cfg;
  if (doc.contains("out")) {
    cfg.out = detail::get_as<std::string>(doc.at("out"), "out");
    doc.erase("out");
  }
  cfg.command = detail::get_as<std::string>(detail::require(doc, "command", "config"), "command");
  if (!known_commands().count(cfg.command)) throw ValidationError("unknown command: " + cfg.command);
  cfg.params = detail::parse_params(doc.contains("params") ? doc.at("params") : json());
  const bool has_system = doc.contains("space") || doc.contains("map") || doc.contains("factor");
  if (has_system || !system_optional(cfg.command)) {
    Budget b;
    b.max_iterations = cfg.params.max_iterations;
    b.tol_inverse = cfg.params.tol_inverse;
    cfg.system = detail::parse_system(doc, cfg.params.grid, b);
  }
  cfg.raw = std::move(doc);
  return cfg;
}

}  // namespace lcsmt::cli
