#pragma once

// Model state spaces and conformal dynamical systems (psi, psi^-1, h).
//
// A system is the pair that every quantitative statement in this library
// depends on: an invertible map on a model space plus its conformal factor.
// Contact forms are never represented.

#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <type_traits>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "lcsmt/errors.hpp"
#include "lcsmt/rational.hpp"

namespace lcsmt {

enum class SpaceKind { Circle, Torus2, FiniteSet };

inline std::string_view to_string(SpaceKind kind) {
  switch (kind) {
    case SpaceKind::Circle: return "circle";
    case SpaceKind::Torus2: return "torus2";
    case SpaceKind::FiniteSet: return "finite";
  }
  return "?";
}

struct ModelSpace {
  SpaceKind kind = SpaceKind::Circle;
  std::size_t grid_resolution = 0;  // per dimension, continuous kinds only
  std::size_t states = 0;           // FiniteSet only

  static ModelSpace circle(std::size_t grid) { return checked({SpaceKind::Circle, grid, 0}); }
  static ModelSpace torus2(std::size_t grid) { return checked({SpaceKind::Torus2, grid, 0}); }
  static ModelSpace finite(std::size_t m) { return checked({SpaceKind::FiniteSet, 0, m}); }

  bool continuous() const { return kind != SpaceKind::FiniteSet; }

  void validate() const {
    if (continuous() && grid_resolution < 2)
      throw ValidationError("grid_resolution must be >= 2 for continuous spaces");
    if (!continuous() && states < 1) throw ValidationError("finite space needs at least one state");
  }

 private:
  static ModelSpace checked(ModelSpace s) {
    s.validate();
    return s;
  }
};

using Vec2 = std::array<double, 2>;

struct Budget {
  std::int64_t max_iterations = 10'000'000;
  double tol_inverse = 1e-9;
};

/// Reduces to [0, 1). Values within rounding of 1 fold back to 0.
inline double wrap_unit(double x) {
  double r = x - std::floor(x);
  if (r >= 1.0) r = 0.0;
  return r;
}
inline Vec2 wrap_unit(const Vec2& p) { return {wrap_unit(p[0]), wrap_unit(p[1])}; }

/// Distance on R/Z.
inline double circle_distance(double a, double b) {
  const double d = std::fabs(wrap_unit(a) - wrap_unit(b));
  return std::min(d, 1.0 - d);
}

inline double point_distance(double a, double b) { return circle_distance(a, b); }
inline double point_distance(const Vec2& a, const Vec2& b) {
  return std::max(circle_distance(a[0], b[0]), circle_distance(a[1], b[1]));
}
inline double point_distance(std::size_t a, std::size_t b) { return a == b ? 0.0 : 1.0; }

inline std::string format_point(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}
inline std::string format_point(const Vec2& p) { return format_point(p[0]) + ";" + format_point(p[1]); }
inline std::string format_point(std::size_t s) { return std::to_string(s); }

/// Real trigonometric polynomial on the D-torus:
/// constant + sum_j (cos_j cos(2 pi <freq_j, x>) + sin_j sin(2 pi <freq_j, x>)).
template <std::size_t D>
struct TrigPolynomial {
  struct Term {
    std::array<int, D> freq{};
    double cos_coef = 0.0;
    double sin_coef = 0.0;
  };
  double constant = 0.0;
  std::vector<Term> terms;

  static TrigPolynomial constant_value(double c) { return TrigPolynomial{c, {}}; }

  double phase(const std::array<double, D>& x, const Term& t) const {
    double s = 0.0;
    for (std::size_t d = 0; d < D; ++d) s += t.freq[d] * x[d];
    return 2.0 * std::numbers::pi * s;
  }

  double operator()(const std::array<double, D>& x) const {
    double v = constant;
    for (const auto& t : terms) {
      const double a = phase(x, t);
      if (t.cos_coef != 0.0) v += t.cos_coef * std::cos(a);
      if (t.sin_coef != 0.0) v += t.sin_coef * std::sin(a);
    }
    return v;
  }
  double operator()(double x) const
    requires(D == 1)
  {
    return (*this)(std::array<double, 1>{x});
  }
};

using CirclePolynomial = TrigPolynomial<1>;
using TorusPolynomial = TrigPolynomial<2>;

/// Requirements shared by every system the algorithms accept.
template <class S>
concept ConformalDynamics = requires(const S& s, const typename S::point_type& p) {
  typename S::point_type;
  typename S::scalar_type;
  { s.forward(p) } -> std::same_as<typename S::point_type>;
  { s.backward(p) } -> std::same_as<typename S::point_type>;
  { s.factor(p) } -> std::convertible_to<typename S::scalar_type>;
  { s.contains(p) } -> std::same_as<bool>;
  { s.space() } -> std::convertible_to<ModelSpace>;
  { s.label() } -> std::convertible_to<std::string>;
  { s.has_generator() } -> std::same_as<bool>;
  { s.generator(p) } -> std::convertible_to<typename S::scalar_type>;
};

/// Permutation of m labelled states with a rational conformal factor.
class FiniteSystem {
 public:
  using point_type = std::size_t;
  using scalar_type = Rational;

  FiniteSystem(std::vector<std::size_t> table, std::vector<Rational> factor, std::string label = "finite",
               std::optional<std::vector<Rational>> generator = std::nullopt)
      : table_(std::move(table)),
        factor_(std::move(factor)),
        generator_(std::move(generator)),
        label_(std::move(label)) {
    const std::size_t m = table_.size();
    if (m == 0) throw ValidationError("finite system needs at least one state");
    if (factor_.size() != m) throw ValidationError("factor table size differs from permutation size");
    if (generator_ && generator_->size() != m) throw ValidationError("generator size differs from permutation size");
    inverse_.assign(m, m);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = table_[i];
      if (j >= m) throw ValidationError("permutation entry out of range");
      if (inverse_[j] != m) throw ValidationError("permutation table is not a bijection");
      inverse_[j] = i;
    }
    space_ = ModelSpace::finite(m);
  }

  std::size_t forward(std::size_t x) const { return table_.at(x); }
  std::size_t backward(std::size_t x) const { return inverse_.at(x); }
  const Rational& factor(std::size_t x) const { return factor_.at(x); }
  bool contains(std::size_t x) const { return x < table_.size(); }
  const ModelSpace& space() const { return space_; }
  const std::string& label() const { return label_; }
  bool has_generator() const { return generator_.has_value(); }
  Rational generator(std::size_t x) const { return generator_ ? generator_->at(x) : Rational(0); }

  std::size_t size() const { return table_.size(); }
  const std::vector<std::size_t>& table() const { return table_; }
  const std::vector<std::size_t>& inverse_table() const { return inverse_; }
  const std::vector<Rational>& factor_table() const { return factor_; }

  std::vector<std::size_t> sample_points() const {
    std::vector<std::size_t> pts(size());
    for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = i;
    return pts;
  }

  FiniteSystem with_factor(std::vector<Rational> factor, std::string label) const {
    return FiniteSystem(table_, std::move(factor), std::move(label));
  }

 private:
  std::vector<std::size_t> table_;
  std::vector<std::size_t> inverse_;
  std::vector<Rational> factor_;
  std::optional<std::vector<Rational>> generator_;
  std::string label_;
  ModelSpace space_;
};

/// Invertible map on the circle or the 2-torus with a real conformal factor.
/// Images are reduced to [0,1) after every application.
template <class Point>
class ContinuousSystem {
 public:
  using point_type = Point;
  using scalar_type = double;
  using Map = std::function<Point(const Point&)>;
  using Function = std::function<double(const Point&)>;

  ContinuousSystem(ModelSpace space, Map forward, Map backward, Function factor, std::string label,
                   std::optional<Function> generator = std::nullopt, Budget budget = {})
      : space_(space),
        forward_(std::move(forward)),
        backward_(std::move(backward)),
        factor_(std::move(factor)),
        generator_(std::move(generator)),
        label_(std::move(label)),
        budget_(budget) {
    space_.validate();
    if (!space_.continuous()) throw ValidationError("continuous system on a finite space");
    validate_on_grid();
  }

  Point forward(const Point& x) const { return wrap_unit(forward_(x)); }
  Point backward(const Point& x) const { return wrap_unit(backward_(x)); }
  double factor(const Point& x) const { return factor_(x); }
  bool contains(const Point& x) const {
    if constexpr (std::is_same_v<Point, double>) {
      return std::isfinite(x) && x >= 0.0 && x < 1.0;
    } else {
      return std::isfinite(x[0]) && std::isfinite(x[1]) && x[0] >= 0.0 && x[0] < 1.0 && x[1] >= 0.0 && x[1] < 1.0;
    }
  }
  const ModelSpace& space() const { return space_; }
  const std::string& label() const { return label_; }
  const Budget& budget() const { return budget_; }
  bool has_generator() const { return generator_.has_value(); }
  double generator(const Point& x) const { return generator_ ? (*generator_)(x) : 0.0; }

  /// Uniform grid with the given resolution per dimension (0 = the space's own).
  std::vector<Point> sample_points(std::size_t resolution = 0) const {
    const std::size_t g = resolution ? resolution : space_.grid_resolution;
    std::vector<Point> pts;
    if constexpr (std::is_same_v<Point, double>) {
      pts.reserve(g);
      for (std::size_t i = 0; i < g; ++i) pts.push_back(static_cast<double>(i) / static_cast<double>(g));
    } else {
      pts.reserve(g * g);
      for (std::size_t i = 0; i < g; ++i)
        for (std::size_t j = 0; j < g; ++j)
          pts.push_back({static_cast<double>(i) / static_cast<double>(g), static_cast<double>(j) / static_cast<double>(g)});
    }
    return pts;
  }

  /// Index of the nearest node of the uniform grid of the given resolution.
  std::size_t nearest_grid_index(const Point& x, std::size_t resolution) const {
    auto snap = [resolution](double v) {
      const auto idx = static_cast<std::size_t>(std::llround(wrap_unit(v) * static_cast<double>(resolution)));
      return idx % resolution;
    };
    if constexpr (std::is_same_v<Point, double>) {
      return snap(x);
    } else {
      return snap(x[0]) * resolution + snap(x[1]);
    }
  }

  ContinuousSystem with_factor(Function factor, std::string label) const {
    return ContinuousSystem(space_, forward_, backward_, std::move(factor), std::move(label), std::nullopt, budget_);
  }

  /// Same space, maps swapped: (psi^-1, psi) with the given factor.
  ContinuousSystem inverted(Function factor, std::string label) const {
    return ContinuousSystem(space_, backward_, forward_, std::move(factor), std::move(label), std::nullopt, budget_);
  }

 private:
  void validate_on_grid() const {
    for (const Point& x : sample_points()) {
      const double hv = factor(x);
      if (!std::isfinite(hv)) throw ValidationError("conformal factor is not finite at " + format_point(x));
      const double err = point_distance(backward(forward(x)), x);
      if (!(err <= budget_.tol_inverse))
        throw ValidationError("backward does not invert forward at " + format_point(x));
    }
  }

  ModelSpace space_;
  Map forward_;
  Map backward_;
  Function factor_;
  std::optional<Function> generator_;
  std::string label_;
  Budget budget_;
};

using CircleSystem = ContinuousSystem<double>;
using TorusSystem = ContinuousSystem<Vec2>;

using AnySystem = std::variant<FiniteSystem, CircleSystem, TorusSystem>;

/// Uniformly random point of the system's space.
template <ConformalDynamics S, class Rng>
typename S::point_type random_point(const S& sys, Rng& rng) {
  using P = typename S::point_type;
  if constexpr (std::is_same_v<P, std::size_t>) {
    std::uniform_int_distribution<std::size_t> pick(0, sys.space().states - 1);
    return pick(rng);
  } else {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if constexpr (std::is_same_v<P, double>) {
      return wrap_unit(u(rng));
    } else {
      const double a = u(rng);
      return P{wrap_unit(a), wrap_unit(u(rng))};
    }
  }
}

/// psi^n(x); backward iterates for negative n.
template <ConformalDynamics S>
typename S::point_type iterate(const S& sys, typename S::point_type x, std::int64_t n, const Budget& budget = {}) {
  if (!sys.contains(x)) throw DomainError("point " + format_point(x) + " is outside the model space");
  if (n > budget.max_iterations || n < -budget.max_iterations)
    throw BudgetError("iteration count " + std::to_string(n) + " exceeds budget");
  if (n >= 0) {
    for (std::int64_t i = 0; i < n; ++i) x = sys.forward(x);
  } else {
    for (std::int64_t i = 0; i < -n; ++i) x = sys.backward(x);
  }
  return x;
}

// Builtin presets --------------------------------------------------------

inline CircleSystem make_rotation(double angle, CirclePolynomial factor, std::size_t grid = 256, Budget budget = {}) {
  if (!std::isfinite(angle)) throw ValidationError("rotation angle must be finite");
  std::ostringstream label;
  label.precision(17);
  label << "rotation(" << angle << ")";
  return CircleSystem(
      ModelSpace::circle(grid), [angle](const double& x) { return x + angle; },
      [angle](const double& x) { return x - angle; }, [factor](const double& x) { return factor(x); }, label.str(),
      std::nullopt, budget);
}

/// Rotation with factor h = f - f o psi, keeping f as the generator.
inline CircleSystem make_strict_rotation(double angle, CirclePolynomial generator, std::size_t grid = 256,
                                         Budget budget = {}) {
  if (!std::isfinite(angle)) throw ValidationError("rotation angle must be finite");
  std::ostringstream label;
  label.precision(17);
  label << "strict_rotation(" << angle << ")";
  auto h = [generator, angle](const double& x) { return generator(x) - generator(wrap_unit(x + angle)); };
  return CircleSystem(
      ModelSpace::circle(grid), [angle](const double& x) { return x + angle; },
      [angle](const double& x) { return x - angle; }, h, label.str(),
      CircleSystem::Function([generator](const double& x) { return generator(x); }), budget);
}

using IntMatrix2 = std::array<std::array<long, 2>, 2>;

/// Linear toral automorphism x -> M x + shift (mod 1), det M = +-1.
/// The inverse uses the exact integer inverse matrix.
inline TorusSystem make_cat_map(IntMatrix2 m, TorusPolynomial factor, std::size_t grid = 64, Vec2 shift = {0, 0},
                                Budget budget = {}) {
  const long det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
  if (det != 1 && det != -1) throw ValidationError("toral matrix must have determinant +-1");
  const IntMatrix2 inv{{{m[1][1] * det, -m[0][1] * det}, {-m[1][0] * det, m[0][0] * det}}};
  auto apply = [](const IntMatrix2& a, const Vec2& p) {
    auto term = [](long c, double v) { return wrap_unit(static_cast<double>(c) * v); };
    return Vec2{term(a[0][0], p[0]) + term(a[0][1], p[1]), term(a[1][0], p[0]) + term(a[1][1], p[1])};
  };
  auto fwd = [m, shift, apply](const Vec2& p) {
    const Vec2 q = apply(m, p);
    return Vec2{q[0] + shift[0], q[1] + shift[1]};
  };
  auto bwd = [inv, shift, apply](const Vec2& p) { return apply(inv, Vec2{p[0] - shift[0], p[1] - shift[1]}); };
  std::ostringstream label;
  label << "cat_map([[" << m[0][0] << "," << m[0][1] << "],[" << m[1][0] << "," << m[1][1] << "]])";
  return TorusSystem(ModelSpace::torus2(grid), fwd, bwd, [factor](const Vec2& p) { return factor(p); }, label.str(),
                     std::nullopt, budget);
}

inline FiniteSystem make_finite_permutation(std::vector<std::size_t> table, std::vector<Rational> factor,
                                            std::string label = "finite_permutation") {
  return FiniteSystem(std::move(table), std::move(factor), std::move(label));
}

/// Finite permutation with factor h = f - f o psi for the given f.
inline FiniteSystem make_strict_permutation(std::vector<std::size_t> table, std::vector<Rational> generator) {
  FiniteSystem base(table, std::vector<Rational>(table.size()));
  std::vector<Rational> h(table.size());
  for (std::size_t x = 0; x < table.size(); ++x) h[x] = generator[x] - generator[base.forward(x)];
  return FiniteSystem(std::move(table), std::move(h), "strict_permutation", std::move(generator));
}

/// Parameter record for builtin_system. Only the fields relevant to the
/// chosen preset are read.
struct BuiltinParams {
  std::size_t grid = 256;
  double angle = 0.0;
  IntMatrix2 matrix{{{2, 1}, {1, 1}}};
  Vec2 shift{0.0, 0.0};
  std::vector<std::size_t> table;
  std::vector<Rational> values;
  CirclePolynomial circle_function;  // factor for rotation, generator for strict_rotation
  TorusPolynomial torus_function;
  Budget budget;
};

inline AnySystem builtin_system(std::string_view name, const BuiltinParams& p) {
  if (name == "rotation") return make_rotation(p.angle, p.circle_function, p.grid, p.budget);
  if (name == "strict_rotation") return make_strict_rotation(p.angle, p.circle_function, p.grid, p.budget);
  if (name == "cat_map") return make_cat_map(p.matrix, p.torus_function, p.grid, p.shift, p.budget);
  if (name == "finite_permutation") return make_finite_permutation(p.table, p.values);
  if (name == "strict_permutation") return make_strict_permutation(p.table, p.values);
  throw ValidationError("unknown builtin system: " + std::string(name));
}

}  // namespace lcsmt
