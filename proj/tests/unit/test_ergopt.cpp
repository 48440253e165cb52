#include <gtest/gtest.h>

#include <random>

#include "lcsmt/ergopt.hpp"

using namespace lcsmt;

namespace {

const double kGolden = (std::sqrt(5.0) - 1.0) / 2.0;

FiniteSystem swap_fixed() { return make_finite_permutation({1, 0, 2}, {Rational(0), Rational(4), Rational(1)}); }

FiniteSystem random_finite(std::mt19937_64& rng, std::size_t m) {
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::uniform_int_distribution<int> v(-10, 10);
  std::vector<Rational> h(m);
  for (auto& x : h) x = Rational(v(rng));
  return make_finite_permutation(perm, h);
}

// Oracle: the mean over the orbit of x, found by walking until return.
Rational orbit_mean(const FiniteSystem& sys, std::size_t x) {
  Rational s(0);
  std::size_t len = 0, y = x;
  do {
    s += sys.factor(y);
    y = sys.table()[y];
    ++len;
  } while (y != x);
  return s / Rational(len);
}

std::pair<Rational, Rational> brute_extrema(const FiniteSystem& sys) {
  Rational lo = orbit_mean(sys, 0), hi = lo;
  for (std::size_t x = 1; x < sys.size(); ++x) {
    const Rational m = orbit_mean(sys, x);
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  return {lo, hi};
}

Rational shifted_max(const FiniteSystem& sys, const std::vector<Rational>& f) {
  Rational hi = sys.factor(0) + f[sys.forward(0)] - f[0];
  for (std::size_t x = 1; x < sys.size(); ++x) hi = std::max(hi, Rational(sys.factor(x) + f[sys.forward(x)] - f[x]));
  return hi;
}

CirclePolynomial sin1() {
  CirclePolynomial p;
  p.terms.push_back({{1}, 0.0, 1.0});
  return p;
}

}  // namespace

TEST(Cycles, SwapPlusFixedPoint) {
  const auto c = cycle_mean_extrema(swap_fixed());
  ASSERT_EQ(c.cycles.size(), 2u);
  EXPECT_EQ(c.max_mean, Rational(2));
  EXPECT_EQ(c.min_mean, Rational(1));
  EXPECT_EQ(c.cycles[c.cycle_of[0]].mean, Rational(2));
  EXPECT_EQ(c.cycles[c.cycle_of[2]].mean, Rational(1));
}

TEST(Cycles, IdentityAndSingleCycle) {
  auto id = make_finite_permutation({0, 1, 2, 3}, {Rational(5), Rational(-2), Rational(1), Rational(0)});
  const auto c = cycle_mean_extrema(id);
  EXPECT_EQ(c.cycles.size(), 4u);
  EXPECT_EQ(c.max_mean, Rational(5));
  EXPECT_EQ(c.min_mean, Rational(-2));
  auto one = make_finite_permutation({1, 2, 3, 0}, {Rational(5), Rational(-2), Rational(1), Rational(0)});
  const auto d = cycle_mean_extrema(one);
  EXPECT_EQ(d.cycles.size(), 1u);
  EXPECT_EQ(d.max_mean, Rational(1));
  EXPECT_EQ(d.min_mean, Rational(1));
}

TEST(Cycles, PartitionAndOracleAgreement) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    auto sys = random_finite(rng, 1 + trial * 2);
    const auto c = cycle_mean_extrema(sys);
    std::vector<int> seen(sys.size(), 0);
    for (const auto& cy : c.cycles)
      for (std::size_t j = 0; j < cy.states.size(); ++j) {
        ++seen[cy.states[j]];
        EXPECT_EQ(sys.forward(cy.states[j]), cy.states[(j + 1) % cy.states.size()]);
      }
    for (int s : seen) EXPECT_EQ(s, 1);
    const auto [lo, hi] = brute_extrema(sys);
    EXPECT_EQ(c.min_mean, lo);
    EXPECT_EQ(c.max_mean, hi);
    EXPECT_GE(c.max_mean, c.min_mean);
  }
}

TEST(Minmax, ExactFiniteSwap) {
  auto r = minmax_coboundary(swap_fixed(), OptimizationMethod::ExactFinite);
  EXPECT_EQ(r.value, Rational(2));
  EXPECT_EQ(r.certificate, 0.0);
  EXPECT_TRUE(r.exact);
  EXPECT_EQ(shifted_max(swap_fixed(), r.potential), Rational(2));
  EXPECT_EQ(*std::min_element(r.potential.begin(), r.potential.end()), Rational(0));
}

TEST(Minmax, MaxminSwap) {
  auto r = maxmin_coboundary(swap_fixed(), OptimizationMethod::ExactFinite);
  EXPECT_EQ(r.value, Rational(1));
}

TEST(Minmax, ConstantFactor) {
  auto sys = make_finite_permutation({2, 0, 1}, {Rational(3, 2), Rational(3, 2), Rational(3, 2)});
  auto r = minmax_coboundary(sys, OptimizationMethod::ExactFinite);
  EXPECT_EQ(r.value, Rational(3, 2));
  for (const auto& v : r.potential) EXPECT_EQ(v, Rational(0));
  EXPECT_EQ(maxmin_coboundary(sys, OptimizationMethod::ExactFinite).value, Rational(3, 2));
  auto rot = make_rotation(kGolden, CirclePolynomial::constant_value(0.7), 64);
  OptimizeOptions o;
  o.grid = 64;
  o.n = 8;
  EXPECT_NEAR(minmax_coboundary(rot, OptimizationMethod::BirkhoffFn, o).value, 0.7, 1e-14);
  EXPECT_NEAR(maxmin_coboundary(rot, OptimizationMethod::BirkhoffFn, o).value, 0.7, 1e-14);
}

TEST(Minmax, StrictFiniteAttainsZeroWithGenerator) {
  // h = f - f o psi for f = [0, 5, 2, 7] on a 4-cycle
  const std::vector<std::size_t> table{1, 2, 3, 0};
  const std::vector<Rational> f{Rational(0), Rational(5), Rational(2), Rational(7)};
  std::vector<Rational> h(4);
  for (std::size_t x = 0; x < 4; ++x) h[x] = f[x] - f[table[x]];
  auto sys = make_finite_permutation(table, h);
  auto r = minmax_coboundary(sys, OptimizationMethod::ExactFinite);
  EXPECT_EQ(r.value, Rational(0));
  for (std::size_t x = 0; x < 4; ++x) EXPECT_EQ(r.potential[x] - r.potential[0], f[x] - f[0]);
  EXPECT_EQ(maxmin_coboundary(sys, OptimizationMethod::ExactFinite).value, Rational(0));
}

TEST(Minmax, MethodSpaceMismatch) {
  EXPECT_THROW(minmax_coboundary(swap_fixed(), OptimizationMethod::BirkhoffFn), ValidationError);
  EXPECT_THROW(minmax_coboundary(swap_fixed(), OptimizationMethod::GridDescent), ValidationError);
  auto rot = make_rotation(0.5, CirclePolynomial::constant_value(0.2));
  EXPECT_THROW(minmax_coboundary(rot, OptimizationMethod::ExactFinite), ValidationError);
  EXPECT_THROW(parse_method("simplex"), ValidationError);
}

// Sandwich: min A_n <= maxmin <= minmax <= max A_n, and no potential beats the optimum.
TEST(MinmaxProperty, SandwichDualityGauge) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> v(-30, 30);
  for (int trial = 0; trial < 25; ++trial) {
    auto sys = random_finite(rng, 2 + trial);
    const auto up = minmax_coboundary(sys, OptimizationMethod::ExactFinite);
    const auto down = maxmin_coboundary(sys, OptimizationMethod::ExactFinite);
    EXPECT_EQ(down.value, -minmax_coboundary(detail::negated(sys), OptimizationMethod::ExactFinite).value);
    EXPECT_LE(down.value, up.value);
    auto t = birkhoff_table(sys, sys.sample_points(), 30);
    for (std::size_t n = 0; n < 30; ++n) {
      EXPECT_LE(t.min_average[n], down.value);
      EXPECT_LE(up.value, t.max_average[n]);
    }
    std::vector<Rational> f0(sys.size());
    for (auto& x : f0) x = Rational(v(rng), 7);
    EXPECT_GE(shifted_max(sys, f0), up.value);
    const auto shifted = gauge_shift(sys, f0);
    EXPECT_EQ(minmax_coboundary(shifted, OptimizationMethod::ExactFinite).value, up.value);
    EXPECT_EQ(maxmin_coboundary(shifted, OptimizationMethod::ExactFinite).value, down.value);
    EXPECT_EQ(shifted_max(sys, up.potential), up.value);
  }
}

TEST(Strictness, Examples) {
  auto a = make_finite_permutation({1, 0}, {Rational(3), Rational(-3)});
  auto r = is_strict_finite(a);
  ASSERT_TRUE(r.strict);
  const auto& f = *r.generator;
  for (std::size_t x = 0; x < 2; ++x) EXPECT_EQ(a.factor(x), f[x] - f[a.forward(x)]);
  EXPECT_FALSE(is_strict_finite(make_finite_permutation({1, 0}, {Rational(1), Rational(0)})).strict);
  auto z = is_strict_finite(make_finite_permutation({1, 0, 2}, std::vector<Rational>(3)));
  ASSERT_TRUE(z.strict);
  for (const auto& v : *z.generator) EXPECT_EQ(v, Rational(0));
}

TEST(Strictness, ImpliesZeroGap) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> v(-9, 9);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t m = 3 + trial;
    auto base = random_finite(rng, m);
    std::vector<Rational> f(m), h(m);
    for (auto& x : f) x = Rational(v(rng));
    for (std::size_t x = 0; x < m; ++x) h[x] = f[x] - f[base.forward(x)];
    auto sys = base.with_factor(h, "strict");
    auto r = is_strict_finite(sys);
    ASSERT_TRUE(r.strict);
    for (std::size_t x = 0; x < m; ++x) EXPECT_EQ(h[x], (*r.generator)[x] - (*r.generator)[sys.forward(x)]);
    EXPECT_EQ(minmax_coboundary(sys, OptimizationMethod::ExactFinite).value, Rational(0));
    EXPECT_EQ(maxmin_coboundary(sys, OptimizationMethod::ExactFinite).value, Rational(0));
  }
}

TEST(ContinuousMinmax, BirkhoffBoundAndDescent) {
  auto sys = make_strict_rotation(kGolden, sin1(), 256);
  OptimizeOptions o;
  o.grid = 256;
  o.n = 64;
  auto up = minmax_coboundary(sys, OptimizationMethod::BirkhoffFn, o);
  EXPECT_FALSE(up.heuristic);
  EXPECT_LE(std::fabs(up.value), 4.0 / 64.0);
  EXPECT_LE(up.certificate, 1e-9);
  auto down = maxmin_coboundary(sys, OptimizationMethod::BirkhoffFn, o);
  EXPECT_LE(down.value, up.value);
  auto gd = minmax_coboundary(sys, OptimizationMethod::GridDescent, o);
  EXPECT_TRUE(gd.heuristic);
  EXPECT_TRUE(std::isfinite(gd.value));
  EXPECT_EQ(gd.potential.size(), 256u);
}

TEST(ContinuousMinmax, BirkhoffBoundTightensWithOrder) {
  CirclePolynomial h;
  h.constant = 0.1;
  h.terms.push_back({{1}, 1.0, 0.0});
  auto sys = make_rotation(kGolden, h, 512);
  OptimizeOptions o;
  o.grid = 512;
  double prev = INFINITY;
  for (std::size_t n : {8u, 64u, 512u}) {
    o.n = n;
    const double v = minmax_coboundary(sys, OptimizationMethod::BirkhoffFn, o).value;
    EXPECT_GE(v, 0.1 - 1e-12);
    EXPECT_LE(v, prev + 1e-12);
    prev = v;
  }
}
