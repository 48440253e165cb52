#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "lcsmt/elastic.hpp"

using namespace lcsmt;

namespace {

const double kGolden = (std::sqrt(5.0) - 1.0) / 2.0;

LiouvilleProfile constant_profile(double u, std::size_t n = 10) { return {std::vector<double>(n, u), true, "const"}; }

// Oracle: c is forbidden when some sample's image (1+u)/u lies within half a
// scan step, i.e. |1 + (1-c) u| <= |u| step / 2. Evaluated by brute force.
bool scan_forbidden(const LiouvilleProfile& p, double c, double step, double tol_zero) {
  for (double u : p.samples) {
    if (std::fabs(u) < tol_zero) continue;
    if (std::fabs(1.0 + (1.0 - c) * u) <= std::fabs(u) * 0.5 * step * (1.0 + 1e-9)) return true;
  }
  return false;
}

bool near_endpoint(const ElasticitySet& E, double c, double step) {
  for (const auto& iv : E.forbidden)
    if (std::fabs(c - iv.lo) <= step || std::fabs(c - iv.hi) <= step) return true;
  return false;
}

LiouvilleProfile random_profile(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> clusters(1, 4), count(1, 300);
  std::uniform_real_distribution<double> centre(-4.0, 4.0), width(0.0, 1.5), unit(0.0, 1.0);
  LiouvilleProfile p;
  const int K = clusters(rng);
  for (int k = 0; k < K; ++k) {
    const double a = centre(rng), w = width(rng);
    const int n = count(rng);
    for (int i = 0; i < n; ++i) p.samples.push_back(a + w * unit(rng));
  }
  return p;
}

CirclePolynomial sin1() {
  CirclePolynomial p;
  p.terms.push_back({{1}, 0.0, 1.0});
  return p;
}

}  // namespace

TEST(Elasticity, FirstKindProfile) {
  auto E = elasticity_from_profile(constant_profile(-1.0));
  EXPECT_TRUE(is_punctured_line(E));
  EXPECT_TRUE(E.is_forbidden(0.0));
  EXPECT_TRUE(E.contains(1e-9));
  EXPECT_TRUE(E.contains(-3.0));
  EXPECT_TRUE(E.equality);
}

TEST(Elasticity, UnitProfile) {
  auto E = elasticity_from_profile(constant_profile(1.0));
  ASSERT_EQ(E.forbidden.size(), 1u);
  EXPECT_EQ(E.forbidden[0].lo, 2.0);
  EXPECT_EQ(E.forbidden[0].hi, 2.0);
  EXPECT_TRUE(E.contains(0.0));
  EXPECT_FALSE(is_punctured_line(E));
}

TEST(Elasticity, DenseIntervalMatchesScan) {
  LiouvilleProfile p;
  for (int i = 0; i <= 10000; ++i) p.samples.push_back(1.0 + i * 1e-4);
  ElasticOptions o;
  auto E = elasticity_from_profile(p, o);
  ASSERT_EQ(E.forbidden.size(), 1u);
  EXPECT_NEAR(E.forbidden[0].lo, 1.5, 1e-12);
  EXPECT_NEAR(E.forbidden[0].hi, 2.0, 1e-12);
  for (int i = -10000; i <= 10000; ++i) {
    const double c = i * 1e-3;
    if (near_endpoint(E, c, 1e-3)) continue;
    EXPECT_EQ(E.is_forbidden(c), scan_forbidden(p, c, 1e-3, o.tol_zero)) << c;
  }
}

TEST(Elasticity, ZeroSamplesContributeNothing) {
  LiouvilleProfile p{{0.0, 1e-14, 1.0}, true, "z"};
  auto E = elasticity_from_profile(p);
  EXPECT_TRUE(E.contains_zero_u);
  ASSERT_EQ(E.forbidden.size(), 1u);
  EXPECT_EQ(E.forbidden[0].lo, 2.0);
}

TEST(Elasticity, EqualityFlagAndErrors) {
  LiouvilleProfile p{{2.0}, false, "v"};
  EXPECT_FALSE(elasticity_from_profile(p).equality);
  EXPECT_THROW(elasticity_from_profile(LiouvilleProfile{}), ValidationError);
  EXPECT_THROW(elasticity_from_profile(LiouvilleProfile{{1.0, NAN}, true, ""}), ValidationError);
}

TEST(Elasticity, VanishingMarginCriterion) {
  LiouvilleProfile p{{1.0, 4.0}, true, ""};
  EXPECT_EQ(vanishing_margin(p, 2.0), 0.0);
  EXPECT_EQ(vanishing_margin(p, 1.25), 0.0);
  EXPECT_GT(vanishing_margin(p, 1.6), 0.0);
}

// Scan agreement on random profiles; openness means forbidden pieces are closed.
TEST(ElasticityProperty, RandomProfilesAgreeWithScan) {
  std::mt19937_64 rng(99);
  ElasticOptions o;
  const double step = 1e-3;
  o.resolution = step;
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = random_profile(rng);
    const auto E = elasticity_from_profile(p, o);
    for (std::size_t i = 1; i < E.forbidden.size(); ++i) EXPECT_GT(E.forbidden[i].lo, E.forbidden[i - 1].hi);
    for (const auto& iv : E.forbidden) EXPECT_LE(iv.lo, iv.hi);
    for (int i = -10000; i <= 10000; ++i) {
      const double c = i * step;
      if (E.is_forbidden(c) == scan_forbidden(p, c, step, o.tol_zero)) continue;
      EXPECT_TRUE(near_endpoint(E, c, step)) << "trial " << trial << " c=" << c;
    }
  }
}

TEST(FirstKind, Examples) {
  EXPECT_TRUE(first_kind_test(constant_profile(-1.0)));
  auto p = constant_profile(-1.0);
  p.samples[3] = -0.5;
  EXPECT_FALSE(first_kind_test(p));
  EXPECT_FALSE(first_kind_test(constant_profile(1.0)));
}

TEST(FirstKindProperty, EquivalentToPuncturedLine) {
  std::mt19937_64 rng(5);
  std::vector<LiouvilleProfile> profiles{constant_profile(-1.0), constant_profile(1.0), constant_profile(-1.0, 1)};
  for (int i = 0; i < 30; ++i) profiles.push_back(random_profile(rng));
  auto nearly = constant_profile(-1.0);
  nearly.samples[0] = -1.0 + 1e-6;
  profiles.push_back(nearly);
  for (const auto& p : profiles) EXPECT_EQ(first_kind_test(p), is_punctured_line(elasticity_from_profile(p)));
}

TEST(ProfileCsv, ReadsFirstColumnWithHeader) {
  const std::string path = ::testing::TempDir() + "profile.csv";
  {
    std::ofstream out(path);
    out << "u,weight\n-1,3\n-1.0,4\n\n-1e0,1\n";
  }
  auto p = read_profile_csv(path);
  EXPECT_EQ(p.samples.size(), 3u);
  EXPECT_TRUE(first_kind_test(p));
  {
    std::ofstream out(path);
    out << "u\n1\nbad\n";
  }
  EXPECT_THROW(read_profile_csv(path), ValidationError);
  std::remove(path.c_str());
  EXPECT_THROW(read_profile_csv(path), ValidationError);
}

TEST(MappingTorus, ConstantFactorProfile) {
  auto sys = make_rotation(kGolden, CirclePolynomial::constant_value(0.2), 16);
  TorusProfileOptions o;
  o.t_samples = 401;
  auto p = mapping_torus_profile(sys, 1.0, Interval{-10.0, 10.0}, o);
  EXPECT_TRUE(p.lambda_nonvanishing);
  auto E = elasticity_from_profile(p);
  ASSERT_FALSE(E.forbidden.empty());
  EXPECT_GE(E.forbidden.front().lo, -1e-12);
  EXPECT_LT(E.forbidden.back().hi, 1.0);
  EXPECT_TRUE(E.contains(1.0));
  // k = 1 times c is admissible exactly when c != 0.2
  EXPECT_TRUE(E.is_forbidden(0.2));
}

TEST(MappingTorus, ProductMuIsFirstKind) {
  // mu = f o p1 - t has d_t mu = -1 everywhere
  auto sys = make_strict_rotation(kGolden, sin1(), 64);
  LiouvilleProfile p;
  for (double x : sys.sample_points()) {
    const double h = 1e-6, t = 0.3;
    auto mu = [&](double s) { return sys.generator(x) - s; };
    p.samples.push_back((mu(t + h) - mu(t - h)) / (2 * h));
  }
  ElasticOptions o;
  o.tol_profile = 1e-9;
  EXPECT_TRUE(first_kind_test(p, o));
  auto exact = constant_profile(-1.0, p.samples.size());
  EXPECT_TRUE(is_punctured_line(elasticity_from_profile(exact)));
}

TEST(MappingTorus, StrictPresetScaledAdmissibility) {
  auto sys = make_strict_rotation(kGolden, sin1(), 32);
  TorusProfileOptions o;
  o.t_samples = 201;
  auto p = mapping_torus_profile(sys, 2.0, Interval{-4.0, 4.0}, o);
  auto E = elasticity_from_profile(p);
  // gap is {0}: c = 0 must be forbidden
  EXPECT_TRUE(E.is_forbidden(0.0));
}

TEST(Rank, Examples) {
  auto rank_of = [](std::initializer_list<const char*> gens) {
    PeriodGroup g;
    for (const char* s : gens) g.generators.push_back(parse_period(s));
    return lcs_rank(g);
  };
  EXPECT_EQ(rank_of({"1", "s"}), 2u);
  EXPECT_EQ(rank_of({"1", "3/2"}), 1u);
  EXPECT_EQ(rank_of({"3/7", "5/7"}), 1u);
  EXPECT_EQ(rank_of({}), 0u);
  EXPECT_EQ(rank_of({"0"}), 0u);
  EXPECT_EQ(rank_of({"2s", "-1/3*s"}), 1u);
  EXPECT_EQ(rank_of({"1+s", "2+2s"}), 1u);
  EXPECT_EQ(rank_of({"1+s", "1-s"}), 2u);
  EXPECT_THROW(parse_period(""), ValidationError);
  EXPECT_THROW(parse_period("1+"), ValidationError);
  EXPECT_THROW(parse_period("x"), ValidationError);
}

TEST(RankProperty, MonotoneAndBounded) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> v(-3, 3);
  for (int trial = 0; trial < 50; ++trial) {
    PeriodGroup g;
    std::size_t prev = 0;
    for (int i = 0; i < 6; ++i) {
      g.generators.push_back({Rational(v(rng), 2), Rational(v(rng) * (trial % 2), 3)});
      const std::size_t r = lcs_rank(g);
      EXPECT_GE(r, prev);
      EXPECT_LE(r, 2u);
      prev = r;
    }
  }
}
