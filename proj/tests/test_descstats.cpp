#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "solarterm/descstats.hpp"
#include "solarterm/error.hpp"
#include "solarterm/special.hpp"
#include "support.hpp"

using namespace solarterm;

namespace {

double ks_uniform(std::vector<double> p) {
  std::sort(p.begin(), p.end());
  const double n = static_cast<double>(p.size());
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - p[i], p[i] - static_cast<double>(i) / n});
  }
  return d;
}

}  // namespace

TEST(Moments, SmallExample) {
  const std::vector<double> x{1, 2, 3, 4};
  const auto m = moments(x);
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_NEAR(m.std, std::sqrt(5.0 / 3.0), 1e-15);
  EXPECT_NEAR(*m.skewness, 0.0, 1e-15);
  EXPECT_NEAR(*m.kurtosis, 2.5625 / 1.5625, 1e-14);
}

TEST(Moments, ZeroVarianceLeavesShapeUndefined) {
  const std::vector<double> x{0.01, 0.01, 0.01};
  const auto m = moments(x);
  EXPECT_DOUBLE_EQ(m.mean, 0.01);
  EXPECT_DOUBLE_EQ(m.std, 0.0);
  EXPECT_FALSE(m.skewness);
  EXPECT_FALSE(m.kurtosis);
  EXPECT_THROW((void)moments(std::vector<double>{1.0}), DataError);
}

TEST(Moments, AffineEquivariance) {
  const auto x = testsupport::normal_draws(21, 200);
  for (double a : {3.0, -0.5}) {
    std::vector<double> y;
    for (double v : x) y.push_back(a * v + 7.0);
    const auto mx = moments(x), my = moments(y);
    EXPECT_NEAR(my.mean, a * mx.mean + 7.0, 1e-12);
    EXPECT_NEAR(my.std, std::abs(a) * mx.std, 1e-12);
    EXPECT_NEAR(*my.skewness, (a > 0 ? 1 : -1) * *mx.skewness, 1e-10);
    EXPECT_NEAR(*my.kurtosis, *mx.kurtosis, 1e-10);
    const auto tx = t_test_mean(x);
    std::vector<double> z;
    for (double v : x) z.push_back(a * v);
    EXPECT_NEAR(t_test_mean(z).statistic, (a > 0 ? 1 : -1) * tx.statistic, 1e-10);
    const auto wx = shapiro_wilk(x), wy = shapiro_wilk(y);
    EXPECT_NEAR(wy.statistic, wx.statistic, 1e-6);
    EXPECT_NEAR(wy.p_value, wx.p_value, 1e-6);
  }
}

TEST(TTest, Examples) {
  const auto sym = t_test_mean(std::vector<double>{1.0, -1.0});
  EXPECT_DOUBLE_EQ(sym.statistic, 0.0);
  EXPECT_DOUBLE_EQ(sym.p_value, 1.0);
  const auto r = t_test_mean(std::vector<double>{0.01, 0.02, 0.03});
  EXPECT_NEAR(r.statistic, 3.4641016151377544, 1e-12);
  EXPECT_NEAR(r.p_value, 0.07417990022744854, 1e-10);
  EXPECT_THROW((void)t_test_mean(std::vector<double>{0.5, 0.5, 0.5}), DataError);
}

TEST(ShapiroWilk, PinnedReferenceValues) {
  const auto u30 = testsupport::lcg_uniform(12345, 30);
  EXPECT_NEAR(u30[0], 0.02040268573909998, 1e-15);
  EXPECT_NEAR(u30[2], 0.5431557944975793, 1e-15);
  const auto a = shapiro_wilk(u30);
  EXPECT_NEAR(a.statistic, 0.9405367751, 1e-4);
  EXPECT_NEAR(a.p_value, 0.0940378642, 1e-4);

  const auto b = shapiro_wilk(testsupport::lcg_uniform(777, 8));
  EXPECT_NEAR(b.statistic, 0.9574049672, 1e-4);
  EXPECT_NEAR(b.p_value, 0.7850494736, 1e-4);

  const auto c = shapiro_wilk(std::vector<double>{0.3, 1.1, 2.9});
  EXPECT_NEAR(c.statistic, 0.9530075188, 1e-4);
  EXPECT_NEAR(c.p_value, 0.5826723401, 1e-4);

  std::vector<double> z;
  for (double u : testsupport::lcg_uniform(2024, 200)) z.push_back(special::normal_quantile(u));
  const auto d = shapiro_wilk(z);
  EXPECT_NEAR(d.statistic, 0.9933620189, 1e-4);
  EXPECT_NEAR(d.p_value, 0.5089539672, 1e-4);
}

TEST(ShapiroWilk, NormalQuantilesAreNearlyPerfect) {
  std::vector<double> q;
  for (int i = 1; i <= 50; ++i) q.push_back(special::normal_quantile((i - 0.5) / 50.0));
  const auto r = shapiro_wilk(q);
  EXPECT_GT(r.statistic, 0.99);
  EXPECT_LE(r.statistic, 1.0);
}

TEST(ShapiroWilk, DomainErrors) {
  EXPECT_THROW((void)shapiro_wilk(std::vector<double>{1.0, 2.0}), DataError);
  EXPECT_THROW((void)shapiro_wilk(std::vector<double>(5001, 0.0)), DataError);
  EXPECT_THROW((void)shapiro_wilk(std::vector<double>{2.0, 2.0, 2.0, 2.0}), DataError);
}

TEST(PValues, ApproximatelyUniformUnderTheNull) {
  std::vector<double> pt, psw;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto x = testsupport::normal_draws(1000 + s, 30);
    pt.push_back(t_test_mean(x).p_value);
    psw.push_back(shapiro_wilk(x).p_value);
  }
  EXPECT_LT(ks_uniform(pt), 0.06);
  EXPECT_LT(ks_uniform(psw), 0.06);
}

TEST(Describe, NeverThrowsForSmallSamples) {
  const auto one = describe(std::vector<double>{0.5});
  EXPECT_EQ(one.n, 1);
  EXPECT_DOUBLE_EQ(one.mean, 0.5);
  EXPECT_FALSE(one.t_test);
  EXPECT_FALSE(one.shapiro);
  const auto two = describe(std::vector<double>{0.5, 1.5});
  EXPECT_TRUE(two.t_test);
  EXPECT_FALSE(two.shapiro);
}

TEST(PerTermStats, ConstantTermSample) {
  const auto days = testsupport::weekdays(1995, 2022);
  auto r = testsupport::returns_on(days, testsupport::normal_draws(8, days.size() - 1, 0.015));
  auto ls = label_returns(r, 0);
  for (std::size_t t = 0; t < ls.rows(); ++t)
    if (ls.term_of_row(t) == 3) r.values[t] = 0.01;
  ls = label_returns(r, 0);
  const auto rows = per_term_stats(ls);
  ASSERT_EQ(rows.size(), 24u);
  for (int k = 1; k <= 24; ++k) EXPECT_EQ(rows[static_cast<std::size_t>(k - 1)].order, k);
  const auto& row3 = rows[2];
  EXPECT_DOUBLE_EQ(row3.stats.mean, 0.01);
  EXPECT_DOUBLE_EQ(row3.stats.std, 0.0);
  EXPECT_TRUE(row3.flagged);
  EXPECT_EQ(row3.stats.n, ls.term_count(3));
  const auto s1 = term_sample(ls, 1);
  EXPECT_NEAR(rows[0].stats.mean, moments(s1).mean, 1e-15);
}
