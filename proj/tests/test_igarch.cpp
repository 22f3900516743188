#include <gtest/gtest.h>

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "solarterm/error.hpp"
#include "solarterm/igarch.hpp"
#include "solarterm/optimize.hpp"
#include "solarterm/synth.hpp"
#include "support.hpp"

using namespace solarterm;

namespace {

LabeledSeries igarch_series(std::uint64_t seed, int years = 27, std::map<int, double> var_inj = {}, int radius = 0) {
  SynthSpec spec;
  spec.n_years = years;
  spec.gamma = 0.06;
  spec.seed = seed;
  spec.variance_injections = std::move(var_inj);
  return label_returns(synth_generate(spec).returns, radius);
}

double normal_logpdf(double z) { return -0.5 * std::log(2 * std::numbers::pi) - 0.5 * z * z; }

double second_moment(Dist d, double param) {
  boost::math::quadrature::exp_sinh<double> q;
  const double m2 = 2 * q.integrate([&](double z) { return z * z * std::exp(dist_logpdf(z, d, param)); });
  return m2;
}

double total_mass(Dist d, double param) {
  boost::math::quadrature::exp_sinh<double> q;
  return 2 * q.integrate([&](double z) { return std::exp(dist_logpdf(z, d, param)); });
}

}  // namespace

TEST(Distributions, GedShapeTwoIsNormal) {
  EXPECT_NEAR(ged_lambda(2.0), 1.0, 1e-14);
  EXPECT_NEAR(std::exp(dist_logpdf(0.0, Dist::Ged, 2.0)), 0.3989422804014327, 1e-12);
  for (double z = -5.0; z <= 5.0; z += 0.125) {
    EXPECT_NEAR(dist_logpdf(z, Dist::Ged, 2.0), normal_logpdf(z), 1e-10);
    EXPECT_DOUBLE_EQ(dist_logpdf(z, Dist::Normal), normal_logpdf(z));
  }
}

TEST(Distributions, StudentTLargeDfIsNormal) {
  for (double z : {0.0, 1.0, 2.0}) EXPECT_NEAR(dist_logpdf(z, Dist::StudentT, 1e6), normal_logpdf(z), 1e-4);
}

TEST(Distributions, UnitVarianceByQuadrature) {
  EXPECT_NEAR(second_moment(Dist::StudentT, 5.0), 1.0, 1e-6);
  EXPECT_NEAR(second_moment(Dist::Ged, 1.3), 1.0, 1e-6);
  EXPECT_NEAR(second_moment(Dist::Normal, 0.0), 1.0, 1e-6);
  EXPECT_NEAR(total_mass(Dist::StudentT, 5.0), 1.0, 1e-6);
  EXPECT_NEAR(total_mass(Dist::Ged, 1.3), 1.0, 1e-6);
}

TEST(Distributions, DomainErrorsAndParsing) {
  EXPECT_THROW((void)dist_logpdf(0.0, Dist::StudentT, 2.0), DataError);
  EXPECT_THROW((void)dist_logpdf(0.0, Dist::Ged, 0.0), DataError);
  EXPECT_EQ(parse_dist("t"), Dist::StudentT);
  EXPECT_EQ(parse_dist("ged"), Dist::Ged);
  EXPECT_EQ(parse_dist("normal"), Dist::Normal);
  EXPECT_THROW((void)parse_dist("cauchy"), UsageError);
}

TEST(MeanLevel, NoiselessRecovery) {
  const auto days = testsupport::weekdays(1995, 2022);
  auto r = testsupport::returns_on(days, std::vector<double>(days.size() - 1, 0.0));
  auto ls = label_returns(r, 0);
  for (std::size_t t = 0; t < ls.rows(); ++t) r.values[t] = 0.001 + (ls.term_of_row(t) == 3 ? 0.01 : 0.0);
  ls = label_returns(r, 0);
  const auto f = ar1_dummy_fit(ls);
  EXPECT_NEAR(f.mu(), 0.001, 1e-12);
  EXPECT_NEAR(f.ar(), 0.0, 1e-10);
  EXPECT_NEAR(f.ols.coefficients(*f.column_of(3)), 0.01, 1e-12);
  EXPECT_NEAR(f.ols.coefficients(*f.column_of(4)), 0.0, 1e-12);
  EXPECT_LT(f.residuals().cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(f.n_obs, static_cast<int>(ls.rows()) - 1);
}

TEST(MeanLevel, Ar1Coverage) {
  int covered = 0;
  const auto days = testsupport::weekdays(2000, 2019);
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto e = testsupport::normal_draws(300 + s, 5001, 0.01);
    std::vector<double> v(5000);
    double prev = e[0];
    for (std::size_t t = 0; t < v.size(); ++t) prev = v[t] = 0.3 * prev + e[t + 1];
    const auto f = refined_mean_fit(label_returns(testsupport::returns_on(days, v), 0), {});
    EXPECT_EQ(f.ols.ncols(), 2);
    if (std::abs(f.ar() - 0.3) <= 2 * f.ols.se(1)) ++covered;
  }
  EXPECT_GE(covered, 93);
}

TEST(MeanLevel, RefinedCloseToFull) {
  SynthSpec spec;
  spec.mean_injections = {{1, 0.008}, {3, 0.012}, {4, -0.009}, {13, 0.006}};
  spec.ar = 0.03;
  spec.gamma = 0.05;
  spec.seed = 11;
  const auto ls = label_returns(synth_generate(spec).returns, 0);
  const auto full = ar1_dummy_fit(ls);
  const auto refined = refined_mean_fit(ls, {1, 3, 4, 13});
  for (int k : {1, 3, 4, 13}) {
    EXPECT_LT(std::abs(full.ols.coefficients(*full.column_of(k)) - refined.ols.coefficients(*refined.column_of(k))),
              5e-4);
  }
}

TEST(ArchLm, SizeAndUniformity) {
  int rejections = 0;
  std::vector<double> ps;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto e = testsupport::normal_draws(70000 + s, 1000);
    const auto rows = arch_lm_test(Eigen::Map<const Eigen::VectorXd>(e.data(), 1000), {1});
    EXPECT_GE(rows[0].lm, 0.0);
    rejections += rows[0].p < 0.05;
    ps.push_back(rows[0].p);
  }
  EXPECT_GE(rejections, 30);
  EXPECT_LE(rejections, 70);
  std::sort(ps.begin(), ps.end());
  double d = 0;
  for (std::size_t i = 0; i < ps.size(); ++i)
    d = std::max({d, (i + 1.0) / 1000.0 - ps[i], ps[i] - i / 1000.0});
  EXPECT_LT(d, 0.06);
}

TEST(ArchLm, PowerAgainstArch1) {
  int rejections = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto z = testsupport::normal_draws(4000 + s, 2000);
    Eigen::VectorXd e(2000);
    double prev = 0;
    for (int t = 0; t < 2000; ++t) prev = e(t) = std::sqrt(1.0 + 0.5 * prev * prev) * z[static_cast<std::size_t>(t)];
    rejections += arch_lm_test(e, {1})[0].p < 0.05;
  }
  EXPECT_GE(rejections, 99);
}

TEST(ArchLm, Errors) {
  EXPECT_THROW((void)arch_lm_test(Eigen::VectorXd::Ones(50), {1}), DataError);
  EXPECT_THROW((void)arch_lm_test(Eigen::VectorXd::LinSpaced(4, 0, 1), {5}), DataError);
}

TEST(IgarchLikelihood, AnalyticGradientMatchesFiniteDifferences) {
  const auto ls = igarch_series(3, 6);
  for (Dist d : {Dist::Normal, Dist::StudentT, Dist::Ged}) {
    GarchOptions o;
    o.dist = d;
    o.variance_terms = {2, 8, 14};
    o.mean.dummy_terms = {3};
    const IgarchLikelihood lik(ls, o);
    Eigen::VectorXd theta = lik.start();
    std::mt19937_64 rng(9);
    std::normal_distribution<double> z(0.0, 0.05);
    for (Eigen::Index j = 0; j < theta.size(); ++j) theta(j) += z(rng);
    Eigen::VectorXd g;
    lik.evaluate(theta, &g);
    const auto fd = optim::fd_gradient([&](const Eigen::VectorXd& x) { return lik.evaluate(x); }, theta);
    const double tol = 1e-5 * std::max(1.0, g.cwiseAbs().maxCoeff());
    EXPECT_LT((g - fd).cwiseAbs().maxCoeff(), tol) << to_string(d);
  }
}

TEST(IgarchFit, RecoversGammaAndMeetsOptimalityConditions) {
  const auto ls = igarch_series(1);
  GarchOptions o;
  const auto fit = igarch_fit(ls, o);
  EXPECT_GT(fit.n_obs, 6900);
  EXPECT_GT(fit.gamma, 0.04);
  EXPECT_LT(fit.gamma, 0.08);
  EXPECT_EQ(fit.gamma + fit.beta, 1.0);
  EXPECT_TRUE(fit.valid);
  EXPECT_EQ(fit.se_method, "hessian");
  const IgarchLikelihood lik(ls, o);
  const auto fd = optim::fd_gradient([&](const Eigen::VectorXd& x) { return lik.evaluate(x); }, fit.internal);
  EXPECT_LT(optim::scaled_gradient_norm(fd, fit.internal), 1e-4);
  EXPECT_NEAR(fit.loglik, lik.evaluate(fit.internal), 1e-9 * std::abs(fit.loglik));
  ASSERT_NE(fit.param("gamma"), nullptr);
  EXPECT_LT(fit.param("gamma")->p, 0.01);
}

TEST(IgarchFit, LoglikIdentityAcrossDistributions) {
  const auto ls = igarch_series(2, 12);
  GarchOptions o;
  o.variance_terms = {8};
  const auto normal = igarch_fit(ls, o);
  o.dist = Dist::Ged;
  o.fixed_dist_param = 2.0;
  const auto ged = igarch_fit(ls, o);
  o.dist = Dist::StudentT;
  o.fixed_dist_param = 1e6;
  const auto t = igarch_fit(ls, o);
  EXPECT_NEAR(ged.loglik, normal.loglik, 1e-6);
  EXPECT_NEAR(t.loglik, normal.loglik, 1e-4 * std::max(1.0, std::abs(normal.loglik) / 1e4));
  EXPECT_NEAR(ged.gamma, normal.gamma, 1e-5);
}

TEST(IgarchFit, DeterministicAndTwoStep) {
  const auto ls = igarch_series(4, 10);
  GarchOptions o;
  o.dist = Dist::StudentT;
  o.variance_terms = {1, 8};
  const auto a = igarch_fit(ls, o);
  const auto b = igarch_fit(ls, o);
  EXPECT_EQ(a.loglik, b.loglik);
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    EXPECT_EQ(a.params[i].estimate, b.params[i].estimate);
    EXPECT_EQ(a.params[i].se, b.params[i].se);
  }
  o.two_step = true;
  const auto c = igarch_fit(ls, o);
  EXPECT_EQ(c.param("mu"), nullptr);
  EXPECT_EQ(c.gamma + c.beta, 1.0);
}

TEST(IgarchFit, RejectsShortSeries) {
  const auto days = testsupport::weekdays(2000, 2000);
  const auto ls = label_returns(testsupport::returns_on(days, testsupport::normal_draws(1, days.size() - 1)), 0);
  EXPECT_THROW((void)igarch_fit(ls, GarchOptions{}), DataError);
}

TEST(Pruning, MonotoneAndNested) {
  const auto ls = igarch_series(5, 27, {{8, 5.0}}, 1);
  GarchOptions o;
  const FitFn fit_fn = [&](const std::vector<int>& terms, const GarchFit* warm) {
    GarchOptions oo = o;
    oo.variance_terms = terms;
    return igarch_fit(ls, oo, warm);
  };
  const auto initial = present_terms(ls);
  const auto loose = prune_insignificant(fit_fn, initial, 0.10);
  for (const auto& step : loose.trace) EXPECT_LE(step.loglik_after, step.loglik_before + 1e-6);
  for (std::size_t i = 1; i < loose.trace.size(); ++i) EXPECT_GE(loose.trace[i - 1].p_value, 0.10);
  for (int k : loose.fit.variance_terms) EXPECT_LT(*loose.fit.variance_p(k), 0.10);
  const auto tight = prune_insignificant(fit_fn, initial, 0.01);
  for (int k : tight.fit.variance_terms) {
    EXPECT_NE(std::find(loose.fit.variance_terms.begin(), loose.fit.variance_terms.end(), k),
              loose.fit.variance_terms.end())
        << k;
  }
  EXPECT_NE(std::find(loose.fit.variance_terms.begin(), loose.fit.variance_terms.end(), 8),
            loose.fit.variance_terms.end());
}

TEST(Pruning, AllInsignificantLeavesOnlyCoreParameters) {
  const FitFn fake = [](const std::vector<int>& terms, const GarchFit*) {
    GarchFit f;
    f.variance_terms = terms;
    f.variance_alpha = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(terms.size()));
    for (int k : terms) f.params.push_back({"alpha" + std::to_string(k), 0.0, 1.0, 0.5 + 0.01 * k});
    return f;
  };
  const auto r = prune_insignificant(fake, {3, 1, 2}, 0.10);
  EXPECT_TRUE(r.fit.variance_terms.empty());
  ASSERT_EQ(r.trace.size(), 3u);
  EXPECT_EQ(r.trace[0].removed_term, 3);
}

TEST(TurnOfTerm, RequiresWindowLabels) {
  const auto ls = igarch_series(6, 4);
  EXPECT_THROW((void)turn_of_term_fit(ls, {Dist::Normal}, GarchOptions{}), UsageError);
}
