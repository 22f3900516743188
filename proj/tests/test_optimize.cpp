#include <gtest/gtest.h>

#include <cmath>

#include "solarterm/optimize.hpp"

using namespace solarterm::optim;

namespace {

double rosenbrock(const Eigen::VectorXd& x, Eigen::VectorXd* g) {
  const double a = 1 - x(0), b = x(1) - x(0) * x(0);
  if (g) {
    g->resize(2);
    (*g)(0) = -2 * a - 400 * x(0) * b;
    (*g)(1) = 200 * b;
  }
  return a * a + 100 * b * b;
}

}  // namespace

TEST(Bfgs, Rosenbrock) {
  const auto r = minimize_bfgs(rosenbrock, Eigen::Vector2d(-1.2, 1.0));
  EXPECT_TRUE(r.converged) << r.message;
  EXPECT_NEAR(r.x(0), 1.0, 1e-5);
  EXPECT_NEAR(r.x(1), 1.0, 1e-5);
}

TEST(Bfgs, Quadratic) {
  Eigen::Matrix3d a;
  a << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 2;
  const Eigen::Vector3d b(1, -2, 0.5);
  const Objective f = [&](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    if (g) *g = a * x - b;
    return 0.5 * x.dot(a * x) - b.dot(x);
  };
  const auto r = minimize_bfgs(f, Eigen::Vector3d::Zero());
  EXPECT_LT((r.x - a.ldlt().solve(b)).norm(), 1e-6);
}

TEST(NelderMead, Rosenbrock) {
  NelderMeadOptions o;
  o.max_evaluations = 5000;
  o.value_tolerance = 1e-14;
  const auto r = minimize_nelder_mead([](const Eigen::VectorXd& x) { return rosenbrock(x, nullptr); },
                                      Eigen::Vector2d(-1.2, 1.0), o);
  EXPECT_NEAR(r.x(0), 1.0, 1e-3);
  EXPECT_NEAR(r.x(1), 1.0, 2e-3);
}

TEST(FiniteDifferences, GradientAndHessian) {
  const Eigen::Vector2d x(0.3, -0.7);
  Eigen::VectorXd g;
  rosenbrock(x, &g);
  const auto fd = fd_gradient([](const Eigen::VectorXd& v) { return rosenbrock(v, nullptr); }, x);
  EXPECT_LT((fd - g).cwiseAbs().maxCoeff(), 1e-6);
  const Eigen::MatrixXd h = fd_hessian(rosenbrock, x);
  EXPECT_NEAR(h(0, 0), 2 - 400 * (x(1) - 3 * x(0) * x(0)), 1e-4);
  EXPECT_NEAR(h(0, 1), -400 * x(0), 1e-4);
  EXPECT_DOUBLE_EQ(h(0, 1), h(1, 0));
  EXPECT_NEAR(h(1, 1), 200, 1e-4);
}

TEST(ScaledGradient, Definition) {
  EXPECT_DOUBLE_EQ(scaled_gradient_norm(Eigen::Vector2d(0.2, -3.0), Eigen::Vector2d(1.0, -2.0)), 1.0);
}
