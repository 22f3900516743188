#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

namespace solarterm::optim {

/// Value to minimize; writes the gradient when `grad` is non-null.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;
using ValueFn = std::function<double(const Eigen::VectorXd& x)>;

struct Result {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string message;
};

struct BfgsOptions {
  int max_iterations = 1000;
  /// Stop when every |g_j| / (1 + |x_j|) falls below this.
  double gradient_tolerance = 1e-6;
  /// Stop when the value improves by less than this over `stall_window` iterations.
  double value_tolerance = 1e-8;
  int stall_window = 5;
};

struct NelderMeadOptions {
  int max_evaluations = 2000;
  double value_tolerance = 1e-8;
  double initial_step = 0.1;
};

/// Quasi-Newton minimization with a strong-Wolfe line search.
[[nodiscard]] Result minimize_bfgs(const Objective& f, Eigen::VectorXd x0, const BfgsOptions& opts = {});

/// Derivative-free simplex minimization.
[[nodiscard]] Result minimize_nelder_mead(const ValueFn& f, Eigen::VectorXd x0, const NelderMeadOptions& opts = {});

/// Central-difference Hessian built from an analytic gradient, symmetrized.
[[nodiscard]] Eigen::MatrixXd fd_hessian(const Objective& f, const Eigen::VectorXd& x, double rel_step = 1e-5);

/// Central-difference gradient of the value alone.
[[nodiscard]] Eigen::VectorXd fd_gradient(const ValueFn& f, const Eigen::VectorXd& x, double rel_step = 1e-6);

/// max_j |g_j| / (1 + |x_j|).
[[nodiscard]] double scaled_gradient_norm(const Eigen::VectorXd& g, const Eigen::VectorXd& x);

}  // namespace solarterm::optim
