#include "solarterm/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace solarterm::optim {

namespace {

struct LinePoint {
  double alpha = 0.0;
  double value = 0.0;
  double slope = 0.0;
  Eigen::VectorXd grad;
};

// Minimizer of the cubic through two points with slopes, safeguarded to the interval.
double cubic_step(const LinePoint& a, const LinePoint& b) {
  const double d1 = a.slope + b.slope - 3.0 * (a.value - b.value) / (a.alpha - b.alpha);
  const double disc = d1 * d1 - a.slope * b.slope;
  const double lo = std::min(a.alpha, b.alpha);
  const double hi = std::max(a.alpha, b.alpha);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
    const double t = b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) / (b.slope - a.slope + 2.0 * d2);
    const double margin = 0.1 * (hi - lo);
    if (std::isfinite(t) && t > lo + margin && t < hi - margin) return t;
  }
  return 0.5 * (lo + hi);
}

class LineSearch {
 public:
  LineSearch(const Objective& f, const Eigen::VectorXd& x, const Eigen::VectorXd& dir, int& evals)
      : f_(f), x_(x), dir_(dir), evals_(evals) {}

  LinePoint eval(double alpha) {
    LinePoint p;
    p.alpha = alpha;
    p.grad.resize(x_.size());
    p.value = f_(x_ + alpha * dir_, &p.grad);
    ++evals_;
    if (!std::isfinite(p.value)) {
      p.value = std::numeric_limits<double>::infinity();
      p.slope = 0.0;
    } else {
      p.slope = p.grad.dot(dir_);
    }
    return p;
  }

  // Strong Wolfe conditions, c1 = 1e-4, c2 = 0.9.
  bool search(const LinePoint& start, double alpha1, LinePoint& out) {
    constexpr double c1 = 1e-4, c2 = 0.9;
    LinePoint prev = start;
    double alpha = alpha1;
    for (int i = 0; i < 40; ++i) {
      LinePoint cur = eval(alpha);
      if (!std::isfinite(cur.value)) {
        alpha = 0.5 * (prev.alpha + alpha);
        if (alpha - prev.alpha < 1e-16) break;
        continue;
      }
      if (cur.value > start.value + c1 * alpha * start.slope || (i > 0 && cur.value >= prev.value)) {
        return zoom(start, prev, cur, out);
      }
      if (std::abs(cur.slope) <= -c2 * start.slope) {
        out = std::move(cur);
        return true;
      }
      if (cur.slope >= 0.0) return zoom(start, cur, prev, out);
      prev = std::move(cur);
      alpha *= 2.0;
    }
    if (prev.alpha > 0.0 && prev.value < start.value) {
      out = std::move(prev);
      return true;
    }
    return false;
  }

 private:
  bool zoom(const LinePoint& start, LinePoint lo, LinePoint hi, LinePoint& out) {
    constexpr double c1 = 1e-4, c2 = 0.9;
    for (int i = 0; i < 40; ++i) {
      double alpha = std::isfinite(hi.value) ? cubic_step(lo, hi) : 0.5 * (lo.alpha + hi.alpha);
      if (std::abs(hi.alpha - lo.alpha) < 1e-14 * std::max(1.0, lo.alpha)) break;
      LinePoint cur = eval(alpha);
      if (!std::isfinite(cur.value) || cur.value > start.value + c1 * alpha * start.slope ||
          cur.value >= lo.value) {
        hi = std::move(cur);
      } else {
        if (std::abs(cur.slope) <= -c2 * start.slope) {
          out = std::move(cur);
          return true;
        }
        if (cur.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = std::move(cur);
      }
    }
    if (lo.alpha > 0.0 && lo.value < start.value) {
      out = std::move(lo);
      return true;
    }
    return false;
  }

  const Objective& f_;
  const Eigen::VectorXd& x_;
  const Eigen::VectorXd& dir_;
  int& evals_;
};

}  // namespace

double scaled_gradient_norm(const Eigen::VectorXd& g, const Eigen::VectorXd& x) {
  double m = 0.0;
  for (Eigen::Index j = 0; j < g.size(); ++j) m = std::max(m, std::abs(g(j)) / (1.0 + std::abs(x(j))));
  return m;
}

Result minimize_bfgs(const Objective& f, Eigen::VectorXd x0, const BfgsOptions& opts) {
  const auto n = x0.size();
  Result r;
  r.x = std::move(x0);
  r.gradient.resize(n);
  r.value = f(r.x, &r.gradient);
  r.evaluations = 1;
  if (!std::isfinite(r.value)) {
    r.message = "objective not finite at the starting point";
    return r;
  }
  Eigen::MatrixXd inv_h = Eigen::MatrixXd::Identity(n, n);
  bool scaled_initial = false;
  std::vector<double> history{r.value};

  for (r.iterations = 0; r.iterations < opts.max_iterations; ++r.iterations) {
    if (scaled_gradient_norm(r.gradient, r.x) < opts.gradient_tolerance) {
      r.converged = true;
      r.message = "gradient tolerance reached";
      return r;
    }
    Eigen::VectorXd dir = -inv_h * r.gradient;
    double slope = dir.dot(r.gradient);
    if (!(slope < 0.0)) {
      inv_h.setIdentity();
      dir = -r.gradient;
      slope = dir.dot(r.gradient);
    }
    LinePoint start{0.0, r.value, slope, r.gradient};
    double alpha1 = 1.0;
    if (!scaled_initial) alpha1 = std::min(1.0, 1.0 / std::max(1e-12, r.gradient.lpNorm<Eigen::Infinity>()));
    LineSearch ls(f, r.x, dir, r.evaluations);
    LinePoint next;
    if (!ls.search(start, alpha1, next)) {
      if (!inv_h.isIdentity()) {
        inv_h.setIdentity();
        continue;
      }
      r.message = "line search failed";
      r.converged = scaled_gradient_norm(r.gradient, r.x) < 100.0 * opts.gradient_tolerance;
      return r;
    }
    const Eigen::VectorXd s = next.alpha * dir;
    const Eigen::VectorXd y = next.grad - r.gradient;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled_initial) {
        inv_h *= sy / y.squaredNorm();
        scaled_initial = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = inv_h * y;
      inv_h += ((sy + y.dot(hy)) * rho * rho) * (s * s.transpose()) - rho * (hy * s.transpose() + s * hy.transpose());
    }
    r.x += s;
    r.value = next.value;
    r.gradient = next.grad;
    history.push_back(r.value);
    const auto w = static_cast<std::size_t>(opts.stall_window);
    if (history.size() > w && history[history.size() - 1 - w] - r.value < opts.value_tolerance) {
      r.converged = true;
      r.message = "value tolerance reached";
      ++r.iterations;
      return r;
    }
  }
  r.message = "iteration limit reached";
  return r;
}

Result minimize_nelder_mead(const ValueFn& f, Eigen::VectorXd x0, const NelderMeadOptions& opts) {
  const auto n = x0.size();
  std::vector<Eigen::VectorXd> simplex(static_cast<std::size_t>(n + 1), x0);
  std::vector<double> values(simplex.size());
  Result r;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++r.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  for (Eigen::Index j = 0; j < n; ++j) {
    auto& v = simplex[static_cast<std::size_t>(j + 1)];
    v(j) += opts.initial_step * std::max(1.0, std::abs(v(j)));
  }
  for (std::size_t i = 0; i < simplex.size(); ++i) values[i] = eval(simplex[i]);

  std::vector<std::size_t> order(simplex.size());
  while (r.evaluations < opts.max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];
    ++r.iterations;
    if (std::abs(values[worst] - values[best]) < opts.value_tolerance) {
      r.converged = true;
      break;
    }
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < simplex.size(); ++i)
      if (i != worst) centroid += simplex[i];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd reflected = centroid + (centroid - simplex[worst]);
    const double fr = eval(reflected);
    if (fr < values[best]) {
      const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - simplex[worst]);
      const double fe = eval(expanded);
      if (fe < fr) {
        simplex[worst] = expanded;
        values[worst] = fe;
      } else {
        simplex[worst] = reflected;
        values[worst] = fr;
      }
    } else if (fr < values[second]) {
      simplex[worst] = reflected;
      values[worst] = fr;
    } else {
      const bool outside = fr < values[worst];
      const Eigen::VectorXd contracted =
          outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                  : Eigen::VectorXd(centroid + 0.5 * (simplex[worst] - centroid));
      const double fc = eval(contracted);
      if (fc < std::min(fr, values[worst])) {
        simplex[worst] = contracted;
        values[worst] = fc;
      } else {
        for (std::size_t i = 0; i < simplex.size(); ++i) {
          if (i == best) continue;
          simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
          values[i] = eval(simplex[i]);
        }
      }
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
  r.x = simplex[best];
  r.value = values[best];
  r.message = r.converged ? "simplex collapsed" : "evaluation limit reached";
  return r;
}

Eigen::MatrixXd fd_hessian(const Objective& f, const Eigen::VectorXd& x, double rel_step) {
  const auto n = x.size();
  Eigen::MatrixXd h(n, n);
  Eigen::VectorXd gp(n), gm(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double step = rel_step * (1.0 + std::abs(x(j)));
    Eigen::VectorXd xp = x, xm = x;
    xp(j) += step;
    xm(j) -= step;
    f(xp, &gp);
    f(xm, &gm);
    h.col(j) = (gp - gm) / (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

Eigen::VectorXd fd_gradient(const ValueFn& f, const Eigen::VectorXd& x, double rel_step) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double step = rel_step * (1.0 + std::abs(x(j)));
    Eigen::VectorXd xp = x, xm = x;
    xp(j) += step;
    xm(j) -= step;
    g(j) = (f(xp) - f(xm)) / (2.0 * step);
  }
  return g;
}

}  // namespace solarterm::optim
