#include "solarterm/igarch.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>

#include "solarterm/error.hpp"
#include "solarterm/optimize.hpp"
#include "solarterm/special.hpp"

namespace solarterm {

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

std::vector<int> normalized_terms(std::vector<int> terms) {
  std::sort(terms.begin(), terms.end());
  terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
  for (int k : terms) {
    if (k < 1 || k > kTermCount) throw UsageError(fmt::format("term order {} outside 1..24", k));
  }
  return terms;
}

// Occurrences of term k among rows 1..n-1 (the rows that have a lagged return).
int lagged_count(const LabeledSeries& ls, int k) {
  const auto n = ls.dummies.rows();
  return n <= 1 ? 0 : static_cast<int>(std::lround(ls.dummies.col(k - 1).tail(n - 1).sum()));
}

constexpr double kLog2Pi = 1.8378770664093453;  // log(2 pi)

// Student-t degrees of freedom are 2 + kDfSpan * logistic(theta), so nu <= 200; GED shape is exp(theta).
constexpr double kDfSpan = 198.0;

double dist_from_theta(Dist d, double th) { return d == Dist::StudentT ? 2.0 + kDfSpan * logistic(th) : std::exp(th); }

double dist_dtheta(Dist d, double th) {
  if (d != Dist::StudentT) return std::exp(th);
  const double p = logistic(th);
  return kDfSpan * p * (1.0 - p);
}

double theta_from_dist(Dist d, double param) {
  if (d != Dist::StudentT) return std::log(std::max(1e-8, param));
  return logit(std::clamp((param - 2.0) / kDfSpan, 1e-9, 1.0 - 1e-9));
}

// Inverse of `h` with row/column `drop` removed; the dropped entries are NaN.
bool reduced_inverse(const Eigen::MatrixXd& h, Eigen::Index drop, Eigen::MatrixXd& cov) {
  const Eigen::Index n = h.rows();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < n; ++i)
    if (i != drop) keep.push_back(i);
  const auto m = static_cast<Eigen::Index>(keep.size());
  Eigen::MatrixXd r(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) r(i, j) = h(keep[static_cast<std::size_t>(i)], keep[static_cast<std::size_t>(j)]);
  Eigen::LLT<Eigen::MatrixXd> llt(r);
  if (llt.info() != Eigen::Success) return false;
  const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(m, m));
  cov = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) cov(keep[static_cast<std::size_t>(i)], keep[static_cast<std::size_t>(j)]) = inv(i, j);
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// Mean level
// ---------------------------------------------------------------------------

std::optional<Eigen::Index> MeanFit::column_of(int term) const {
  auto it = std::find(dummy_terms.begin(), dummy_terms.end(), term);
  if (it == dummy_terms.end()) return std::nullopt;
  return static_cast<Eigen::Index>(2 + (it - dummy_terms.begin()));
}

std::vector<int> present_terms(const LabeledSeries& labeled) {
  std::vector<int> out;
  for (int k = 1; k <= kTermCount; ++k)
    if (lagged_count(labeled, k) > 0) out.push_back(k);
  return out;
}

MeanFit refined_mean_fit(const LabeledSeries& labeled, const std::vector<int>& keep) {
  const auto n = static_cast<Eigen::Index>(labeled.rows());
  if (n - 1 < 100) throw DataError(fmt::format("mean-level fit needs at least 100 usable rows (got {})", n - 1));
  MeanFit out;
  for (int k : normalized_terms(keep)) {
    (lagged_count(labeled, k) > 0 ? out.dummy_terms : out.dropped_terms).push_back(k);
  }
  const Eigen::Index rows = n - 1;
  Eigen::MatrixXd x(rows, 2 + static_cast<Eigen::Index>(out.dummy_terms.size()));
  std::vector<std::string> names{"mu", "r"};
  x.col(0).setOnes();
  const Eigen::VectorXd y_all = labeled.y();
  x.col(1) = y_all.head(rows);
  for (std::size_t j = 0; j < out.dummy_terms.size(); ++j) {
    x.col(static_cast<Eigen::Index>(2 + j)) = labeled.dummies.col(out.dummy_terms[j] - 1).tail(rows);
    names.push_back(fmt::format("alpha{}", out.dummy_terms[j]));
  }
  out.ols = ols(x, y_all.tail(rows), std::move(names));
  out.n_obs = static_cast<int>(rows);
  return out;
}

MeanFit ar1_dummy_fit(const LabeledSeries& labeled) {
  std::vector<int> all(kTermCount);
  for (int k = 0; k < kTermCount; ++k) all[static_cast<std::size_t>(k)] = k + 1;
  return refined_mean_fit(labeled, all);
}

std::vector<ArchLmRow> arch_lm_test(const Eigen::VectorXd& residuals, const std::vector<int>& lags) {
  const Eigen::Index n = residuals.size();
  const Eigen::VectorXd e2 = residuals.array().square();
  if (n == 0 || e2.maxCoeff() - e2.minCoeff() <= 0.0) {
    throw DataError("ARCH-LM test undefined for degenerate (constant squared) residuals");
  }
  std::vector<ArchLmRow> out;
  for (int q : lags) {
    if (q < 1) throw UsageError(fmt::format("ARCH-LM lag must be positive (got {})", q));
    if (n <= q + 1) throw DataError(fmt::format("ARCH-LM lag {} needs more than {} residuals", q, q + 1));
    const Eigen::Index m = n - q;
    Eigen::MatrixXd x(m, q + 1);
    x.col(0).setOnes();
    for (int l = 1; l <= q; ++l) x.col(l) = e2.segment(q - l, m);
    const Eigen::VectorXd y = e2.tail(m);
    const Eigen::VectorXd b = x.colPivHouseholderQr().solve(y);
    const double rss = (y - x * b).squaredNorm();
    const double tss = (y.array() - y.mean()).square().sum();
    ArchLmRow row;
    row.lag = q;
    row.n_effective = static_cast<int>(m);
    row.lm = std::max(0.0, static_cast<double>(m) * (1.0 - rss / tss));
    row.p = special::chi_square_sf(row.lm, q);
    row.reject_1pct = row.p < 0.01;
    out.push_back(row);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Error distributions
// ---------------------------------------------------------------------------

std::string_view to_string(Dist d) {
  switch (d) {
    case Dist::Normal: return "normal";
    case Dist::StudentT: return "t";
    case Dist::Ged: return "ged";
  }
  return "normal";
}

Dist parse_dist(std::string_view s) {
  if (s == "normal" || s == "norm") return Dist::Normal;
  if (s == "t" || s == "student" || s == "std") return Dist::StudentT;
  if (s == "ged") return Dist::Ged;
  throw UsageError(fmt::format("unknown distribution '{}' (expected normal, t or ged)", s));
}

double ged_lambda(double shape) {
  if (!(shape > 0.0)) throw DataError(fmt::format("GED shape must be positive (got {})", shape));
  return std::sqrt(std::exp(-2.0 / shape * std::numbers::ln2 + std::lgamma(1.0 / shape) - std::lgamma(3.0 / shape)));
}

double dist_logpdf(double z, Dist dist, double param) {
  switch (dist) {
    case Dist::Normal:
      return -0.5 * kLog2Pi - 0.5 * z * z;
    case Dist::StudentT: {
      if (!(param > 2.0)) throw DataError(fmt::format("Student-t degrees of freedom must exceed 2 (got {})", param));
      const double c = param - 2.0;
      return std::lgamma(0.5 * (param + 1.0)) - std::lgamma(0.5 * param) - 0.5 * std::log(std::numbers::pi * c) -
             0.5 * (param + 1.0) * std::log1p(z * z / c);
    }
    case Dist::Ged: {
      const double lambda = ged_lambda(param);
      return std::log(param) - 0.5 * std::pow(std::abs(z) / lambda, param) - std::log(lambda) -
             (1.0 + 1.0 / param) * std::numbers::ln2 - std::lgamma(1.0 / param);
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// IGARCH likelihood
// ---------------------------------------------------------------------------

const GarchParam* GarchFit::param(std::string_view name) const {
  for (const auto& p : params)
    if (p.name == name) return &p;
  return nullptr;
}

std::optional<double> GarchFit::variance_p(int term) const {
  const auto* p = param(fmt::format("alpha{}", term));
  if (!p) return std::nullopt;
  return p->p;
}

IgarchLikelihood::IgarchLikelihood(const LabeledSeries& labeled, const GarchOptions& opts) : opts_(opts) {
  const auto n = static_cast<Eigen::Index>(labeled.rows());
  if (n < 3) throw DataError("IGARCH fit needs more observations");
  for (int k : normalized_terms(opts.mean.dummy_terms))
    if (lagged_count(labeled, k) > 0) mean_terms_.push_back(k);
  for (int k : normalized_terms(opts.variance_terms))
    if (lagged_count(labeled, k) > 0) var_terms_.push_back(k);

  const Eigen::Index rows = n - 1;
  y_.resize(static_cast<std::size_t>(rows));
  lag_.resize(static_cast<std::size_t>(rows));
  mean_rows_.resize(static_cast<std::size_t>(rows));
  var_rows_.resize(static_cast<std::size_t>(rows));
  for (Eigen::Index t = 0; t < rows; ++t) {
    const auto ut = static_cast<std::size_t>(t);
    y_[ut] = labeled.returns.values[ut + 1];
    lag_[ut] = labeled.returns.values[ut];
    for (std::size_t j = 0; j < mean_terms_.size(); ++j)
      if (labeled.dummies(t + 1, mean_terms_[j] - 1) != 0.0) mean_rows_[ut].push_back(static_cast<std::uint16_t>(j));
    for (std::size_t j = 0; j < var_terms_.size(); ++j)
      if (labeled.dummies(t + 1, var_terms_[j] - 1) != 0.0) var_rows_[ut].push_back(static_cast<std::uint16_t>(j));
  }

  // Mean-equation OLS: starting values, recursion initialization, two-step residuals.
  const Eigen::Index k_mean = (opts.mean.intercept ? 1 : 0) + (opts.mean.ar1 ? 1 : 0) +
                              static_cast<Eigen::Index>(mean_terms_.size());
  Eigen::VectorXd resid = Eigen::Map<const Eigen::VectorXd>(y_.data(), rows);
  mean_start_ = Eigen::VectorXd::Zero(k_mean);
  if (k_mean > 0) {
    Eigen::MatrixXd x(rows, k_mean);
    Eigen::Index c = 0;
    if (opts.mean.intercept) x.col(c++).setOnes();
    if (opts.mean.ar1) x.col(c++) = Eigen::Map<const Eigen::VectorXd>(lag_.data(), rows);
    for (int k : mean_terms_) x.col(c++) = labeled.dummies.col(k - 1).tail(rows);
    const auto fit = ols(x, resid);
    mean_start_ = fit.coefficients;
    resid = fit.residuals;
  }
  h0_ = (resid.array() - resid.mean()).square().sum() / static_cast<double>(std::max<Eigen::Index>(1, rows - 1));
  if (!(h0_ > 0.0)) throw DataError("mean-equation residuals have zero variance");
  scale_ = std::sqrt(h0_);
  if (opts.two_step) fixed_eps_.assign(resid.data(), resid.data() + rows);

  if (!opts.two_step) {
    if (opts.mean.intercept) {
      i_mu_ = static_cast<Eigen::Index>(names_.size());
      names_.push_back("mu");
    }
    if (opts.mean.ar1) {
      i_ar_ = static_cast<Eigen::Index>(names_.size());
      names_.push_back("r");
    }
    i_malpha_ = static_cast<Eigen::Index>(names_.size());
    for (int k : mean_terms_) names_.push_back(fmt::format("mean_alpha{}", k));
    n_mean_ = static_cast<Eigen::Index>(names_.size());
  }
  i_gamma_ = static_cast<Eigen::Index>(names_.size());
  names_.push_back("gamma");
  i_valpha_ = static_cast<Eigen::Index>(names_.size());
  for (int k : var_terms_) names_.push_back(fmt::format("alpha{}", k));
  if (opts.dist != Dist::Normal && !opts.fixed_dist_param) {
    i_dist_ = static_cast<Eigen::Index>(names_.size());
    names_.push_back(opts.dist == Dist::StudentT ? "nu" : "v");
  }
  if (opts.fixed_dist_param) {
    const double p = *opts.fixed_dist_param;
    if (opts.dist == Dist::StudentT && !(p > 2.0)) throw DataError("fixed Student-t degrees of freedom must exceed 2");
    if (opts.dist == Dist::Ged && !(p > 0.0)) throw DataError("fixed GED shape must be positive");
  }
}

Eigen::VectorXd IgarchLikelihood::start() const {
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(dimension());
  if (!opts_.two_step) {
    for (Eigen::Index j = 0; j < n_mean_; ++j) theta(j) = mean_start_(j);
    if (i_mu_ >= 0) theta(i_mu_) /= scale_;
    for (Eigen::Index j = i_malpha_; j < n_mean_; ++j) theta(j) /= scale_;
  }
  theta(i_gamma_) = logit(opts_.gamma_start);
  if (i_dist_ >= 0) {
    theta(i_dist_) = theta_from_dist(opts_.dist, opts_.dist == Dist::StudentT ? opts_.t_df_start : opts_.ged_shape_start);
  }
  return theta;
}

double IgarchLikelihood::evaluate(const Eigen::VectorXd& theta, Eigen::VectorXd* grad, Eigen::MatrixXd* opg,
                                  int* floor_hits, Eigen::VectorXd* h2_out, Eigen::VectorXd* eps_out) const {
  const Eigen::Index dim = dimension();
  const std::size_t n = y_.size();
  const bool want_grad = grad != nullptr || opg != nullptr;
  const double s = scale_, s2 = h0_;
  const double mu = i_mu_ >= 0 ? theta(i_mu_) * s : 0.0;
  const double ar = i_ar_ >= 0 ? theta(i_ar_) : 0.0;
  const double gamma = logistic(theta(i_gamma_));
  const double one_m_gamma = 1.0 - gamma;
  const double dgamma = gamma * one_m_gamma;
  const Eigen::Index n_valpha = static_cast<Eigen::Index>(var_terms_.size());

  // Distribution constants and their derivatives in the parameter.
  double param = 0.0, dparam_dtheta = 0.0;
  if (opts_.dist != Dist::Normal) {
    if (i_dist_ >= 0) {
      param = dist_from_theta(opts_.dist, theta(i_dist_));
      dparam_dtheta = dist_dtheta(opts_.dist, theta(i_dist_));
    } else {
      param = *opts_.fixed_dist_param;
    }
  }
  if (opts_.dist == Dist::Ged && !(param >= 0.05 && param <= 100.0)) {
    // Outside this range the gamma-function terms lose precision; treat as infeasible.
    if (grad) *grad = Eigen::VectorXd::Zero(dim);
    if (opg) *opg = Eigen::MatrixXd::Zero(dim, dim);
    return -std::numeric_limits<double>::infinity();
  }
  double c_const = -0.5 * kLog2Pi, dc_const = 0.0;
  double t_c = 0.0, ged_lambda_v = 1.0, ged_dlog_lambda = 0.0;
  if (opts_.dist == Dist::StudentT) {
    t_c = param - 2.0;
    c_const = std::lgamma(0.5 * (param + 1.0)) - std::lgamma(0.5 * param) - 0.5 * std::log(std::numbers::pi * t_c);
    if (i_dist_ >= 0 && want_grad) {
      dc_const = 0.5 * special::digamma(0.5 * (param + 1.0)) - 0.5 * special::digamma(0.5 * param) - 0.5 / t_c;
    }
  } else if (opts_.dist == Dist::Ged) {
    const double v = param;
    const double log_lambda = 0.5 * (-2.0 / v * std::numbers::ln2 + std::lgamma(1.0 / v) - std::lgamma(3.0 / v));
    ged_lambda_v = std::exp(log_lambda);
    c_const = std::log(v) - log_lambda - (1.0 + 1.0 / v) * std::numbers::ln2 - std::lgamma(1.0 / v);
    if (i_dist_ >= 0 && want_grad) {
      const double v2 = v * v;
      ged_dlog_lambda =
          0.5 * (2.0 * std::numbers::ln2 / v2 - special::digamma(1.0 / v) / v2 + 3.0 * special::digamma(3.0 / v) / v2);
      dc_const = 1.0 / v - ged_dlog_lambda + std::numbers::ln2 / v2 + special::digamma(1.0 / v) / v2;
    }
  }

  Eigen::VectorXd dh_prev, dh, deps_prev, deps, dl;
  if (want_grad) {
    dh_prev = Eigen::VectorXd::Zero(dim);
    dh = Eigen::VectorXd::Zero(dim);
    deps_prev = Eigen::VectorXd::Zero(std::max<Eigen::Index>(n_mean_, 1));
    deps = Eigen::VectorXd::Zero(std::max<Eigen::Index>(n_mean_, 1));
    dl = Eigen::VectorXd::Zero(dim);
    if (grad) *grad = Eigen::VectorXd::Zero(dim);
    if (opg) *opg = Eigen::MatrixXd::Zero(dim, dim);
  }
  if (h2_out) h2_out->resize(static_cast<Eigen::Index>(n));
  if (eps_out) eps_out->resize(static_cast<Eigen::Index>(n));

  double e2_prev = h0_, h_prev = h0_, eps_prev = 0.0;
  double ll = 0.0;
  int hits = 0;
  for (std::size_t t = 0; t < n; ++t) {
    double eps;
    if (opts_.two_step) {
      eps = fixed_eps_[t];
    } else {
      eps = y_[t] - mu - ar * lag_[t];
      for (auto j : mean_rows_[t]) eps -= theta(i_malpha_ + j) * s;
    }
    double h = gamma * e2_prev + one_m_gamma * h_prev;
    for (auto j : var_rows_[t]) h += theta(i_valpha_ + j) * s2;

    bool floored = false;
    if (!(h >= opts_.variance_floor)) {
      h = opts_.variance_floor;
      floored = true;
      ++hits;
    }
    const double sqrt_h = std::sqrt(h);
    const double z = eps / sqrt_h;

    double g = 0.0, gz = 0.0, g_param = 0.0;
    switch (opts_.dist) {
      case Dist::Normal:
        g = c_const - 0.5 * z * z;
        gz = -z;
        break;
      case Dist::StudentT: {
        const double q = z * z / t_c;
        g = c_const - 0.5 * (param + 1.0) * std::log1p(q);
        gz = -(param + 1.0) * z / (t_c + z * z);
        g_param = dc_const - 0.5 * std::log1p(q) + (param + 1.0) * z * z / (2.0 * t_c * (t_c + z * z));
        break;
      }
      case Dist::Ged: {
        const double u = std::abs(z) / ged_lambda_v;
        const double uv = u > 0.0 ? std::pow(u, param) : 0.0;
        g = c_const - 0.5 * uv;
        gz = z != 0.0 ? -0.5 * param * uv / z : 0.0;
        g_param = dc_const - (u > 0.0 ? 0.5 * uv * (std::log(u) - param * ged_dlog_lambda) : 0.0);
        break;
      }
    }
    ll += -0.5 * std::log(h) + g;

    if (want_grad) {
      if (!opts_.two_step) {
        deps.setZero();
        if (i_mu_ >= 0) deps(i_mu_) = -s;
        if (i_ar_ >= 0) deps(i_ar_) = -lag_[t];
        for (auto j : mean_rows_[t]) deps(i_malpha_ + j) = -s;
      }
      if (floored) {
        dh.setZero();
      } else {
        for (Eigen::Index j = 0; j < n_mean_; ++j) {
          dh(j) = (t > 0 ? 2.0 * gamma * eps_prev * deps_prev(j) : 0.0) + one_m_gamma * dh_prev(j);
        }
        dh(i_gamma_) = dgamma * (e2_prev - h_prev) + one_m_gamma * dh_prev(i_gamma_);
        for (Eigen::Index j = 0; j < n_valpha; ++j) dh(i_valpha_ + j) = one_m_gamma * dh_prev(i_valpha_ + j);
        for (auto j : var_rows_[t]) dh(i_valpha_ + j) += s2;
        if (i_dist_ >= 0) dh(i_dist_) = 0.0;
      }
      const double inv_h = 1.0 / h;
      for (Eigen::Index j = 0; j < dim; ++j) {
        const double de = j < n_mean_ ? deps(j) : 0.0;
        dl(j) = -0.5 * dh(j) * inv_h + gz * (de / sqrt_h - 0.5 * z * dh(j) * inv_h);
      }
      if (i_dist_ >= 0) dl(i_dist_) = g_param * dparam_dtheta;
      if (grad) *grad += dl;
      if (opg) opg->selfadjointView<Eigen::Lower>().rankUpdate(dl);
      std::swap(dh_prev, dh);
      std::swap(deps_prev, deps);
    }
    if (h2_out) (*h2_out)(static_cast<Eigen::Index>(t)) = h;
    if (eps_out) (*eps_out)(static_cast<Eigen::Index>(t)) = eps;
    e2_prev = eps * eps;
    eps_prev = eps;
    h_prev = h;
  }
  if (opg) *opg = opg->selfadjointView<Eigen::Lower>();
  if (floor_hits) *floor_hits = hits;
  return std::isfinite(ll) ? ll : -std::numeric_limits<double>::infinity();
}

Eigen::VectorXd IgarchLikelihood::natural(const Eigen::VectorXd& theta) const {
  Eigen::VectorXd out = theta;
  if (i_mu_ >= 0) out(i_mu_) = theta(i_mu_) * scale_;
  for (Eigen::Index j = i_malpha_; j < n_mean_; ++j) out(j) = theta(j) * scale_;
  out(i_gamma_) = logistic(theta(i_gamma_));
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(var_terms_.size()); ++j)
    out(i_valpha_ + j) = theta(i_valpha_ + j) * h0_;
  if (i_dist_ >= 0) out(i_dist_) = dist_from_theta(opts_.dist, theta(i_dist_));
  return out;
}

Eigen::VectorXd IgarchLikelihood::natural_jacobian(const Eigen::VectorXd& theta) const {
  Eigen::VectorXd jac = Eigen::VectorXd::Ones(dimension());
  if (i_mu_ >= 0) jac(i_mu_) = scale_;
  for (Eigen::Index j = i_malpha_; j < n_mean_; ++j) jac(j) = scale_;
  const double g = logistic(theta(i_gamma_));
  jac(i_gamma_) = g * (1.0 - g);
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(var_terms_.size()); ++j) jac(i_valpha_ + j) = h0_;
  if (i_dist_ >= 0) jac(i_dist_) = dist_dtheta(opts_.dist, theta(i_dist_));
  return jac;
}

Eigen::VectorXd IgarchLikelihood::warm_start(const GarchFit& previous) const {
  Eigen::VectorXd theta = start();
  if (previous.internal.size() == 0) return theta;
  // Rebuild by name from the previous fit's natural estimates.
  for (const auto& p : previous.params) {
    auto it = std::find(names_.begin(), names_.end(), p.name);
    if (it == names_.end()) continue;
    const auto j = static_cast<Eigen::Index>(it - names_.begin());
    if (j == i_gamma_) {
      theta(j) = logit(std::clamp(p.estimate, 1e-6, 1.0 - 1e-6));
    } else if (j == i_dist_) {
      theta(j) = theta_from_dist(opts_.dist, p.estimate);
    } else if (j == i_mu_ || (j >= i_malpha_ && j < n_mean_)) {
      theta(j) = p.estimate / scale_;
    } else if (j >= i_valpha_ && j < i_valpha_ + static_cast<Eigen::Index>(var_terms_.size())) {
      theta(j) = p.estimate / h0_;
    } else {
      theta(j) = p.estimate;
    }
  }
  return theta;
}

GarchFit IgarchLikelihood::finish(const Eigen::VectorXd& theta) const {
  GarchFit fit;
  fit.dist = opts_.dist;
  fit.internal = theta;
  fit.n_obs = n_obs();
  fit.mean_terms = mean_terms_;
  fit.variance_terms = var_terms_;
  Eigen::VectorXd grad;
  fit.loglik = evaluate(theta, &grad, nullptr, &fit.floor_hits, &fit.h2, &fit.residuals);
  fit.max_scaled_gradient = optim::scaled_gradient_norm(grad, theta);

  const optim::Objective negll = [this](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    const double v = evaluate(x, g);
    if (g) *g = -*g;
    return -v;
  };
  const Eigen::MatrixXd hess = optim::fd_hessian(negll, theta);
  Eigen::MatrixXd cov;
  const bool df_at_bound = opts_.dist == Dist::StudentT && i_dist_ >= 0 && logistic(theta(i_dist_)) > 0.99;
  Eigen::LLT<Eigen::MatrixXd> llt(hess);
  if (!df_at_bound && llt.info() == Eigen::Success && hess.allFinite()) {
    cov = llt.solve(Eigen::MatrixXd::Identity(dimension(), dimension()));
    fit.se_method = "hessian";
  } else if (i_dist_ >= 0 && hess.allFinite() && reduced_inverse(hess, i_dist_, cov)) {
    // The likelihood is flat in the distribution parameter (Student-t near its upper bound):
    // the parameter is treated as fixed for inference.
    fit.se_method = "hessian";
    fit.warnings.push_back(fmt::format("{} at a flat boundary ({:.4g}); its standard error is not reported",
                                       names_[static_cast<std::size_t>(i_dist_)],
                                       dist_from_theta(opts_.dist, theta(i_dist_))));
  } else {
    Eigen::MatrixXd opg;
    evaluate(theta, nullptr, &opg);
    cov = opg.completeOrthogonalDecomposition().pseudoInverse();
    fit.se_method = "opg";
    fit.warnings.push_back("Hessian not positive definite; standard errors from outer product of gradients");
  }

  const Eigen::VectorXd nat = natural(theta);
  const Eigen::VectorXd jac = natural_jacobian(theta);
  auto make = [&](std::string name, Eigen::Index j, double estimate) {
    GarchParam p;
    p.name = std::move(name);
    p.estimate = estimate;
    const double var = cov(j, j);
    p.se = var > 0.0 ? std::abs(jac(j)) * std::sqrt(var) : std::numeric_limits<double>::quiet_NaN();
    p.p = std::isfinite(p.se) && p.se > 0.0 ? special::normal_two_sided_p(estimate / p.se)
                                            : std::numeric_limits<double>::quiet_NaN();
    return p;
  };

  if (i_mu_ >= 0) fit.mu = nat(i_mu_);
  if (i_ar_ >= 0) fit.ar = nat(i_ar_);
  if (opts_.two_step) {
    fit.mu = opts_.mean.intercept ? mean_start_(0) : 0.0;
    fit.ar = opts_.mean.ar1 ? mean_start_(opts_.mean.intercept ? 1 : 0) : 0.0;
  }
  for (Eigen::Index j = 0; j < n_mean_; ++j) fit.params.push_back(make(names_[static_cast<std::size_t>(j)], j, nat(j)));
  fit.mean_alpha = opts_.two_step ? Eigen::VectorXd(mean_start_.tail(static_cast<Eigen::Index>(mean_terms_.size())))
                                  : Eigen::VectorXd(nat.segment(i_malpha_, n_mean_ - i_malpha_));
  fit.gamma = nat(i_gamma_);
  fit.beta = 1.0 - fit.gamma;
  fit.params.push_back(make("gamma", i_gamma_, fit.gamma));
  fit.params.push_back(make("beta", i_gamma_, fit.beta));
  const auto nv = static_cast<Eigen::Index>(var_terms_.size());
  fit.variance_alpha = nat.segment(i_valpha_, nv);
  for (Eigen::Index j = 0; j < nv; ++j) {
    fit.params.push_back(make(names_[static_cast<std::size_t>(i_valpha_ + j)], i_valpha_ + j, nat(i_valpha_ + j)));
  }
  if (opts_.dist != Dist::Normal) {
    fit.dist_param = i_dist_ >= 0 ? nat(i_dist_) : *opts_.fixed_dist_param;
    if (i_dist_ >= 0) fit.params.push_back(make(names_[static_cast<std::size_t>(i_dist_)], i_dist_, *fit.dist_param));
    if (opts_.dist == Dist::Ged) fit.lambda = ged_lambda(*fit.dist_param);
  }
  if (fit.floor_hits > opts_.max_floor_fraction * fit.n_obs) {
    fit.valid = false;
    fit.warnings.push_back(fmt::format("conditional variance floored on {} of {} observations", fit.floor_hits,
                                       fit.n_obs));
  }
  return fit;
}

namespace {

struct Attempt {
  GarchFit fit;
  std::string message;
};

// Simplex warm-up (small problems), BFGS from every start, then Newton polish of the best optimum.
Attempt fit_from_starts(const IgarchLikelihood& lik, const GarchOptions& opts, const optim::Objective& negll,
                        const optim::ValueFn& negll_value, std::vector<Eigen::VectorXd> starts) {
  optim::Result best;
  best.value = std::numeric_limits<double>::infinity();
  int total_iterations = 0;
  for (auto& x0 : starts) {
    if (!std::isfinite(negll_value(x0))) continue;
    if (lik.dimension() <= opts.simplex_max_params) {
      optim::NelderMeadOptions nm;
      nm.max_evaluations = 150 * static_cast<int>(lik.dimension());
      nm.initial_step = 0.2;
      x0 = optim::minimize_nelder_mead(negll_value, x0, nm).x;
    }
    auto res = optim::minimize_bfgs(negll, x0);
    total_iterations += res.iterations;
    if (res.value < best.value) best = std::move(res);
  }
  if (!std::isfinite(best.value)) {
    throw EstimationError(fmt::format("IGARCH ({}) likelihood not finite at any starting point", to_string(opts.dist)));
  }

  // Newton polish with the finite-difference Hessian of the analytic gradient.
  Eigen::VectorXd theta = best.x;
  Eigen::VectorXd grad = best.gradient;
  double value = best.value;
  for (int it = 0; it < 5 && optim::scaled_gradient_norm(grad, theta) > 1e-8; ++it) {
    const Eigen::MatrixXd hess = optim::fd_hessian(negll, theta);
    Eigen::LLT<Eigen::MatrixXd> llt(hess);
    if (llt.info() != Eigen::Success) break;
    const Eigen::VectorXd step = -llt.solve(grad);
    bool accepted = false;
    for (double a = 1.0; a > 1e-3; a *= 0.5) {
      Eigen::VectorXd g(theta.size());
      const Eigen::VectorXd cand = theta + a * step;
      const double v = negll(cand, &g);
      if (v <= value + 1e-10 * std::abs(value)) {
        theta = cand;
        grad = g;
        value = v;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }

  GarchFit fit = lik.finish(theta);
  fit.iterations = total_iterations;
  fit.converged = best.converged || fit.max_scaled_gradient < 1e-4;
  if (!fit.converged) {
    // Scale-free fallback: a tiny Newton decrement at a positive-definite Hessian. Needed when the
    // variance path nearly collapses and dummy coordinates carry curvature of order 1e10.
    const Eigen::LLT<Eigen::MatrixXd> llt(optim::fd_hessian(negll, theta));
    fit.converged = llt.info() == Eigen::Success && 0.5 * grad.dot(llt.solve(grad)) < 1e-6;
  }
  return {std::move(fit), best.message};
}

}  // namespace

GarchFit igarch_fit(const LabeledSeries& labeled, const GarchOptions& opts, const GarchFit* warm) {
  if (labeled.rows() < 501) {
    throw DataError(fmt::format("IGARCH fit needs at least 500 usable rows (got {})",
                                labeled.rows() == 0 ? 0 : labeled.rows() - 1));
  }
  const IgarchLikelihood lik(labeled, opts);
  const optim::Objective negll = [&lik](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    const double v = lik.evaluate(x, g);
    if (g) *g = -*g;
    return std::isfinite(v) ? -v : std::numeric_limits<double>::infinity();
  };
  const optim::ValueFn negll_value = [&lik](const Eigen::VectorXd& x) { return -lik.evaluate(x); };

  auto cold_starts = [&] {
    std::vector<Eigen::VectorXd> starts;
    const Eigen::VectorXd base = lik.start();
    starts.push_back(base);
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> jitter(0.0, 0.5);
    for (int r = 0; r < opts.restarts; ++r) {
      Eigen::VectorXd x = base;
      for (Eigen::Index j = 0; j < x.size(); ++j) x(j) += jitter(rng) * (lik.names()[static_cast<std::size_t>(j)] == "gamma" ? 1.0 : 0.2);
      starts.push_back(std::move(x));
    }
    return starts;
  };

  // A warm start that fails to converge falls back to the cold multi-start.
  std::vector<Eigen::VectorXd> starts = warm ? std::vector<Eigen::VectorXd>{lik.warm_start(*warm)} : cold_starts();
  std::size_t n_starts = starts.size();
  auto attempt = fit_from_starts(lik, opts, negll, negll_value, starts);
  if (!attempt.fit.converged && warm) {
    auto cold = fit_from_starts(lik, opts, negll, negll_value, cold_starts());
    n_starts += static_cast<std::size_t>(opts.restarts) + 1;
    cold.fit.iterations += attempt.fit.iterations;
    if (cold.fit.converged || cold.fit.loglik > attempt.fit.loglik) attempt = std::move(cold);
  }
  if (!attempt.fit.converged) {
    throw EstimationError(fmt::format("IGARCH ({}) did not converge after {} start(s): {} (scaled gradient {:.3g})",
                                      to_string(opts.dist), n_starts, attempt.message,
                                      attempt.fit.max_scaled_gradient));
  }
  return std::move(attempt.fit);
}

// ---------------------------------------------------------------------------
// Pruning and multi-distribution analyses
// ---------------------------------------------------------------------------

PruneResult prune_insignificant(const FitFn& fit_fn, std::vector<int> initial_terms, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw UsageError(fmt::format("prune threshold {} outside (0,1)", threshold));
  PruneResult out;
  out.initial_terms = normalized_terms(std::move(initial_terms));
  std::vector<int> terms = out.initial_terms;
  out.fit = fit_fn(terms, nullptr);
  terms = out.fit.variance_terms;
  for (;;) {
    int worst = 0;
    double worst_p = -1.0;
    for (int k : terms) {
      double p = out.fit.variance_p(k).value_or(1.0);
      if (std::isnan(p)) p = 1.0;
      if (p > worst_p) {
        worst_p = p;
        worst = k;
      }
    }
    if (worst == 0 || worst_p < threshold) break;
    terms.erase(std::find(terms.begin(), terms.end(), worst));
    const double before = out.fit.loglik;
    GarchFit next = fit_fn(terms, &out.fit);
    out.trace.push_back({worst, worst_p, before, next.loglik});
    out.fit = std::move(next);
    terms = out.fit.variance_terms;
  }
  return out;
}

VolatilityAnalysis volatility_analysis(const LabeledSeries& labeled, const std::vector<Dist>& dists,
                                       const GarchOptions& base, double prune_p) {
  VolatilityAnalysis out;
  out.mode = labeled.mode;
  out.dists = dists;
  const auto initial = present_terms(labeled);
  for (Dist d : dists) {
    const FitFn fn = [&](const std::vector<int>& terms, const GarchFit* warm) {
      GarchOptions o = base;
      o.dist = d;
      o.variance_terms = terms;
      return igarch_fit(labeled, o, warm);
    };
    out.per_dist.push_back(prune_insignificant(fn, initial, prune_p));
  }
  if (!out.per_dist.empty()) {
    std::set<int> common(out.per_dist.front().fit.variance_terms.begin(), out.per_dist.front().fit.variance_terms.end());
    for (const auto& pr : out.per_dist) {
      std::set<int> next;
      for (int k : pr.fit.variance_terms)
        if (common.count(k)) next.insert(k);
      common = std::move(next);
    }
    out.strongly_efficient.assign(common.begin(), common.end());
  }
  return out;
}

VolatilityAnalysis turn_of_term_fit(const LabeledSeries& window_labeled, const std::vector<Dist>& dists,
                                    const GarchOptions& base, double prune_p) {
  if (window_labeled.mode.kind != LabelKind::Window ||
      (window_labeled.mode.radius != 1 && window_labeled.mode.radius != 2)) {
    throw UsageError("turn-of-term analysis needs window labels with radius 1 or 2, not " +
                     window_labeled.mode.describe());
  }
  return volatility_analysis(window_labeled, dists, base, prune_p);
}

}  // namespace solarterm
