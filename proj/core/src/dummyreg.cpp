#include "solarterm/dummyreg.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <cmath>

#include "solarterm/error.hpp"
#include "solarterm/special.hpp"

namespace solarterm {

namespace {

std::vector<std::string> default_names(std::vector<std::string> names, Eigen::Index k, std::string_view prefix) {
  if (names.empty()) {
    for (Eigen::Index j = 0; j < k; ++j) names.push_back(fmt::format("{}{}", prefix, j));
  }
  if (static_cast<Eigen::Index>(names.size()) != k) {
    throw UsageError(fmt::format("{} column names given for {} columns", names.size(), k));
  }
  return names;
}

// Columns that lie in the span of the columns before them (greedy, in input order).
std::vector<Eigen::Index> dependent_columns(const Eigen::MatrixXd& x) {
  std::vector<Eigen::Index> dependent;
  Eigen::MatrixXd basis(x.rows(), 0);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    Eigen::VectorXd v = x.col(j);
    const double norm = v.norm();
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index b = 0; b < basis.cols(); ++b) v -= basis.col(b).dot(v) * basis.col(b);
    }
    if (norm == 0.0 || v.norm() <= 1e-9 * norm) {
      dependent.push_back(j);
    } else {
      basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
      basis.col(basis.cols() - 1) = v / v.norm();
    }
  }
  return dependent;
}

}  // namespace

OlsFit ols(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, std::vector<std::string> columns) {
  const Eigen::Index n = design.rows(), k = design.cols();
  if (y.size() != n) throw UsageError(fmt::format("design has {} rows but y has {}", n, y.size()));
  if (k == 0) throw UsageError("design has no columns");
  if (n <= k) throw DataError(fmt::format("need more observations ({}) than columns ({})", n, k));

  OlsFit fit;
  fit.columns = default_names(std::move(columns), k, "x");
  const auto dependent = dependent_columns(design);
  if (!dependent.empty()) {
    std::vector<std::string> names;
    for (auto j : dependent) names.push_back(fit.columns[static_cast<std::size_t>(j)]);
    throw DataError(fmt::format("rank-deficient design: column(s) {} are linear combinations of earlier columns",
                                fmt::join(names, ", ")));
  }

  fit.design = design;
  fit.y = y;
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(design);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv = r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  fit.coefficients = qr.solve(y);
  fit.residuals = y - design * fit.coefficients;
  fit.xtx_inv = r_inv * r_inv.transpose();
  fit.hat_diag = (design * r_inv).rowwise().squaredNorm();
  fit.df = static_cast<int>(n - k);
  fit.sigma2 = fit.residuals.squaredNorm() / fit.df;
  fit.cov_ols = fit.sigma2 * fit.xtx_inv;
  const double tss = (y.array() - y.mean()).square().sum();
  fit.r_squared = tss > 0.0 ? 1.0 - fit.residuals.squaredNorm() / tss : 0.0;

  fit.se = fit.cov_ols.diagonal().array().sqrt();
  fit.t.resize(k);
  fit.p.resize(k);
  const double q = special::student_t_quantile(0.975, fit.df);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double b = fit.coefficients(j), s = fit.se(j);
    fit.t(j) = s > 0.0 ? b / s : (b == 0.0 ? 0.0 : std::copysign(INFINITY, b));
    fit.p(j) = s > 0.0 ? special::student_t_two_sided_p(fit.t(j), fit.df) : (b == 0.0 ? 1.0 : 0.0);
    fit.ci95.push_back({b - q * s, b + q * s});
  }
  if ((fit.hat_diag.array() < 1.0 - 1e-10).all()) fit.cov_hc3 = hc3_cov(fit);
  return fit;
}

Eigen::MatrixXd hc3_cov(const OlsFit& fit) {
  const Eigen::Index n = fit.design.rows();
  Eigen::VectorXd a(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = fit.hat_diag(i);
    if (!(h < 1.0 - 1e-10)) {
      throw DataError(fmt::format("HC3 undefined: row {} has leverage {} (a single-observation group?)", i, h));
    }
    const double e = fit.residuals(i);
    a(i) = e * e / ((1.0 - h) * (1.0 - h));
  }
  const Eigen::MatrixXd bread = fit.xtx_inv * fit.design.transpose();
  Eigen::MatrixXd cov = bread * a.asDiagonal() * bread.transpose();
  return 0.5 * (cov + cov.transpose());
}

std::vector<VifEntry> vif(const Eigen::MatrixXd& regressors, std::vector<std::string> columns) {
  const Eigen::Index n = regressors.rows(), k = regressors.cols();
  columns = default_names(std::move(columns), k, "x");
  std::vector<VifEntry> out;
  for (Eigen::Index j = 0; j < k; ++j) {
    Eigen::MatrixXd others(n, k);
    others.col(0).setOnes();
    Eigen::Index c = 1;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (i != j) others.col(c++) = regressors.col(i);
    }
    const Eigen::VectorXd target = regressors.col(j);
    const double tss = (target.array() - target.mean()).square().sum();
    if (tss <= 0.0) throw DataError(fmt::format("perfect collinearity: column {} is constant", columns[j]));
    const Eigen::VectorXd coef = others.colPivHouseholderQr().solve(target);
    const double rss = (target - others * coef).squaredNorm();
    const double tolerance = rss / tss;
    if (tolerance < 1e-12) {
      throw DataError(fmt::format("perfect collinearity: column {} is explained by the others", columns[j]));
    }
    out.push_back({columns[static_cast<std::size_t>(j)], tolerance, 1.0 / tolerance});
  }
  return out;
}

std::string_view to_string(Robustness r) {
  switch (r) {
    case Robustness::Robust95: return "robust-95";
    case Robustness::Robust90: return "robust-90";
    case Robustness::Fragile: return "fragile";
  }
  return "fragile";
}

EbaResult eba_bounds(const OlsFit& fit, std::vector<double> levels) {
  const Eigen::MatrixXd cov = fit.cov_hc3 ? *fit.cov_hc3 : hc3_cov(fit);
  EbaResult out;
  out.levels = std::move(levels);
  for (Eigen::Index j = 0; j < fit.coefficients.size(); ++j) {
    EbaRow row;
    row.column = fit.columns[static_cast<std::size_t>(j)];
    row.estimate = fit.coefficients(j);
    row.se = std::sqrt(std::max(0.0, cov(j, j)));
    for (double level : out.levels) {
      const double u = special::normal_quantile(0.5 + 0.5 * level);
      const Interval b{row.estimate - u * row.se, row.estimate + u * row.se};
      row.bounds.push_back(b);
      row.robust.push_back(row.estimate != 0.0 && (row.estimate > 0.0 ? b.lower > 0.0 : b.upper < 0.0));
    }
    // Classification uses the 95% and 90% levels when present.
    auto robust_at = [&](double level) {
      for (std::size_t i = 0; i < out.levels.size(); ++i)
        if (std::abs(out.levels[i] - level) < 1e-12) return static_cast<bool>(row.robust[i]);
      return false;
    };
    row.classification = robust_at(0.95) ? Robustness::Robust95
                         : robust_at(0.90) ? Robustness::Robust90
                                           : Robustness::Fragile;
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::optional<Eigen::Index> ReferenceFit::index_of(int term) const {
  auto it = std::find(terms.begin(), terms.end(), term);
  if (it == terms.end()) return std::nullopt;
  return static_cast<Eigen::Index>(it - terms.begin());
}

LabeledSeries term_days_only(const LabeledSeries& labeled) {
  if (labeled.mode.kind != LabelKind::TermDay) {
    throw UsageError("inter-term regression needs term-day labels, not " + labeled.mode.describe());
  }
  std::vector<Eigen::Index> keep;
  for (Eigen::Index t = 0; t < labeled.dummies.rows(); ++t) {
    if (labeled.dummies.row(t).sum() == 1.0) keep.push_back(t);
  }
  LabeledSeries out;
  out.mode = labeled.mode;
  out.events = labeled.events;
  out.returns.method = labeled.returns.method;
  out.returns.trading_days = labeled.returns.trading_days;
  out.dummies.resize(static_cast<Eigen::Index>(keep.size()), kTermCount);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    const auto t = static_cast<std::size_t>(keep[i]);
    out.returns.dates.push_back(labeled.returns.dates[t]);
    out.returns.values.push_back(labeled.returns.values[t]);
    out.lagged_return.push_back(labeled.lagged_return[t]);
    out.dummies.row(static_cast<Eigen::Index>(i)) = labeled.dummies.row(keep[i]);
  }
  out.normal_day = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(keep.size()));
  return out;
}

ReferenceFit reference_regression(const LabeledSeries& labeled, int reference) {
  const LabeledSeries days = term_days_only(labeled);
  if (reference < 1 || reference > kTermCount) throw UsageError(fmt::format("reference term {} outside 1..24", reference));
  if (days.term_count(reference) == 0) {
    throw DataError(fmt::format("reference term {} has no observations on trading days", reference));
  }
  ReferenceFit out;
  out.reference = reference;
  out.terms.push_back(reference);
  std::vector<std::string> names{fmt::format("ST{} (reference)", reference)};
  for (int k = 1; k <= kTermCount; ++k) {
    if (k == reference) continue;
    if (days.term_count(k) == 0) {
      out.absent_terms.push_back(k);
      continue;
    }
    out.terms.push_back(k);
    names.push_back(fmt::format("ST{}", k));
  }
  const auto n = static_cast<Eigen::Index>(days.rows());
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(out.terms.size()));
  x.col(0).setOnes();
  for (std::size_t j = 1; j < out.terms.size(); ++j) {
    x.col(static_cast<Eigen::Index>(j)) = days.dummies.col(out.terms[j] - 1);
  }
  out.fit = ols(x, days.y(), std::move(names));
  return out;
}

std::vector<ReferencePanel> significant_panels(const LabeledSeries& labeled, const PanelThresholds& thresholds) {
  const LabeledSeries days = term_days_only(labeled);
  std::vector<ReferencePanel> primary, watch;
  for (int ref = 1; ref <= kTermCount; ++ref) {
    if (days.term_count(ref) == 0) continue;
    auto rf = reference_regression(days, ref);
    const double p0 = rf.fit.p(0);
    const bool is_primary = p0 < thresholds.reference_p;
    const bool is_watch = !is_primary && p0 < thresholds.watchlist_p;
    if (!is_primary && !is_watch) continue;

    ReferencePanel panel;
    panel.watchlist = is_watch;
    for (std::size_t j = 1; j < rf.terms.size(); ++j) {
      if (rf.fit.p(static_cast<Eigen::Index>(j)) < thresholds.display_p) panel.displayed_terms.push_back(rf.terms[j]);
    }
    const Eigen::MatrixXd regressors = rf.fit.design.rightCols(rf.fit.design.cols() - 1);
    std::vector<std::string> names(rf.fit.columns.begin() + 1, rf.fit.columns.end());
    if (regressors.cols() > 0) panel.vif = vif(regressors, std::move(names));
    try {
      panel.eba = eba_bounds(rf.fit);
    } catch (const DataError& e) {
      panel.eba_error = e.what();
    }
    panel.ref = std::move(rf);
    (is_primary ? primary : watch).push_back(std::move(panel));
  }
  for (auto& w : watch) primary.push_back(std::move(w));
  return primary;
}

}  // namespace solarterm
