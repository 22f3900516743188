#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "solarterm/returns.hpp"

namespace solarterm {

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

struct OlsFit {
  std::vector<std::string> columns;
  Eigen::MatrixXd design;
  Eigen::VectorXd y;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd se;
  Eigen::VectorXd t;
  Eigen::VectorXd p;
  std::vector<Interval> ci95;
  Eigen::VectorXd residuals;
  Eigen::VectorXd hat_diag;
  Eigen::MatrixXd xtx_inv;
  Eigen::MatrixXd cov_ols;
  /// Absent when some row has leverage one.
  std::optional<Eigen::MatrixXd> cov_hc3;
  double sigma2 = 0.0;
  double r_squared = 0.0;
  int df = 0;

  [[nodiscard]] Eigen::Index nobs() const { return design.rows(); }
  [[nodiscard]] Eigen::Index ncols() const { return design.cols(); }
};

/// Least squares with t(n - k) inference. Throws DataError naming the dependent
/// columns when the design is rank deficient.
[[nodiscard]] OlsFit ols(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                         std::vector<std::string> columns = {});

/// (X'X)^-1 X' diag(e_i^2 / (1 - h_i)^2) X (X'X)^-1. Throws DataError on a leverage-one row.
[[nodiscard]] Eigen::MatrixXd hc3_cov(const OlsFit& fit);

struct VifEntry {
  std::string column;
  double tolerance = 1.0;
  double vif = 1.0;
};

/// Variance inflation of each regressor against all others plus an intercept.
/// `regressors` excludes the intercept. Throws DataError on perfect collinearity.
[[nodiscard]] std::vector<VifEntry> vif(const Eigen::MatrixXd& regressors, std::vector<std::string> columns = {});

enum class Robustness { Robust95, Robust90, Fragile };

[[nodiscard]] std::string_view to_string(Robustness r);

struct EbaRow {
  std::string column;
  double estimate = 0.0;
  double se = 0.0;                 // sqrt of the HC3 diagonal
  std::vector<Interval> bounds;    // one per level
  std::vector<bool> robust;        // one per level
  Robustness classification = Robustness::Fragile;
};

struct EbaResult {
  std::vector<double> levels;
  std::vector<EbaRow> rows;
};

/// Bounds estimate +/- u * sigma with u the two-sided normal quantile of each level.
[[nodiscard]] EbaResult eba_bounds(const OlsFit& fit, std::vector<double> levels = {0.95, 0.90});

/// Saturated regression on term days: intercept plus a dummy for every other term that occurs.
struct ReferenceFit {
  int reference = 0;
  OlsFit fit;
  /// Term order per coefficient; entry 0 is the reference (intercept).
  std::vector<int> terms;
  std::vector<int> absent_terms;

  [[nodiscard]] std::optional<Eigen::Index> index_of(int term) const;
};

[[nodiscard]] ReferenceFit reference_regression(const LabeledSeries& labeled, int reference);

struct PanelThresholds {
  double reference_p = 0.10;
  double display_p = 0.10;
  double watchlist_p = 0.25;
};

struct ReferencePanel {
  ReferenceFit ref;
  std::vector<VifEntry> vif;
  std::optional<EbaResult> eba;
  std::string eba_error;
  bool watchlist = false;
  /// Terms (other than the reference) whose coefficient p-value is below the display threshold.
  std::vector<int> displayed_terms;
};

/// Reference-term panels whose intercept is significant, followed by near-miss watchlist panels.
[[nodiscard]] std::vector<ReferencePanel> significant_panels(const LabeledSeries& labeled,
                                                             const PanelThresholds& thresholds = {});

/// Rows of a term-day series that fall on exactly one term.
[[nodiscard]] LabeledSeries term_days_only(const LabeledSeries& labeled);

}  // namespace solarterm
