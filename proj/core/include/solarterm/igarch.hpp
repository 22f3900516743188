#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "solarterm/dummyreg.hpp"
#include "solarterm/returns.hpp"

namespace solarterm {

// ---------------------------------------------------------------------------
// Mean level: AR(1) with solar-term dummies, fitted by conditional least squares.
// ---------------------------------------------------------------------------

struct MeanFit {
  OlsFit ols;                     // columns: mu, r, alpha_k...
  std::vector<int> dummy_terms;   // term order per alpha column
  std::vector<int> dropped_terms; // requested terms with no occurrences
  int n_obs = 0;

  [[nodiscard]] double mu() const { return ols.coefficients(0); }
  [[nodiscard]] double ar() const { return ols.coefficients(1); }
  [[nodiscard]] std::optional<Eigen::Index> column_of(int term) const;
  [[nodiscard]] const Eigen::VectorXd& residuals() const { return ols.residuals; }
};

/// R_t on intercept, R_{t-1} and the dummies of `keep` (all 24 when empty is not
/// intended: pass the terms explicitly). The first row, which has no lag, is dropped.
[[nodiscard]] MeanFit refined_mean_fit(const LabeledSeries& labeled, const std::vector<int>& keep);

/// All 24 term dummies; normal days are the baseline.
[[nodiscard]] MeanFit ar1_dummy_fit(const LabeledSeries& labeled);

struct ArchLmRow {
  int lag = 0;
  double lm = 0.0;
  double p = 1.0;
  bool reject_1pct = false;
  int n_effective = 0;
};

/// Engle's LM test: e_t^2 on an intercept and q of its lags, LM = n_eff * R^2 ~ chi2(q).
[[nodiscard]] std::vector<ArchLmRow> arch_lm_test(const Eigen::VectorXd& residuals, const std::vector<int>& lags);

// ---------------------------------------------------------------------------
// Variance level: IGARCH(1,1) with additive term dummies.
// ---------------------------------------------------------------------------

enum class Dist { Normal, StudentT, Ged };

[[nodiscard]] std::string_view to_string(Dist d);
[[nodiscard]] Dist parse_dist(std::string_view s);

/// GED normalizer sqrt(2^(-2/v) Gamma(1/v) / Gamma(3/v)).
[[nodiscard]] double ged_lambda(double shape);

/// Log density of the unit-variance standardized distribution. `param` is the
/// Student-t degrees of freedom (> 2) or the GED shape (> 0); ignored for Normal.
[[nodiscard]] double dist_logpdf(double z, Dist dist, double param = 0.0);

struct MeanSpec {
  bool intercept = true;
  bool ar1 = true;
  std::vector<int> dummy_terms;
};

struct GarchOptions {
  Dist dist = Dist::Normal;
  std::vector<int> variance_terms;
  MeanSpec mean;
  /// Fit the mean equation by OLS first and hold its residuals fixed.
  bool two_step = false;
  std::optional<double> fixed_dist_param;
  int restarts = 3;
  std::uint64_t seed = 20240101;
  double variance_floor = 1e-12;
  double max_floor_fraction = 0.001;
  double gamma_start = 0.06;
  double t_df_start = 8.0;
  double ged_shape_start = 1.5;
  /// Run a derivative-free simplex pass before BFGS when the parameter count is at most this.
  int simplex_max_params = 8;
};

struct GarchParam {
  std::string name;
  double estimate = 0.0;
  double se = 0.0;
  double p = 1.0;
};

struct GarchFit {
  Dist dist = Dist::Normal;
  double gamma = 0.0;
  double beta = 0.0;
  double mu = 0.0;
  double ar = 0.0;
  std::vector<int> mean_terms;
  Eigen::VectorXd mean_alpha;
  std::vector<int> variance_terms;
  Eigen::VectorXd variance_alpha;
  std::optional<double> dist_param;
  std::optional<double> lambda;
  Eigen::VectorXd h2;
  Eigen::VectorXd residuals;
  double loglik = 0.0;
  std::vector<GarchParam> params;

  int n_obs = 0;
  int floor_hits = 0;
  bool valid = true;
  bool converged = false;
  int iterations = 0;
  std::string se_method;  // "hessian" or "opg"
  double max_scaled_gradient = 0.0;
  std::vector<std::string> warnings;

  /// Optimizer coordinates at the optimum, used for warm starts.
  Eigen::VectorXd internal;

  [[nodiscard]] const GarchParam* param(std::string_view name) const;
  [[nodiscard]] std::optional<double> variance_p(int term) const;
};

/// Prepared data and log-likelihood in the optimizer's coordinates. Exposed so tests
/// and diagnostics can evaluate gradients at arbitrary points.
class IgarchLikelihood {
 public:
  IgarchLikelihood(const LabeledSeries& labeled, const GarchOptions& opts);

  [[nodiscard]] Eigen::Index dimension() const { return static_cast<Eigen::Index>(names_.size()); }
  [[nodiscard]] const std::vector<std::string>& names() const { return names_; }
  [[nodiscard]] Eigen::VectorXd start() const;
  [[nodiscard]] int n_obs() const { return static_cast<int>(y_.size()); }
  [[nodiscard]] double initial_variance() const { return h0_; }

  /// Log-likelihood; fills `grad` (d loglik / d theta) when non-null and the outer
  /// product of per-observation scores when `opg` is non-null.
  double evaluate(const Eigen::VectorXd& theta, Eigen::VectorXd* grad = nullptr, Eigen::MatrixXd* opg = nullptr,
                  int* floor_hits = nullptr, Eigen::VectorXd* h2 = nullptr, Eigen::VectorXd* eps = nullptr) const;

  /// Natural-scale estimates and the Jacobian d natural / d theta (diagonal).
  [[nodiscard]] Eigen::VectorXd natural(const Eigen::VectorXd& theta) const;
  [[nodiscard]] Eigen::VectorXd natural_jacobian(const Eigen::VectorXd& theta) const;

  /// Map a fit's internal vector onto this likelihood's coordinates (dropping absent terms).
  [[nodiscard]] Eigen::VectorXd warm_start(const GarchFit& previous) const;

  [[nodiscard]] GarchFit finish(const Eigen::VectorXd& theta) const;

 private:
  GarchOptions opts_;
  std::vector<double> y_, lag_;
  std::vector<std::vector<std::uint16_t>> mean_rows_;  // per obs, indexes into mean_terms
  std::vector<std::vector<std::uint16_t>> var_rows_;   // per obs, indexes into variance_terms
  std::vector<double> fixed_eps_;                      // two-step residuals
  std::vector<int> mean_terms_, var_terms_;
  std::vector<std::string> names_;
  double h0_ = 0.0;
  double scale_ = 1.0;  // sqrt(h0)
  Eigen::VectorXd mean_start_;
  // layout
  Eigen::Index n_mean_ = 0, i_mu_ = -1, i_ar_ = -1, i_malpha_ = 0, i_gamma_ = 0, i_valpha_ = 0, i_dist_ = -1;
};

/// Joint (or two-step) maximum likelihood IGARCH(1,1) fit.
[[nodiscard]] GarchFit igarch_fit(const LabeledSeries& labeled, const GarchOptions& opts,
                                  const GarchFit* warm = nullptr);

struct PruneStep {
  int removed_term = 0;
  double p_value = 1.0;
  double loglik_before = 0.0;
  double loglik_after = 0.0;
};

struct PruneResult {
  GarchFit fit;
  std::vector<int> initial_terms;
  std::vector<PruneStep> trace;
};

/// Refits with the given variance-dummy set, optionally warm-started.
using FitFn = std::function<GarchFit(const std::vector<int>& terms, const GarchFit* warm)>;

/// Backward elimination: drop the variance dummy with the largest p >= threshold and refit
/// until every remaining dummy has p < threshold.
[[nodiscard]] PruneResult prune_insignificant(const FitFn& fit_fn, std::vector<int> initial_terms,
                                              double threshold = 0.10);

struct VolatilityAnalysis {
  LabelMode mode;
  std::vector<Dist> dists;
  std::vector<PruneResult> per_dist;
  /// Terms surviving pruning under every distribution.
  std::vector<int> strongly_efficient;
};

/// Variance-dummy IGARCH per distribution with pruning, starting from every term present.
[[nodiscard]] VolatilityAnalysis volatility_analysis(const LabeledSeries& labeled, const std::vector<Dist>& dists,
                                                     const GarchOptions& base, double prune_p = 0.10);

/// Turn-of-term variant: requires window labels (radius 1 or 2).
[[nodiscard]] VolatilityAnalysis turn_of_term_fit(const LabeledSeries& window_labeled, const std::vector<Dist>& dists,
                                                  const GarchOptions& base, double prune_p = 0.10);

/// Terms present (at least one labeled row after dropping the first observation).
[[nodiscard]] std::vector<int> present_terms(const LabeledSeries& labeled);

}  // namespace solarterm
