#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "solarterm/returns.hpp"

namespace solarterm {

struct Moments {
  double mean = 0.0;
  double std = 0.0;                 // n - 1 denominator
  std::optional<double> skewness;   // m3 / m2^1.5, undefined for zero variance
  std::optional<double> kurtosis;   // m4 / m2^2 (non-excess), undefined for zero variance
};

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

struct SampleStats {
  int n = 0;
  double mean = 0.0;
  double std = 0.0;
  std::optional<double> skewness;
  std::optional<double> kurtosis;
  std::optional<TestResult> t_test;
  std::optional<TestResult> shapiro;
};

struct TermStatsRow {
  int order = 0;
  SampleStats stats;
  /// Set when n < 3 or the sample is degenerate; `note` says why.
  bool flagged = false;
  std::string note;
};

/// Requires n >= 2.
[[nodiscard]] Moments moments(std::span<const double> sample);

/// One-sample two-sided t-test of mean zero. Requires n >= 2 and nonzero variance.
[[nodiscard]] TestResult t_test_mean(std::span<const double> sample);

/// Shapiro-Wilk W and p-value (Royston's AS R94 approximation), 3 <= n <= 5000.
[[nodiscard]] TestResult shapiro_wilk(std::span<const double> sample);

/// Every statistic that is defined for the sample; never throws for n >= 1.
[[nodiscard]] SampleStats describe(std::span<const double> sample);

/// One row per term order 1..24, in order. Requires term-day labels.
[[nodiscard]] std::vector<TermStatsRow> per_term_stats(const LabeledSeries& labeled);

/// Returns observed on term `order` days, in date order.
[[nodiscard]] std::vector<double> term_sample(const LabeledSeries& labeled, int order);

}  // namespace solarterm
