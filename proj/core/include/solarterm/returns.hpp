#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "solarterm/calendar.hpp"

namespace solarterm {

struct PriceRow {
  Date date;
  double close = 0.0;
};

struct PriceSeries {
  std::vector<PriceRow> rows;
  std::string source_id;
};

enum class ReturnMethod { Log, Simple, Precomputed };

[[nodiscard]] std::string_view to_string(ReturnMethod m);

struct ReturnSeries {
  std::vector<Date> dates;
  std::vector<double> values;
  ReturnMethod method = ReturnMethod::Log;
  /// Every date observed in the source file (the inferred trading calendar).
  std::vector<Date> trading_days;

  [[nodiscard]] std::size_t size() const { return values.size(); }
};

struct CsvOptions {
  std::string date_col = "date";
  std::string close_col = "close";
  /// When set, returns are read from this column and compute_returns is skipped.
  std::optional<std::string> returns_col;
  /// strptime-style format for the date column.
  std::string date_format = "%Y-%m-%d";
};

[[nodiscard]] PriceSeries parse_price_csv(std::istream& in, const CsvOptions& opts, std::string source_id = {});
[[nodiscard]] ReturnSeries parse_returns_csv(std::istream& in, const CsvOptions& opts);

/// Daily returns dated by the later day. Requires at least two prices.
[[nodiscard]] ReturnSeries compute_returns(const PriceSeries& prices, ReturnMethod method = ReturnMethod::Log);

enum class LabelKind { TermDay, Window };

struct LabelMode {
  LabelKind kind = LabelKind::TermDay;
  int radius = 0;

  [[nodiscard]] std::string describe() const;
};

/// Returns with an n x 24 solar-term dummy matrix.
struct LabeledSeries {
  ReturnSeries returns;
  Eigen::MatrixXd dummies;          // n x 24, column k-1 is term k
  Eigen::VectorXd normal_day;       // 1 - row sum
  std::vector<std::optional<double>> lagged_return;
  LabelMode mode;
  std::vector<TermEvent> events;    // aligned events used for labeling
  std::vector<TermWindow> windows;  // populated in window mode

  [[nodiscard]] std::size_t rows() const { return returns.size(); }
  [[nodiscard]] Eigen::VectorXd y() const;
  /// Number of rows labeled with term `order`.
  [[nodiscard]] int term_count(int order) const;
  /// Term order of row t (0 on a normal day). Only meaningful in term-day mode.
  [[nodiscard]] int term_of_row(std::size_t t) const;
};

[[nodiscard]] LabeledSeries build_labeled(const ReturnSeries& returns, std::span<const TermEvent> aligned_events);
[[nodiscard]] LabeledSeries build_labeled(const ReturnSeries& returns, std::span<const TermWindow> windows);

/// Computes the term calendar for the years spanned by `returns`, aligns it with the
/// series' trading days and labels rows. radius 0 gives term-day mode.
[[nodiscard]] LabeledSeries label_returns(const ReturnSeries& returns, int radius = 0);

}  // namespace solarterm
