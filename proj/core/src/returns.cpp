#include "solarterm/returns.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <istream>
#include <sstream>

#include "solarterm/error.hpp"

namespace solarterm {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  std::string out{s.substr(b, e - b + 1)};
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
      cur.push_back(c);
    } else if (c == ',' && !quoted) {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

Date parse_date(const std::string& text, const std::string& format, std::size_t line_no) {
  std::tm tm{};
  std::istringstream ss(text);
  ss >> std::get_time(&tm, format.c_str());
  if (ss.fail()) {
    throw DataError(fmt::format("line {}: malformed date '{}' (expected format {})", line_no, text, format));
  }
  try {
    return make_date(tm.tm_year + 1900, static_cast<unsigned>(tm.tm_mon + 1), static_cast<unsigned>(tm.tm_mday));
  } catch (const DataError& e) {
    throw DataError(fmt::format("line {}: {}", line_no, e.what()));
  }
}

double parse_number(const std::string& text, std::size_t line_no, std::string_view what) {
  double v = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || !std::isfinite(v)) {
    throw DataError(fmt::format("line {}: malformed {} '{}'", line_no, what, text));
  }
  return v;
}

struct ParsedRows {
  std::vector<Date> dates;
  std::vector<double> values;
};

ParsedRows read_two_columns(std::istream& in, const std::string& date_col, const std::string& value_col,
                            const std::string& date_format, std::string_view value_name) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
      header = split_csv(line);
      break;
    }
  }
  if (header.empty()) throw DataError("input is empty: header row missing");

  auto column = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError(fmt::format("column '{}' not found in header", name));
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t di = column(date_col);
  const std::size_t vi = column(value_col);

  ParsedRows rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() <= std::max(di, vi)) {
      throw DataError(fmt::format("line {}: expected at least {} fields, found {}", line_no, std::max(di, vi) + 1,
                                  fields.size()));
    }
    const Date d = parse_date(fields[di], date_format, line_no);
    if (!rows.dates.empty() && d <= rows.dates.back()) {
      throw DataError(fmt::format("line {}: date {} is {} the previous row ({}); rows must be strictly increasing",
                                  line_no, format_date(d), d == rows.dates.back() ? "a duplicate of" : "before",
                                  format_date(rows.dates.back())));
    }
    rows.dates.push_back(d);
    rows.values.push_back(parse_number(fields[vi], line_no, value_name));
  }
  return rows;
}

}  // namespace

std::string_view to_string(ReturnMethod m) {
  switch (m) {
    case ReturnMethod::Log: return "log";
    case ReturnMethod::Simple: return "simple";
    case ReturnMethod::Precomputed: return "precomputed";
  }
  return "unknown";
}

std::string LabelMode::describe() const {
  return kind == LabelKind::TermDay ? std::string{"term-day"} : fmt::format("window(radius={})", radius);
}

PriceSeries parse_price_csv(std::istream& in, const CsvOptions& opts, std::string source_id) {
  auto parsed = read_two_columns(in, opts.date_col, opts.close_col, opts.date_format, "price");
  PriceSeries out;
  out.source_id = std::move(source_id);
  out.rows.reserve(parsed.dates.size());
  for (std::size_t i = 0; i < parsed.dates.size(); ++i) {
    if (!(parsed.values[i] > 0.0)) {
      throw DataError(fmt::format("non-positive price {} on {}", parsed.values[i], format_date(parsed.dates[i])));
    }
    out.rows.push_back({parsed.dates[i], parsed.values[i]});
  }
  return out;
}

ReturnSeries parse_returns_csv(std::istream& in, const CsvOptions& opts) {
  if (!opts.returns_col) throw UsageError("parse_returns_csv requires a returns column");
  auto parsed = read_two_columns(in, opts.date_col, *opts.returns_col, opts.date_format, "return");
  ReturnSeries out;
  out.method = ReturnMethod::Precomputed;
  out.trading_days = parsed.dates;
  out.dates = std::move(parsed.dates);
  out.values = std::move(parsed.values);
  return out;
}

ReturnSeries compute_returns(const PriceSeries& prices, ReturnMethod method) {
  if (prices.rows.size() < 2) {
    throw DataError(fmt::format("series too short: {} price rows, need at least 2", prices.rows.size()));
  }
  if (method == ReturnMethod::Precomputed) throw UsageError("compute_returns needs the log or simple method");
  ReturnSeries out;
  out.method = method;
  out.trading_days.reserve(prices.rows.size());
  for (const auto& r : prices.rows) out.trading_days.push_back(r.date);
  out.dates.reserve(prices.rows.size() - 1);
  out.values.reserve(prices.rows.size() - 1);
  for (std::size_t t = 1; t < prices.rows.size(); ++t) {
    const double ratio = prices.rows[t].close / prices.rows[t - 1].close;
    out.dates.push_back(prices.rows[t].date);
    out.values.push_back(method == ReturnMethod::Log ? std::log(ratio) : ratio - 1.0);
  }
  return out;
}

Eigen::VectorXd LabeledSeries::y() const {
  return Eigen::Map<const Eigen::VectorXd>(returns.values.data(), static_cast<Eigen::Index>(returns.values.size()));
}

int LabeledSeries::term_count(int order) const {
  return static_cast<int>(std::lround(dummies.col(order - 1).sum()));
}

int LabeledSeries::term_of_row(std::size_t t) const {
  for (int k = 0; k < kTermCount; ++k) {
    if (dummies(static_cast<Eigen::Index>(t), k) != 0.0) return k + 1;
  }
  return 0;
}

namespace {

LabeledSeries empty_labeled(const ReturnSeries& returns, LabelMode mode) {
  if (returns.size() == 0) throw DataError("cannot label an empty return series");
  const auto n = static_cast<Eigen::Index>(returns.size());
  LabeledSeries out;
  out.returns = returns;
  out.mode = mode;
  out.dummies = Eigen::MatrixXd::Zero(n, kTermCount);
  out.lagged_return.resize(returns.size());
  for (std::size_t t = 1; t < returns.size(); ++t) out.lagged_return[t] = returns.values[t - 1];
  return out;
}

void set_dummy(LabeledSeries& ls, Date d, int order) {
  const auto& dates = ls.returns.dates;
  auto it = std::lower_bound(dates.begin(), dates.end(), d);
  if (it == dates.end() || *it != d) return;
  const auto row = static_cast<Eigen::Index>(it - dates.begin());
  for (int k = 0; k < kTermCount; ++k) {
    if (k != order - 1 && ls.dummies(row, k) != 0.0) {
      throw DataError(fmt::format("{} is labeled with both term {} and term {}", format_date(d), k + 1, order));
    }
  }
  ls.dummies(row, order - 1) = 1.0;
}

void finish(LabeledSeries& ls) {
  ls.normal_day = Eigen::VectorXd::Ones(ls.dummies.rows()) - ls.dummies.rowwise().sum();
}

}  // namespace

LabeledSeries build_labeled(const ReturnSeries& returns, std::span<const TermEvent> aligned_events) {
  auto out = empty_labeled(returns, LabelMode{LabelKind::TermDay, 0});
  out.events.assign(aligned_events.begin(), aligned_events.end());
  for (const auto& ev : aligned_events) {
    if (ev.trading_day) set_dummy(out, *ev.trading_day, ev.term.order);
  }
  finish(out);
  return out;
}

LabeledSeries build_labeled(const ReturnSeries& returns, std::span<const TermWindow> windows) {
  const int radius = windows.empty() ? 0 : windows.front().radius;
  auto out = empty_labeled(returns, LabelMode{radius == 0 ? LabelKind::TermDay : LabelKind::Window, radius});
  out.windows.assign(windows.begin(), windows.end());
  for (const auto& w : windows) {
    out.events.push_back(w.event);
    for (const Date d : w.member_days) set_dummy(out, d, w.event.term.order);
  }
  finish(out);
  return out;
}

LabeledSeries label_returns(const ReturnSeries& returns, int radius) {
  if (returns.size() == 0) throw DataError("cannot label an empty return series");
  const auto& days = returns.trading_days.empty() ? returns.dates : returns.trading_days;
  const auto events = term_calendar(year_of(days.front()), year_of(days.back()));
  if (radius == 0) {
    const auto aligned = align_terms(events, days);
    return build_labeled(returns, aligned);
  }
  const auto windows = window_labels(events, days, radius);
  return build_labeled(returns, windows);
}

}  // namespace solarterm
