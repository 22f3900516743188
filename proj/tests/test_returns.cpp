#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "solarterm/error.hpp"
#include "solarterm/returns.hpp"
#include "support.hpp"

using namespace solarterm;

namespace {

PriceSeries parse(const std::string& text, CsvOptions opts = {}) {
  std::istringstream in(text);
  return parse_price_csv(in, opts, "test");
}

std::string error_of(const std::string& text) {
  try {
    (void)parse(text);
  } catch (const DataError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(ParsePriceCsv, SingleRow) {
  const auto p = parse("date,close\n1995-01-03,100.0\n");
  ASSERT_EQ(p.rows.size(), 1u);
  EXPECT_EQ(p.rows[0].date, make_date(1995, 1, 3));
  EXPECT_DOUBLE_EQ(p.rows[0].close, 100.0);
}

TEST(ParsePriceCsv, ConfigurableColumnsBomAndQuotes) {
  CsvOptions opts;
  opts.date_col = "Trade Date";
  opts.close_col = "Adj Close";
  opts.date_format = "%d/%m/%Y";
  const auto p = parse("\xEF\xBB\xBFopen,\"Trade Date\",\"Adj Close\"\r\n1,03/01/1995,\"10.5\"\r\n2,04/01/1995,11\r\n", opts);
  ASSERT_EQ(p.rows.size(), 2u);
  EXPECT_EQ(p.rows[1].date, make_date(1995, 1, 4));
  EXPECT_DOUBLE_EQ(p.rows[0].close, 10.5);
}

TEST(ParsePriceCsv, Errors) {
  EXPECT_NE(error_of("date,close\n1995-01-03,0\n").find("non-positive price"), std::string::npos);
  EXPECT_NE(error_of("date,close\n1995-01-04,1\n1995-01-03,2\n").find("1995-01-03"), std::string::npos);
  EXPECT_NE(error_of("date,close\n1995-01-04,1\n1995-01-04,2\n").find("duplicate"), std::string::npos);
  EXPECT_NE(error_of("date,close\n1995-13-04,1\n").find("line 2"), std::string::npos);
  EXPECT_NE(error_of("date,close\n1995-02-30,1\n").find("invalid"), std::string::npos);
  EXPECT_NE(error_of("date,price\n1995-01-04,1\n").find("close"), std::string::npos);
  EXPECT_NE(error_of("date,close\n1995-01-04,abc\n").find("malformed"), std::string::npos);
  EXPECT_NE(error_of("").find("header"), std::string::npos);
}

TEST(ParseReturnsCsv, ReadsPrecomputedColumn) {
  std::istringstream in("date,close,ret\n2001-01-02,1,0.01\n2001-01-03,1,-0.02\n");
  CsvOptions opts;
  opts.returns_col = "ret";
  const auto r = parse_returns_csv(in, opts);
  EXPECT_EQ(r.method, ReturnMethod::Precomputed);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_DOUBLE_EQ(r.values[1], -0.02);
}

TEST(ComputeReturns, Definitions) {
  const auto p = parse("date,close\n2000-01-03,100\n2000-01-04,101\n");
  const auto lr = compute_returns(p, ReturnMethod::Log);
  const auto sr = compute_returns(p, ReturnMethod::Simple);
  ASSERT_EQ(lr.size(), 1u);
  EXPECT_NEAR(lr.values[0], 0.00995033085316809, 1e-15);
  EXPECT_NEAR(sr.values[0], 0.01, 1e-15);
  EXPECT_EQ(lr.dates[0], make_date(2000, 1, 4));
  EXPECT_EQ(lr.trading_days.size(), 2u);
}

TEST(ComputeReturns, ConstantPricesAndTooShort) {
  const auto p = parse("date,close\n2000-01-03,5\n2000-01-04,5\n2000-01-05,5\n");
  for (auto m : {ReturnMethod::Log, ReturnMethod::Simple})
    for (double v : compute_returns(p, m).values) EXPECT_EQ(v, 0.0);
  EXPECT_THROW((void)compute_returns(parse("date,close\n2000-01-03,5\n")), DataError);
}

TEST(ComputeReturns, LogAndSimpleAgreeToFirstOrder) {
  const auto days = testsupport::weekdays(2000, 2001);
  const auto draws = testsupport::normal_draws(11, days.size(), 0.05);
  PriceSeries p;
  double price = 50.0;
  for (std::size_t i = 0; i < days.size(); ++i) {
    p.rows.push_back({days[i], price});
    price *= std::exp(draws[i]);
  }
  const auto lr = compute_returns(p, ReturnMethod::Log);
  const auto sr = compute_returns(p, ReturnMethod::Simple);
  for (std::size_t t = 0; t < lr.size(); ++t) {
    const double s = sr.values[t];
    ASSERT_LT(std::abs(s), 0.5);
    EXPECT_LE(std::abs(lr.values[t] - s), s * s / 2.0 * (1.0 + std::abs(s)));
  }
}

TEST(BuildLabeled, TermDayInvariants) {
  const auto days = testsupport::weekdays(1995, 2022);
  const auto r = testsupport::returns_on(days, testsupport::normal_draws(3, days.size() - 1, 0.01));
  const auto ls = label_returns(r, 0);
  ASSERT_EQ(ls.dummies.rows(), static_cast<Eigen::Index>(r.size()));
  ASSERT_EQ(ls.dummies.cols(), 24);
  const auto aligned = align_terms(term_calendar(1995, 2022), r.trading_days);
  std::vector<int> expected(25, 0);
  for (const auto& ev : aligned) {
    if (ev.trading_day && *ev.trading_day >= r.dates.front()) ++expected[static_cast<std::size_t>(ev.term.order)];
  }
  for (int k = 1; k <= 24; ++k) EXPECT_EQ(ls.term_count(k), expected[static_cast<std::size_t>(k)]) << k;
  for (Eigen::Index t = 0; t < ls.dummies.rows(); ++t) {
    const double s = ls.dummies.row(t).sum();
    EXPECT_TRUE(s == 0.0 || s == 1.0);
    EXPECT_DOUBLE_EQ(ls.normal_day(t), 1.0 - s);
  }
  EXPECT_FALSE(ls.lagged_return[0].has_value());
  for (std::size_t t = 1; t < ls.rows(); ++t) EXPECT_EQ(*ls.lagged_return[t], r.values[t - 1]);
  EXPECT_EQ(ls.returns.dates, r.dates);
}

TEST(BuildLabeled, NoEventsGivesAllNormalDays) {
  const auto days = testsupport::weekdays(2000, 2000);
  const auto r = testsupport::returns_on(days, std::vector<double>(days.size() - 1, 0.001));
  const auto ls = build_labeled(r, std::span<const TermEvent>{});
  EXPECT_EQ(ls.dummies.sum(), 0.0);
  EXPECT_EQ(ls.normal_day.sum(), static_cast<double>(r.size()));
}

TEST(BuildLabeled, WindowModeCountsMemberDays) {
  const auto days = testsupport::weekdays(2000, 2004);
  const auto r = testsupport::returns_on(days, testsupport::normal_draws(5, days.size() - 1));
  const auto ls = label_returns(r, 2);
  EXPECT_EQ(ls.mode.kind, LabelKind::Window);
  EXPECT_EQ(ls.mode.radius, 2);
  std::vector<int> expected(25, 0);
  for (const auto& w : ls.windows)
    for (const Date d : w.member_days)
      if (d >= r.dates.front()) ++expected[static_cast<std::size_t>(w.event.term.order)];
  for (int k = 1; k <= 24; ++k) EXPECT_EQ(ls.term_count(k), expected[static_cast<std::size_t>(k)]);
}

TEST(BuildLabeled, EmptySeriesIsAnError) {
  EXPECT_THROW((void)label_returns(ReturnSeries{}, 0), DataError);
}
