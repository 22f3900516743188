#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "solarterm/calendar.hpp"
#include "solarterm/error.hpp"
#include "support.hpp"

using namespace solarterm;
using namespace std::chrono;

namespace {

// Fliegel & Van Flandern integer day number, independent of the library's epoch arithmetic.
long long julian_day_number(long long y, long long m, long long d) {
  return (1461 * (y + 4800 + (m - 14) / 12)) / 4 + (367 * (m - 2 - 12 * ((m - 14) / 12))) / 12 -
         (3 * ((y + 4900 + (m - 14) / 12) / 100)) / 4 + d - 32075;
}

double angle_diff(double a, double b) {
  double d = std::fmod(a - b + 540.0, 360.0) - 180.0;
  return std::abs(d);
}

}  // namespace

TEST(JulianDay, J2000Epoch) { EXPECT_DOUBLE_EQ(julian_day(2000, 1, 1, 12), 2451545.0); }

TEST(JulianDay, MatchesIntegerDayCount) {
  EXPECT_DOUBLE_EQ(julian_day(1995, 1, 1), 2449718.5);
  for (auto [y, m, d] : {std::tuple{1900, 3, 1}, {1970, 1, 1}, {2024, 2, 29}, {2100, 12, 31}}) {
    EXPECT_DOUBLE_EQ(julian_day(y, static_cast<unsigned>(m), static_cast<unsigned>(d)),
                     static_cast<double>(julian_day_number(y, m, d)) - 0.5);
  }
}

TEST(JulianDay, LeapDayIsBetweenNeighbours) {
  const double feb28 = julian_day(2000, 2, 28, 12);
  const double feb29 = julian_day(2000, 2, 29, 12);
  const double mar1 = julian_day(2000, 3, 1, 12);
  EXPECT_LT(feb28, feb29);
  EXPECT_LT(feb29, mar1);
}

TEST(JulianDay, InstantOverloadAgrees) {
  const Instant t = sys_days{2010y / 7 / 4} + hours{18} + minutes{30};
  EXPECT_DOUBLE_EQ(julian_day(t), julian_day(2010, 7, 4, 18, 30));
}

TEST(JulianDay, RejectsOutOfRangeAndInvalidDates) {
  EXPECT_THROW((void)julian_day(1899, 12, 31), DataError);
  EXPECT_THROW((void)julian_day(2101, 1, 1), DataError);
  EXPECT_THROW((void)julian_day(2001, 2, 29), DataError);
  EXPECT_THROW((void)julian_day(2000, 13, 1), DataError);
}

TEST(SolarLongitude, J2000Value) {
  // Series evaluated independently at T = 0.
  EXPECT_NEAR(solar_longitude(2451545.0), 280.3725548788, 1e-8);
}

TEST(SolarLongitude, March2000Equinox) {
  // Published instant of the March 2000 equinox: 2000-03-20 07:35 UTC.
  EXPECT_LT(angle_diff(solar_longitude(julian_day(2000, 3, 20, 7, 35)), 0.0), 0.01);
}

TEST(SolarLongitude, DailyMotion) {
  for (double jd = 2415100.0; jd < 2488000.0; jd += 733.3) {
    double step = solar_longitude(jd + 1.0) - solar_longitude(jd);
    if (step < 0) step += 360.0;
    EXPECT_NEAR(step, 0.9856, 0.05) << "jd " << jd;
  }
}

TEST(SolarLongitude, RejectsOutOfRange) {
  EXPECT_THROW((void)solar_longitude(2000000.0), DataError);
  EXPECT_THROW((void)solar_longitude(2600000.0), DataError);
}

TEST(SolarTerm, TargetLongitudes) {
  EXPECT_DOUBLE_EQ(SolarTerm{1}.target_longitude(), 285.0);
  EXPECT_DOUBLE_EQ(SolarTerm{6}.target_longitude(), 0.0);
  EXPECT_DOUBLE_EQ(SolarTerm{12}.target_longitude(), 90.0);
  EXPECT_DOUBLE_EQ(SolarTerm{18}.target_longitude(), 180.0);
  EXPECT_DOUBLE_EQ(SolarTerm{24}.target_longitude(), 270.0);
  for (int k = 1; k <= kTermCount; ++k) {
    const double t = SolarTerm{k}.target_longitude();
    EXPECT_GE(t, 0.0);
    EXPECT_LT(t, 360.0);
  }
  EXPECT_EQ(SolarTerm{1}.name(), "Xiaohan");
  EXPECT_EQ(SolarTerm{24}.name(), "Dongzhi");
  EXPECT_THROW((void)SolarTerm{25}.name(), DataError);
}

TEST(TermInstant, SpringEquinox2000) {
  const auto ev = term_instant(2000, 6);
  EXPECT_EQ(ev.local_date(), make_date(2000, 3, 20));
  EXPECT_TRUE(within_customary_range(6, ev.local_date(), 0));
  // 2000-03-20 07:35 UTC, the published equinox, to within a few minutes.
  const auto published = sys_days{2000y / 3 / 20} + hours{7} + minutes{35};
  EXPECT_LT(std::abs((ev.instant_utc - published).count()), 5 * 60);
}

TEST(TermInstant, WinterSolstice2022) {
  const auto d = term_instant(2022, 24).local_date();
  EXPECT_TRUE(d == make_date(2022, 12, 21) || d == make_date(2022, 12, 22)) << format_date(d);
}

TEST(TermInstant, SummerSolsticeTargetsNinetyDegrees) {
  const auto ev = term_instant(2015, 12);
  EXPECT_DOUBLE_EQ(ev.term.target_longitude(), 90.0);
  EXPECT_LT(angle_diff(solar_longitude(julian_day(ev.instant_utc)), 90.0), 5e-4);
}

TEST(TermInstant, BackSubstitutionEveryYear) {
  double worst = 0.0;
  for (int y = kMinYear; y <= kMaxYear; ++y) {
    Instant prev{};
    for (int k = 1; k <= kTermCount; ++k) {
      const auto ev = term_instant(y, k);
      worst = std::max(worst, angle_diff(solar_longitude(julian_day(ev.instant_utc)), ev.term.target_longitude()));
      if (k > 1) EXPECT_LT(prev, ev.instant_utc) << y << " term " << k;
      prev = ev.instant_utc;
    }
  }
  EXPECT_LT(worst, 5e-4);
}

TEST(TermInstant, RejectsBadArguments) {
  EXPECT_THROW((void)term_instant(1800, 1), DataError);
  EXPECT_THROW((void)term_instant(2000, 0), DataError);
}

TEST(TermCalendar, CountsAndOrder) {
  const auto cal = term_calendar(1995, 2022);
  ASSERT_EQ(cal.size(), 672u);
  for (std::size_t i = 1; i < cal.size(); ++i) {
    EXPECT_LT(cal[i - 1].instant_utc, cal[i].instant_utc);
    const auto gap = duration_cast<hours>(cal[i].instant_utc - cal[i - 1].instant_utc).count() / 24.0;
    EXPECT_GE(gap, 14.0);
    EXPECT_LE(gap, 17.0);
  }
  for (const auto& ev : cal) {
    EXPECT_TRUE(within_customary_range(ev.term.order, ev.local_date(), 1))
        << ev.year << " term " << ev.term.order << " " << format_date(ev.local_date());
  }
  const auto one = term_calendar(2000, 2000);
  std::set<int> orders;
  for (const auto& ev : one) orders.insert(ev.term.order);
  EXPECT_EQ(one.size(), 24u);
  EXPECT_EQ(orders.size(), 24u);
  EXPECT_THROW((void)term_calendar(2001, 2000), DataError);
}

TEST(AlignTerms, WeekendTermsAreDroppedNotShifted) {
  const auto days = testsupport::weekdays(2000, 2003);
  const auto aligned = align_terms(term_calendar(2000, 2003), days);
  int weekend = 0;
  for (const auto& ev : aligned) {
    const weekday wd{ev.local_date()};
    if (wd == Saturday || wd == Sunday) {
      ++weekend;
      EXPECT_FALSE(ev.trading_day.has_value());
    } else {
      ASSERT_TRUE(ev.trading_day.has_value());
      EXPECT_EQ(*ev.trading_day, ev.local_date());
    }
  }
  EXPECT_GT(weekend, 0);
}

TEST(AlignTerms, Idempotent) {
  const auto days = testsupport::weekdays(2010, 2011);
  const auto once = align_terms(term_calendar(2010, 2011), days);
  const auto twice = align_terms(once, days);
  ASSERT_EQ(once.size(), twice.size());
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_EQ(once[i].trading_day, twice[i].trading_day);
}

TEST(WindowLabels, RadiusZeroMatchesAlignment) {
  const auto days = testsupport::weekdays(2005, 2006);
  const auto events = term_calendar(2005, 2006);
  const auto aligned = align_terms(events, days);
  const auto windows = window_labels(events, days, 0);
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (aligned[i].trading_day) {
      ASSERT_EQ(windows[i].member_days.size(), 1u);
      EXPECT_EQ(windows[i].member_days[0], *aligned[i].trading_day);
    } else {
      EXPECT_TRUE(windows[i].member_days.empty());
    }
  }
}

TEST(WindowLabels, MondayTermDropsSunday) {
  const auto days = testsupport::weekdays(1995, 2022);
  const auto events = term_calendar(1995, 2022);
  const auto windows = window_labels(events, days, 1);
  bool found = false;
  for (const auto& w : windows) {
    if (weekday{w.event.local_date()} != Monday) continue;
    found = true;
    ASSERT_EQ(w.member_days.size(), 2u);
    EXPECT_EQ(w.member_days[0], w.event.local_date());
    EXPECT_EQ(w.member_days[1], w.event.local_date() + std::chrono::days{1});
  }
  EXPECT_TRUE(found);
}

TEST(WindowLabels, SizeBoundAndMonotoneInRadius) {
  const auto days = testsupport::weekdays(1995, 2022);
  const auto events = term_calendar(1995, 2022);
  const auto w0 = window_labels(events, days, 0);
  const auto w1 = window_labels(events, days, 1);
  const auto w2 = window_labels(events, days, 2);
  for (std::size_t i = 0; i < events.size(); ++i) {
    EXPECT_LE(w2[i].member_days.size(), 5u);
    EXPECT_TRUE(std::includes(w1[i].member_days.begin(), w1[i].member_days.end(), w0[i].member_days.begin(),
                              w0[i].member_days.end()));
    EXPECT_TRUE(std::includes(w2[i].member_days.begin(), w2[i].member_days.end(), w1[i].member_days.begin(),
                              w1[i].member_days.end()));
    for (const Date d : w2[i].member_days) {
      EXPECT_LE(std::abs((d - w2[i].event.local_date()).count()), 2);
    }
  }
}

TEST(WindowLabels, OverlapIsAnError) {
  const auto days = testsupport::weekdays(2000, 2000);
  auto a = term_instant(2000, 6);
  auto b = a;
  b.term = SolarTerm{7};
  b.instant_utc += hours{24 * 2};
  const std::vector<TermEvent> events{a, b};
  EXPECT_NO_THROW((void)window_labels(events, days, 0));
  try {
    (void)window_labels(events, days, 2);
    FAIL() << "expected overlap error";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("overlap"), std::string::npos);
  }
  EXPECT_THROW((void)window_labels(events, days, 3), UsageError);
}

TEST(TermEvent, LocalTimeFormatting) {
  TermEvent ev;
  ev.instant_utc = sys_days{2000y / 3 / 20} + hours{7} + minutes{35};
  EXPECT_EQ(format_local_time(ev.local_time()), "2000-03-20T15:35:00+08:00");
  EXPECT_FALSE(ev.near_midnight());
  ev.instant_utc = sys_days{2000y / 3 / 20} + hours{15} + minutes{30};
  EXPECT_TRUE(ev.near_midnight());
  EXPECT_EQ(ev.local_date(), make_date(2000, 3, 20));
}
