#include "solarterm/calendar.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <map>
#include <numbers>
#include <sstream>

#include "solarterm/error.hpp"

namespace solarterm {

namespace {

using namespace std::chrono;

constexpr double kUnixEpochJd = 2440587.5;
constexpr double kJ2000 = 2451545.0;
constexpr double kTropicalYear = 365.2422;

constexpr std::array<std::string_view, kTermCount> kTermNames = {
    "Xiaohan", "Dahan",  "Lichun",  "Yushui", "Jingzhe",     "Chunfen", "Qingming", "Gu'yu",
    "Lixia",   "Xiaoman", "Mangzhong", "Xiazhi", "Xiaoshu", "Dashu",   "Liqiu",    "Chushu",
    "Bailu",   "Qiufen", "Hanlu",   "Shuangjiang", "Lidong", "Xiaoxue", "Daxue",   "Dongzhi"};

constexpr std::array<TermDateRange, kTermCount> kCustomaryRanges = {{
    {1, 5, 1, 7},   {1, 20, 1, 21}, {2, 3, 2, 5},   {2, 18, 2, 20}, {3, 5, 3, 7},   {3, 20, 3, 22},
    {4, 4, 4, 6},   {4, 19, 4, 21}, {5, 5, 5, 7},   {5, 20, 5, 22}, {6, 5, 6, 7},   {6, 21, 6, 22},
    {7, 6, 7, 8},   {7, 22, 7, 24}, {8, 7, 8, 9},   {8, 22, 8, 24}, {9, 7, 9, 9},   {9, 22, 9, 24},
    {10, 8, 10, 9}, {10, 23, 10, 24}, {11, 7, 11, 8}, {11, 22, 11, 23}, {12, 6, 12, 8}, {12, 20, 12, 21},
}};

constexpr double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

double wrap360(double deg) {
  double r = std::fmod(deg, 360.0);
  return r < 0.0 ? r + 360.0 : r;
}

// Signed angular difference in (-180, 180].
double wrap180(double deg) {
  double r = wrap360(deg + 180.0) - 180.0;
  return r == -180.0 ? 180.0 : r;
}

void check_order(int order) {
  if (order < 1 || order > kTermCount) {
    throw DataError(fmt::format("solar term order {} outside 1..24", order));
  }
}

void check_year(int year) {
  if (year < kMinYear || year > kMaxYear) {
    throw DataError(fmt::format("year {} outside the supported range {}-{}", year, kMinYear, kMaxYear));
  }
}

constexpr double kMinJd = 2415020.5;   // 1900-01-01 00:00 UTC
constexpr double kMaxJd = 2488434.5;   // 2101-01-01 00:00 UTC

void check_jd(double jd) {
  if (!(jd >= kMinJd - 40.0 && jd < kMaxJd + 40.0)) {
    throw DataError(fmt::format("Julian date {} outside the validated ephemeris range", jd));
  }
}

Instant instant_from_jd(double jd) {
  const double secs = std::round((jd - kUnixEpochJd) * 86400.0);
  return Instant{seconds{static_cast<long long>(secs)}};
}

}  // namespace

std::string_view SolarTerm::name() const {
  check_order(order);
  return kTermNames[static_cast<std::size_t>(order - 1)];
}

double SolarTerm::target_longitude() const {
  check_order(order);
  return wrap360(285.0 + 15.0 * (order - 1));
}

const TermDateRange& customary_range(int order) {
  check_order(order);
  return kCustomaryRanges[static_cast<std::size_t>(order - 1)];
}

bool within_customary_range(int order, Date date, int slack_days) {
  const auto& r = customary_range(order);
  const year_month_day ymd{date};
  const Date lo = sys_days{ymd.year() / month{r.month_lo} / day{r.day_lo}} - days{slack_days};
  const Date hi = sys_days{ymd.year() / month{r.month_hi} / day{r.day_hi}} + days{slack_days};
  return date >= lo && date <= hi;
}

Date TermEvent::local_date() const { return floor<days>(instant_utc + kBeijingOffset); }

local_seconds TermEvent::local_time() const {
  return local_seconds{(instant_utc + kBeijingOffset).time_since_epoch()};
}

bool TermEvent::near_midnight() const {
  const auto lt = local_time();
  const auto tod = lt - floor<days>(lt);
  return tod < hours{1} || tod >= hours{23};
}

Date make_date(int year, unsigned month, unsigned day) {
  const year_month_day ymd{std::chrono::year{year} / std::chrono::month{month} / std::chrono::day{day}};
  if (!ymd.ok()) {
    throw DataError(fmt::format("invalid calendar date {:04}-{:02}-{:02}", year, month, day));
  }
  return sys_days{ymd};
}

int year_of(Date d) { return static_cast<int>(year_month_day{d}.year()); }

std::string format_date(Date d) {
  const year_month_day ymd{d};
  return fmt::format("{:04}-{:02}-{:02}", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                     static_cast<unsigned>(ymd.day()));
}

std::string format_local_time(local_seconds t) {
  const auto day_start = floor<days>(t);
  const year_month_day ymd{sys_days{day_start.time_since_epoch()}};
  const hh_mm_ss hms{t - day_start};
  return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}+08:00", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), hms.hours().count(),
                     hms.minutes().count(), hms.seconds().count());
}

double julian_day(Instant utc) {
  check_year(year_of(floor<days>(utc)));
  return kUnixEpochJd + static_cast<double>(utc.time_since_epoch().count()) / 86400.0;
}

double julian_day(int year, unsigned month, unsigned day, int hour, int minute, double second) {
  check_year(year);
  const Date d = make_date(year, month, day);
  if (hour < 0 || hour > 23 || minute < 0 || minute > 59 || second < 0.0 || second >= 61.0) {
    throw DataError(fmt::format("invalid time of day {:02}:{:02}:{}", hour, minute, second));
  }
  return kUnixEpochJd + static_cast<double>(d.time_since_epoch().count()) +
         (hour * 3600.0 + minute * 60.0 + second) / 86400.0;
}

double solar_longitude(double jd) {
  check_jd(jd);
  const double t = (jd - kJ2000) / 36525.0;
  const double mean_lon = 280.46646 + 36000.76983 * t + 0.0003032 * t * t;
  const double anomaly = deg2rad(357.52911 + 35999.05029 * t - 0.0001537 * t * t);
  const double center = (1.914602 - 0.004817 * t - 0.000014 * t * t) * std::sin(anomaly) +
                        (0.019993 - 0.000101 * t) * std::sin(2.0 * anomaly) + 0.000289 * std::sin(3.0 * anomaly);
  const double omega = deg2rad(125.04 - 1934.136 * t);
  const double apparent = mean_lon + center - 0.00569 - 0.00478 * std::sin(omega);
  return wrap360(apparent);
}

TermEvent term_instant(int year, int order) {
  check_year(year);
  const SolarTerm term{order};
  const double target = term.target_longitude();

  // Xiaohan (order 1) falls around Jan 5-6; each term advances ~1/24 of a tropical year.
  const double predicted = julian_day(year, 1, 1) + 5.5 + (order - 1) * kTropicalYear / kTermCount;
  double lo = predicted - 20.0;
  double hi = predicted + 20.0;
  auto offset = [&](double jd) { return wrap180(solar_longitude(jd) - target); };

  double f_lo = offset(lo);
  const double f_hi = offset(hi);
  if (!(f_lo < 0.0 && f_hi > 0.0)) {
    throw EstimationError(fmt::format("failed to bracket solar longitude {} deg for {} term {} ({} .. {})", target,
                                      year, order, f_lo, f_hi));
  }
  // ~1e-6 day is well inside the one-minute requirement.
  while (hi - lo > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = offset(mid);
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }

  TermEvent ev;
  ev.term = term;
  ev.year = year;
  ev.instant_utc = instant_from_jd(0.5 * (lo + hi));
  return ev;
}

std::vector<TermEvent> term_calendar(int start_year, int end_year) {
  check_year(start_year);
  check_year(end_year);
  if (start_year > end_year) {
    throw DataError(fmt::format("start year {} after end year {}", start_year, end_year));
  }
  std::vector<TermEvent> out;
  out.reserve(static_cast<std::size_t>(kTermCount * (end_year - start_year + 1)));
  for (int y = start_year; y <= end_year; ++y) {
    for (int k = 1; k <= kTermCount; ++k) {
      out.push_back(term_instant(y, k));
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const TermEvent& a, const TermEvent& b) { return a.instant_utc < b.instant_utc; });
  return out;
}

std::vector<TermEvent> align_terms(std::span<const TermEvent> events, std::span<const Date> trading_days) {
  std::vector<TermEvent> out(events.begin(), events.end());
  for (auto& ev : out) {
    const Date d = ev.local_date();
    if (std::binary_search(trading_days.begin(), trading_days.end(), d)) {
      ev.trading_day = d;
    } else {
      ev.trading_day.reset();
    }
  }
  return out;
}

std::vector<TermWindow> window_labels(std::span<const TermEvent> events, std::span<const Date> trading_days,
                                      int radius) {
  if (radius < 0 || radius > 2) {
    throw UsageError(fmt::format("window radius must be 0, 1 or 2 (got {})", radius));
  }
  std::vector<TermWindow> out;
  out.reserve(events.size());
  std::map<Date, std::size_t> owner;
  for (const auto& ev : events) {
    TermWindow w;
    w.event = ev;
    w.radius = radius;
    const Date centre = ev.local_date();
    auto it = std::lower_bound(trading_days.begin(), trading_days.end(), centre - days{radius});
    for (; it != trading_days.end() && *it <= centre + days{radius}; ++it) {
      w.member_days.push_back(*it);
    }
    w.event.trading_day = std::binary_search(trading_days.begin(), trading_days.end(), centre)
                              ? std::optional<Date>{centre}
                              : std::nullopt;
    for (const Date d : w.member_days) {
      auto [pos, inserted] = owner.emplace(d, out.size());
      if (!inserted) {
        const auto& other = out[pos->second].event;
        throw DataError(fmt::format("turn-of-term windows overlap on {}: term {} ({}) and term {} ({})",
                                    format_date(d), other.term.order, other.year, ev.term.order, ev.year));
      }
    }
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace solarterm
