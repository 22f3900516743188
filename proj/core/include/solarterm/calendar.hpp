#pragma once

#include <array>
#include <chrono>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace solarterm {

using Date = std::chrono::sys_days;
using Instant = std::chrono::sys_seconds;

/// Beijing civil time offset; no historical DST.
inline constexpr std::chrono::hours kBeijingOffset{8};

inline constexpr int kMinYear = 1900;
inline constexpr int kMaxYear = 2100;
inline constexpr int kTermCount = 24;

/// One of the 24 solar terms, numbered from Xiaohan (1) to Dongzhi (24).
struct SolarTerm {
  int order = 1;

  [[nodiscard]] std::string_view name() const;
  /// (285 + 15 (order - 1)) mod 360.
  [[nodiscard]] double target_longitude() const;
};

/// Inclusive month/day range in which a term's local date usually falls.
struct TermDateRange {
  unsigned month_lo, day_lo, month_hi, day_hi;
};

/// Customary date range per term (1-based order), with the known typos in the
/// commonly printed table corrected (Xiaoman in May, Xiaoshu in July).
[[nodiscard]] const TermDateRange& customary_range(int order);

/// True when `date` lies within the customary range for `order` widened by `slack_days`.
[[nodiscard]] bool within_customary_range(int order, Date date, int slack_days = 1);

struct TermEvent {
  SolarTerm term;
  int year = 0;
  Instant instant_utc;
  std::optional<Date> trading_day;

  /// Calendar date of the instant in Beijing time.
  [[nodiscard]] Date local_date() const;
  /// Instant expressed as Beijing civil time.
  [[nodiscard]] std::chrono::local_seconds local_time() const;
  /// True when the Beijing-time instant is within an hour of midnight, where
  /// ignoring the 1986-1991 DST could move the date.
  [[nodiscard]] bool near_midnight() const;
};

struct TermWindow {
  TermEvent event;
  int radius = 0;
  std::vector<Date> member_days;
};

/// Astronomical Julian date of a UTC instant. Throws DataError outside 1900-2100.
[[nodiscard]] double julian_day(Instant utc);

/// Julian date from calendar fields (UTC). Validates the date.
[[nodiscard]] double julian_day(int year, unsigned month, unsigned day, int hour = 0, int minute = 0,
                                double second = 0.0);

/// Apparent geocentric solar ecliptic longitude in degrees [0, 360), low-precision
/// analytic theory (about 0.01 deg).
[[nodiscard]] double solar_longitude(double jd);

/// Instant at which the apparent longitude reaches the term's target in `year`.
[[nodiscard]] TermEvent term_instant(int year, int order);

/// All events in [start_year, end_year], sorted by instant.
[[nodiscard]] std::vector<TermEvent> term_calendar(int start_year, int end_year);

/// Fills trading_day with the local date when it is a trading day, otherwise clears it.
/// `trading_days` must be sorted and unique.
[[nodiscard]] std::vector<TermEvent> align_terms(std::span<const TermEvent> events,
                                                 std::span<const Date> trading_days);

/// Trading days within `radius` calendar days of each event's local date.
/// Throws DataError when windows of two events share a trading day.
[[nodiscard]] std::vector<TermWindow> window_labels(std::span<const TermEvent> events,
                                                    std::span<const Date> trading_days, int radius);

// Date helpers shared across modules.
[[nodiscard]] Date make_date(int year, unsigned month, unsigned day);
[[nodiscard]] std::string format_date(Date d);
[[nodiscard]] std::string format_local_time(std::chrono::local_seconds t);
[[nodiscard]] int year_of(Date d);

}  // namespace solarterm
