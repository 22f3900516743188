#pragma once

#include <chrono>
#include <cstdint>
#include <random>
#include <vector>

#include "solarterm/calendar.hpp"
#include "solarterm/returns.hpp"

namespace testsupport {

using solarterm::Date;

inline std::vector<Date> weekdays(int first_year, int last_year) {
  using namespace std::chrono;
  std::vector<Date> out;
  for (Date d = solarterm::make_date(first_year, 1, 1), end = solarterm::make_date(last_year, 12, 31); d <= end;
       d += days{1}) {
    const weekday wd{d};
    if (wd != Saturday && wd != Sunday) out.push_back(d);
  }
  return out;
}

/// Returns dated by `days[1..]` with `days` as the trading calendar.
inline solarterm::ReturnSeries returns_on(const std::vector<Date>& days, std::vector<double> values) {
  solarterm::ReturnSeries r;
  r.dates.assign(days.begin() + 1, days.begin() + 1 + static_cast<std::ptrdiff_t>(values.size()));
  r.values = std::move(values);
  r.trading_days.assign(days.begin(), days.begin() + 1 + static_cast<std::ptrdiff_t>(r.values.size()));
  return r;
}

inline std::vector<double> normal_draws(std::uint64_t seed, std::size_t n, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, sd);
  std::vector<double> out(n);
  for (auto& x : out) x = z(rng);
  return out;
}

/// 32-bit LCG (Numerical Recipes constants); reproducible in any language for pinned oracles.
inline std::vector<double> lcg_uniform(std::uint64_t seed, std::size_t n) {
  std::vector<double> out;
  std::uint64_t x = seed;
  for (std::size_t i = 0; i < n; ++i) {
    x = (1664525ULL * x + 1013904223ULL) % 4294967296ULL;
    out.push_back(static_cast<double>(x) / 4294967296.0);
  }
  return out;
}

}  // namespace testsupport
