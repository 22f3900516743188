#include "solarterm/synth.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <nlohmann/json.hpp>
#include <random>

#include "solarterm/error.hpp"

namespace solarterm {

namespace {

using namespace std::chrono;

// Unit-scale IGARCH drift; the path is rescaled afterwards, so only its ratio to gamma matters.
constexpr double kOmegaPerGamma = 0.2;

std::vector<Date> weekdays(int first_year, int last_year) {
  std::vector<Date> out;
  for (Date d = make_date(first_year, 1, 1), end = make_date(last_year, 12, 31); d <= end; d += days{1}) {
    const weekday wd{d};
    if (wd != Saturday && wd != Sunday) out.push_back(d);
  }
  return out;
}

}  // namespace

void SynthSpec::validate() const {
  if (n_years < 1) throw UsageError(fmt::format("synth: n_years must be positive (got {})", n_years));
  if (start_year < kMinYear || start_year + n_years - 1 > kMaxYear) {
    throw UsageError(fmt::format("synth: years {}..{} outside {}-{}", start_year, start_year + n_years - 1, kMinYear,
                                 kMaxYear));
  }
  if (!(base_std > 0.0)) throw UsageError("synth: base std must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw UsageError("synth: gamma must lie in [0, 1)");
  if (!(std::abs(ar) < 1.0)) throw UsageError("synth: AR coefficient must lie in (-1, 1)");
  if (!(initial_price > 0.0)) throw UsageError("synth: initial price must be positive");
  if (variance_radius < 0 || variance_radius > 2) throw UsageError("synth: variance radius must be 0, 1 or 2");
  for (const auto& [k, v] : mean_injections) {
    if (k < 1 || k > kTermCount) throw UsageError(fmt::format("synth: term {} outside 1..24", k));
    if (!std::isfinite(v)) throw UsageError("synth: mean injection must be finite");
  }
  for (const auto& [k, f] : variance_injections) {
    if (k < 1 || k > kTermCount) throw UsageError(fmt::format("synth: term {} outside 1..24", k));
    if (!(f > 0.0) || !std::isfinite(f)) throw UsageError("synth: variance factors must be positive");
  }
}

SynthData synth_generate(const SynthSpec& spec) {
  spec.validate();
  const int last_year = spec.start_year + spec.n_years - 1;
  const auto days_all = weekdays(spec.start_year, last_year);
  const auto events = term_calendar(spec.start_year, last_year);
  const std::size_t n = days_all.size() - 1;  // returns are dated days_all[1..]

  auto row_of = [&](Date d) -> std::optional<std::size_t> {
    auto it = std::lower_bound(days_all.begin() + 1, days_all.end(), d);
    if (it == days_all.end() || *it != d) return std::nullopt;
    return static_cast<std::size_t>(it - days_all.begin() - 1);
  };

  std::vector<double> mean_shift(n, 0.0), var_factor(n, 1.0);
  for (const auto& ev : events) {
    const Date local = ev.local_date();
    if (auto it = spec.mean_injections.find(ev.term.order); it != spec.mean_injections.end()) {
      if (auto r = row_of(local)) mean_shift[*r] += it->second;
    }
    if (auto it = spec.variance_injections.find(ev.term.order); it != spec.variance_injections.end()) {
      for (int off = -spec.variance_radius; off <= spec.variance_radius; ++off) {
        if (auto r = row_of(local + days{off})) var_factor[*r] = it->second;
      }
    }
  }

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> eps(n), h_unit(n);
  const double omega = kOmegaPerGamma * spec.gamma;
  double h = 1.0;
  for (std::size_t t = 0; t < n; ++t) {
    h_unit[t] = h * var_factor[t];
    eps[t] = std::sqrt(h_unit[t]) * normal(rng);
    h = omega + spec.gamma * eps[t] * eps[t] + (1.0 - spec.gamma) * h;
  }
  double mean = 0.0;
  for (double e : eps) mean += e;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double e : eps) ss += (e - mean) * (e - mean);
  const double scale = spec.base_std / std::sqrt(ss / static_cast<double>(n - 1));

  SynthData out;
  out.spec = spec;
  out.prices.source_id = fmt::format("synth:seed={}", spec.seed);
  out.returns.method = ReturnMethod::Log;
  out.returns.trading_days = days_all;
  out.returns.dates.assign(days_all.begin() + 1, days_all.end());
  out.returns.values.resize(n);
  out.variance.resize(n);
  out.prices.rows.reserve(days_all.size());
  double price = spec.initial_price;
  out.prices.rows.push_back({days_all[0], price});
  double prev = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double r = spec.base_mean + mean_shift[t] + spec.ar * prev + scale * eps[t];
    out.returns.values[t] = r;
    out.variance[t] = scale * scale * h_unit[t];
    price *= std::exp(r);
    out.prices.rows.push_back({days_all[t + 1], price});
    prev = r;
  }
  return out;
}

void write_price_csv(std::ostream& out, const PriceSeries& prices) {
  out << "date,close\n";
  for (const auto& row : prices.rows) out << format_date(row.date) << ',' << fmt::format("{}", row.close) << '\n';
}

std::string synth_truth_json(const SynthData& data) {
  const auto& s = data.spec;
  nlohmann::ordered_json j;
  j["generator"] = "solarterm synth";
  j["seed"] = s.seed;
  j["start_year"] = s.start_year;
  j["n_years"] = s.n_years;
  j["base_mean"] = s.base_mean;
  j["base_std"] = s.base_std;
  j["ar"] = s.ar;
  j["gamma"] = s.gamma;
  j["initial_price"] = s.initial_price;
  auto& mi = j["mean_injections"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : s.mean_injections) mi[std::to_string(k)] = v;
  auto& vi = j["variance_injections"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : s.variance_injections) vi[std::to_string(k)] = v;
  j["variance_radius"] = s.variance_radius;
  j["calendar"] = "Mon-Fri, no holidays";
  j["n_prices"] = data.prices.rows.size();
  j["n_returns"] = data.returns.values.size();
  return j.dump(2) + "\n";
}

}  // namespace solarterm
