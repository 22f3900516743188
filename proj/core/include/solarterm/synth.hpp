#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>

#include "solarterm/returns.hpp"

namespace solarterm {

/// Seeded synthetic market with known solar-term effects.
struct SynthSpec {
  int start_year = 1995;
  int n_years = 28;
  double base_mean = 0.0;
  double base_std = 0.015;
  double ar = 0.0;
  /// IGARCH reaction coefficient; 0 gives iid normal innovations.
  double gamma = 0.0;
  /// term -> additive return on the term day.
  std::map<int, double> mean_injections;
  /// term -> multiplicative variance factor on the term's window days.
  std::map<int, double> variance_injections;
  int variance_radius = 1;
  double initial_price = 100.0;
  std::uint64_t seed = 1;

  /// Throws UsageError when an invariant fails.
  void validate() const;
};

struct SynthData {
  SynthSpec spec;
  PriceSeries prices;
  /// Returns exactly as simulated (before the price round trip).
  ReturnSeries returns;
  /// Conditional variance on the output scale, one per return.
  std::vector<double> variance;
};

/// Mon-Fri calendar, R_t = mean + sum inj_k ST_kt + r R_{t-1} + e_t, e_t ~ N(0, h_t) with
/// h_t an IGARCH path scaled so the innovations have sample std `base_std`.
[[nodiscard]] SynthData synth_generate(const SynthSpec& spec);

/// `date,close` with shortest round-trip number formatting.
void write_price_csv(std::ostream& out, const PriceSeries& prices);

/// Ground-truth sidecar as a JSON document.
[[nodiscard]] std::string synth_truth_json(const SynthData& data);

}  // namespace solarterm
