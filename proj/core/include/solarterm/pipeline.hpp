#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "solarterm/dummyreg.hpp"
#include "solarterm/igarch.hpp"
#include "solarterm/report.hpp"
#include "solarterm/returns.hpp"

namespace solarterm {

/// Listed in execution order.
enum class Analysis { Terms, Describe, Inter, FullMean, FullVol, Turn1, Turn2 };

[[nodiscard]] std::string_view to_string(Analysis a);
[[nodiscard]] Analysis parse_analysis(std::string_view s);
[[nodiscard]] std::vector<Analysis> all_analyses();

struct RunConfig {
  std::string input;
  CsvOptions csv;
  ReturnMethod method = ReturnMethod::Log;
  std::optional<std::pair<int, int>> years;
  std::vector<Analysis> analyses = all_analyses();
  PanelThresholds thresholds;
  double prune_p = 0.10;
  /// Terms whose full-fit mean dummy has p below this enter the refined mean fit.
  double refine_p = 0.10;
  std::vector<Dist> dists{Dist::Normal, Dist::StudentT, Dist::Ged};
  std::uint64_t seed = 20240101;
  bool two_step = false;
  std::vector<int> arch_lags{1, 2, 3, 4, 5, 10, 15};
  std::string out_dir = "solarterm-report";
  std::vector<Format> formats{Format::Csv, Format::Markdown, Format::Json};

  /// Throws UsageError when an invariant fails.
  void validate() const;
};

struct InputData {
  ReturnSeries returns;
  std::string source_id;
  /// SHA-256 of the parsed rows in canonical `date,value` form.
  std::string fingerprint;
  std::size_t parsed_rows = 0;
};

[[nodiscard]] std::string sha256_hex(std::string_view bytes);

/// Reads `cfg.input`, computes returns (unless a returns column is configured) and applies the year filter.
[[nodiscard]] InputData load_input(const RunConfig& cfg);

/// Same, from an in-memory price series.
[[nodiscard]] InputData prepare_input(const PriceSeries& prices, const RunConfig& cfg);

/// Runs the selected analyses in order. Stops at the first failing analysis and returns a
/// bundle marked incomplete, with the error and exit code filled in.
[[nodiscard]] ReportBundle run_pipeline(const RunConfig& cfg, const InputData& data);

/// load_input followed by run_pipeline; input errors are reported the same way.
[[nodiscard]] ReportBundle run_pipeline(const RunConfig& cfg);

}  // namespace solarterm
