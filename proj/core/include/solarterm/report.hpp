#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "solarterm/calendar.hpp"
#include "solarterm/descstats.hpp"
#include "solarterm/dummyreg.hpp"
#include "solarterm/igarch.hpp"

namespace solarterm {

enum class Format { Csv, Markdown, Json };

[[nodiscard]] std::string_view to_string(Format f);
[[nodiscard]] Format parse_format(std::string_view s);

/// "***" for p < 0.01, "**" for p < 0.05, "*" for p < 0.10, otherwise empty.
[[nodiscard]] std::string stars(double p);

struct Cell {
  std::variant<std::monostate, double, long long, std::string> value;
  /// When set, Markdown appends significance stars for this p-value.
  std::optional<double> star_p;

  Cell() = default;
  Cell(double v, std::optional<double> p = std::nullopt) : value(v), star_p(p) {}
  Cell(int v) : value(static_cast<long long>(v)) {}
  Cell(long long v) : value(v) {}
  Cell(std::string v) : value(std::move(v)) {}
  Cell(const char* v) : value(std::string(v)) {}
  Cell(std::optional<double> v) {
    if (v) value = *v;
  }
};

struct Table {
  std::string title;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<std::string> notes;
};

/// Full-precision CSV (shortest round-trip numbers, empty cells for absent values).
[[nodiscard]] std::string render_csv(const Table& t);
/// GitHub-flavoured Markdown with 4-significant-digit numbers and stars.
[[nodiscard]] std::string render_markdown(const Table& t);

/// Common report header facts.
struct ReportContext {
  std::string source_id;
  ReturnMethod method = ReturnMethod::Log;
  std::size_t n_returns = 0;
  std::string first_date, last_date;
};

struct Artifact {
  std::string stem;  // file name without extension
  std::string csv;
  std::string markdown;
  std::string json;
};

[[nodiscard]] Artifact term_calendar_artifact(const std::vector<TermEvent>& events);
[[nodiscard]] Artifact per_term_stats_artifact(const ReportContext& ctx, const std::vector<TermStatsRow>& rows);
[[nodiscard]] Artifact overall_stats_artifact(const ReportContext& ctx, const SampleStats& stats);
[[nodiscard]] Artifact histogram_artifact(const ReportContext& ctx, std::span<const double> sample, int bins = 60);
[[nodiscard]] Artifact reference_panels_artifact(const ReportContext& ctx, const std::vector<ReferencePanel>& panels);
[[nodiscard]] Artifact eba_artifact(const ReportContext& ctx, const std::vector<ReferencePanel>& panels);
[[nodiscard]] Artifact mean_fit_artifact(const ReportContext& ctx, std::string stem, std::string title,
                                         const MeanFit& fit);
[[nodiscard]] Artifact arch_test_artifact(const ReportContext& ctx, const std::vector<ArchLmRow>& rows);
[[nodiscard]] Artifact volatility_artifact(const ReportContext& ctx, std::string stem, std::string title,
                                           const VolatilityAnalysis& analysis);

struct ReportBundle {
  std::vector<Artifact> artifacts;
  /// Pretty-printed manifest JSON (config echo, fingerprint, version, warnings).
  std::string manifest;
  std::vector<std::string> warnings;
  bool complete = true;
  /// Set when an analysis failed; `exit_code` follows the CLI convention (1 usage, 2 data, 3 estimation).
  std::string failed_analysis;
  std::string error;
  int exit_code = 0;
};

/// Writes every artifact in each requested format plus manifest.json. Throws Error
/// when the directory cannot be created or a file cannot be written.
void write_bundle(const ReportBundle& bundle, const std::filesystem::path& dir, const std::vector<Format>& formats);

}  // namespace solarterm
