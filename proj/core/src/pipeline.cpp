#include "solarterm/pipeline.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <memory>
#include <nlohmann/json.hpp>

#include "solarterm/calendar.hpp"
#include "solarterm/descstats.hpp"
#include "solarterm/error.hpp"

#ifndef SOLARTERM_VERSION
#define SOLARTERM_VERSION "0.0.0"
#endif

namespace solarterm {

using json = nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, 7> kAnalysisNames = {"terms",    "describe", "inter", "full-mean",
                                                            "full-vol", "turn1",    "turn2"};

std::string canonical_text(const std::vector<Date>& dates, const std::vector<double>& values, std::string_view col) {
  std::string out = fmt::format("date,{}\n", col);
  for (std::size_t i = 0; i < dates.size(); ++i) out += fmt::format("{},{}\n", format_date(dates[i]), values[i]);
  return out;
}

bool in_years(Date d, const std::optional<std::pair<int, int>>& years) {
  if (!years) return true;
  const int y = year_of(d);
  return y >= years->first && y <= years->second;
}

std::string hint_for(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e)) return "check the command-line options or config file (see --help)";
  if (dynamic_cast<const DataError*>(&e)) {
    return "check the input columns, date format and year range; the analysis may need a longer sample";
  }
  return "try a different --seed, --two-step, or drop the failing distribution with --dist";
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e)) return 1;
  if (dynamic_cast<const DataError*>(&e)) return 2;
  return 3;
}

json config_json(const RunConfig& cfg) {
  json c;
  c["input"] = cfg.input;
  c["date_col"] = cfg.csv.date_col;
  c["close_col"] = cfg.csv.close_col;
  c["returns_col"] = cfg.csv.returns_col ? json(*cfg.csv.returns_col) : json(nullptr);
  c["date_format"] = cfg.csv.date_format;
  c["return_method"] = cfg.csv.returns_col ? "precomputed" : std::string(to_string(cfg.method));
  c["years"] = cfg.years ? json(fmt::format("{}:{}", cfg.years->first, cfg.years->second)) : json(nullptr);
  json an = json::array();
  for (auto a : cfg.analyses) an.push_back(to_string(a));
  c["analyses"] = std::move(an);
  c["ref_p"] = cfg.thresholds.reference_p;
  c["display_p"] = cfg.thresholds.display_p;
  c["watch_p"] = cfg.thresholds.watchlist_p;
  c["prune_p"] = cfg.prune_p;
  c["refine_p"] = cfg.refine_p;
  json ds = json::array();
  for (auto d : cfg.dists) ds.push_back(to_string(d));
  c["dists"] = std::move(ds);
  c["seed"] = cfg.seed;
  c["two_step"] = cfg.two_step;
  c["arch_lags"] = cfg.arch_lags;
  json fs = json::array();
  for (auto f : cfg.formats) fs.push_back(to_string(f));
  c["formats"] = std::move(fs);
  return c;
}

void check_threshold(double p, std::string_view name) {
  if (!(p > 0.0 && p < 1.0)) throw UsageError(fmt::format("{} must lie in (0, 1) (got {})", name, p));
}

}  // namespace

std::string_view to_string(Analysis a) { return kAnalysisNames[static_cast<std::size_t>(a)]; }

Analysis parse_analysis(std::string_view s) {
  for (std::size_t i = 0; i < kAnalysisNames.size(); ++i)
    if (kAnalysisNames[i] == s) return static_cast<Analysis>(i);
  throw UsageError(fmt::format("unknown analysis '{}' (expected one of {})", s, fmt::join(kAnalysisNames, ", ")));
}

std::vector<Analysis> all_analyses() {
  return {Analysis::Terms,   Analysis::Describe, Analysis::Inter, Analysis::FullMean,
          Analysis::FullVol, Analysis::Turn1,    Analysis::Turn2};
}

void RunConfig::validate() const {
  if (years) {
    const auto [a, b] = *years;
    if (a < kMinYear || b > kMaxYear || a > b) {
      throw UsageError(fmt::format("year range {}:{} must satisfy {} <= A <= B <= {}", a, b, kMinYear, kMaxYear));
    }
  }
  check_threshold(thresholds.reference_p, "reference p");
  check_threshold(thresholds.display_p, "display p");
  check_threshold(thresholds.watchlist_p, "watchlist p");
  check_threshold(prune_p, "prune p");
  check_threshold(refine_p, "refine p");
  if (analyses.empty()) throw UsageError("select at least one analysis");
  if (dists.empty()) throw UsageError("select at least one error distribution");
  if (formats.empty()) throw UsageError("select at least one output format");
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

InputData prepare_input(const PriceSeries& prices, const RunConfig& cfg) {
  PriceSeries kept;
  kept.source_id = prices.source_id;
  for (const auto& r : prices.rows)
    if (in_years(r.date, cfg.years)) kept.rows.push_back(r);
  InputData out;
  out.source_id = prices.source_id;
  out.parsed_rows = kept.rows.size();
  std::vector<Date> d;
  std::vector<double> v;
  for (const auto& r : kept.rows) {
    d.push_back(r.date);
    v.push_back(r.close);
  }
  out.fingerprint = sha256_hex(canonical_text(d, v, "close"));
  out.returns = compute_returns(kept, cfg.method);
  return out;
}

InputData load_input(const RunConfig& cfg) {
  if (cfg.input.empty()) throw UsageError("no input file given (--input)");
  std::ifstream file;
  std::istream* in = &std::cin;
  if (cfg.input != "-") {
    file.open(cfg.input, std::ios::binary);
    if (!file) throw DataError(fmt::format("cannot open input file '{}'", cfg.input));
    in = &file;
  }
  if (!cfg.csv.returns_col) return prepare_input(parse_price_csv(*in, cfg.csv, cfg.input), cfg);

  auto all = parse_returns_csv(*in, cfg.csv);
  InputData out;
  out.source_id = cfg.input;
  out.returns.method = ReturnMethod::Precomputed;
  for (std::size_t i = 0; i < all.dates.size(); ++i) {
    if (!in_years(all.dates[i], cfg.years)) continue;
    out.returns.dates.push_back(all.dates[i]);
    out.returns.values.push_back(all.values[i]);
  }
  out.returns.trading_days = out.returns.dates;
  out.parsed_rows = out.returns.dates.size();
  if (out.returns.values.empty()) throw DataError("no return rows inside the selected year range");
  out.fingerprint = sha256_hex(canonical_text(out.returns.dates, out.returns.values, "return"));
  return out;
}

ReportBundle run_pipeline(const RunConfig& cfg, const InputData& data) {
  cfg.validate();
  ReportBundle bundle;
  json manifest;
  manifest["software"] = {{"name", "solarterm"}, {"version", SOLARTERM_VERSION}};
  manifest["config"] = config_json(cfg);
  manifest["input"] = {{"source", data.source_id},
                       {"fingerprint_sha256", data.fingerprint},
                       {"parsed_rows", data.parsed_rows},
                       {"returns", data.returns.size()}};
  json analyses = json::array();

  const auto& r = data.returns;
  ReportContext ctx;
  ctx.source_id = data.source_id;
  ctx.method = r.method;
  ctx.n_returns = r.size();
  if (r.size() > 0) {
    ctx.first_date = format_date(r.dates.front());
    ctx.last_date = format_date(r.dates.back());
  }

  std::unique_ptr<LabeledSeries> term_days;
  auto labeled = [&]() -> const LabeledSeries& {
    if (!term_days) term_days = std::make_unique<LabeledSeries>(label_returns(r, 0));
    return *term_days;
  };
  auto garch_base = [&](Analysis a) {
    GarchOptions o;
    o.two_step = cfg.two_step;
    o.seed = cfg.seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(a) + 1);
    return o;
  };
  auto note_fits = [&](const VolatilityAnalysis& va, std::string_view label) {
    for (const auto& pr : va.per_dist) {
      for (const auto& w : pr.fit.warnings) {
        bundle.warnings.push_back(fmt::format("{} ({}): {}", label, to_string(pr.fit.dist), w));
      }
    }
  };

  std::vector<Analysis> order = cfg.analyses;
  std::sort(order.begin(), order.end());
  order.erase(std::unique(order.begin(), order.end()), order.end());

  for (Analysis a : order) {
    const std::size_t first_artifact = bundle.artifacts.size();
    try {
      switch (a) {
        case Analysis::Terms: {
          if (r.size() == 0) throw DataError("no returns to span a calendar");
          const auto& days = r.trading_days.empty() ? r.dates : r.trading_days;
          const auto events = align_terms(term_calendar(year_of(days.front()), year_of(days.back())), days);
          const auto n_near = std::count_if(events.begin(), events.end(), [](const auto& e) { return e.near_midnight(); });
          if (n_near > 0) {
            bundle.warnings.push_back(fmt::format(
                "terms: {} term instant(s) within one hour of Beijing midnight; their date depends on the UTC+8 "
                "convention",
                n_near));
          }
          bundle.artifacts.push_back(term_calendar_artifact(events));
          break;
        }
        case Analysis::Describe: {
          const auto rows = per_term_stats(labeled());
          for (const auto& row : rows) {
            if (row.flagged) bundle.warnings.push_back(fmt::format("describe: term {}: {}", row.order, row.note));
          }
          bundle.artifacts.push_back(per_term_stats_artifact(ctx, rows));
          bundle.artifacts.push_back(overall_stats_artifact(ctx, describe(r.values)));
          bundle.artifacts.push_back(histogram_artifact(ctx, r.values));
          break;
        }
        case Analysis::Inter: {
          const auto panels = significant_panels(labeled(), cfg.thresholds);
          if (!panels.empty() && !panels.front().ref.absent_terms.empty()) {
            bundle.warnings.push_back(fmt::format("inter: terms without trading-day observations (columns dropped): {}",
                                                  fmt::join(panels.front().ref.absent_terms, ", ")));
          }
          for (const auto& p : panels) {
            if (!p.eba) bundle.warnings.push_back(fmt::format("inter: panel {} EBA unavailable: {}", p.ref.reference, p.eba_error));
          }
          bundle.artifacts.push_back(reference_panels_artifact(ctx, panels));
          bundle.artifacts.push_back(eba_artifact(ctx, panels));
          break;
        }
        case Analysis::FullMean: {
          const auto full = ar1_dummy_fit(labeled());
          if (!full.dropped_terms.empty()) {
            bundle.warnings.push_back(
                fmt::format("full-mean: terms without observations (columns dropped): {}", fmt::join(full.dropped_terms, ", ")));
          }
          std::vector<int> keep;
          for (std::size_t j = 0; j < full.dummy_terms.size(); ++j) {
            if (full.ols.p(static_cast<Eigen::Index>(j + 2)) < cfg.refine_p) keep.push_back(full.dummy_terms[j]);
          }
          const auto refined = refined_mean_fit(labeled(), keep);
          std::vector<int> lags;
          for (int q : cfg.arch_lags)
            if (full.residuals().size() > q + 1) lags.push_back(q);
          bundle.artifacts.push_back(mean_fit_artifact(ctx, "table5_mean_level", "Full sample, mean level", full));
          bundle.artifacts.push_back(
              mean_fit_artifact(ctx, "table6_refined_mean_level", "Refined solar terms, mean level", refined));
          bundle.artifacts.push_back(arch_test_artifact(ctx, arch_lm_test(full.residuals(), lags)));
          break;
        }
        case Analysis::FullVol: {
          const auto va = volatility_analysis(labeled(), cfg.dists, garch_base(a), cfg.prune_p);
          note_fits(va, "full-vol");
          bundle.artifacts.push_back(volatility_artifact(ctx, "table8_volatility_level",
                                                         "Refined solar terms, volatility level", va));
          break;
        }
        case Analysis::Turn1:
        case Analysis::Turn2: {
          const int radius = a == Analysis::Turn1 ? 1 : 2;
          const auto windows = label_returns(r, radius);
          const auto va = turn_of_term_fit(windows, cfg.dists, garch_base(a), cfg.prune_p);
          note_fits(va, to_string(a));
          bundle.artifacts.push_back(volatility_artifact(
              ctx, radius == 1 ? "table9_turn_of_term_r1" : "table10_turn_of_term_r2",
              fmt::format("Turn-of-term effect ({}-day range), volatility level", radius), va));
          break;
        }
      }
      json entry;
      entry["analysis"] = to_string(a);
      entry["status"] = "ok";
      json stems = json::array();
      for (std::size_t i = first_artifact; i < bundle.artifacts.size(); ++i) stems.push_back(bundle.artifacts[i].stem);
      entry["artifacts"] = std::move(stems);
      analyses.push_back(std::move(entry));
    } catch (const std::exception& e) {
      bundle.artifacts.resize(first_artifact);
      bundle.complete = false;
      bundle.failed_analysis = std::string(to_string(a));
      bundle.error = fmt::format("{}: {} (hint: {})", to_string(a), e.what(), hint_for(e));
      bundle.exit_code = exit_code_for(e);
      analyses.push_back({{"analysis", to_string(a)}, {"status", "failed"}, {"error", bundle.error}});
      break;
    }
  }

  manifest["analyses"] = std::move(analyses);
  manifest["complete"] = bundle.complete;
  if (!bundle.complete) manifest["error"] = bundle.error;
  manifest["warnings"] = bundle.warnings;
  bundle.manifest = manifest.dump(2) + "\n";
  return bundle;
}

ReportBundle run_pipeline(const RunConfig& cfg) {
  cfg.validate();
  InputData data;
  try {
    data = load_input(cfg);
  } catch (const std::exception& e) {
    ReportBundle bundle;
    bundle.complete = false;
    bundle.failed_analysis = "input";
    bundle.error = fmt::format("input: {} (hint: {})", e.what(), hint_for(e));
    bundle.exit_code = exit_code_for(e);
    json manifest;
    manifest["software"] = {{"name", "solarterm"}, {"version", SOLARTERM_VERSION}};
    manifest["config"] = config_json(cfg);
    manifest["complete"] = false;
    manifest["error"] = bundle.error;
    bundle.manifest = manifest.dump(2) + "\n";
    return bundle;
  }
  return run_pipeline(cfg, data);
}

}  // namespace solarterm
