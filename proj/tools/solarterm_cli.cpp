// solarterm: solar-term calendar anomaly analyses from a daily price CSV.

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "solarterm/error.hpp"
#include "solarterm/pipeline.hpp"
#include "solarterm/synth.hpp"

namespace {

using namespace solarterm;

std::pair<int, int> parse_years(const std::string& s) {
  const auto colon = s.find(':');
  try {
    if (colon == std::string::npos) throw std::invalid_argument("missing ':'");
    return {std::stoi(s.substr(0, colon)), std::stoi(s.substr(colon + 1))};
  } catch (const std::exception&) {
    throw UsageError(fmt::format("--years expects A:B (got '{}')", s));
  }
}

std::map<int, double> parse_injections(const std::vector<std::string>& items, std::string_view flag) {
  std::map<int, double> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    try {
      if (eq == std::string::npos) throw std::invalid_argument("missing '='");
      out[std::stoi(item.substr(0, eq))] = std::stod(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw UsageError(fmt::format("{} expects TERM=VALUE (got '{}')", flag, item));
    }
  }
  return out;
}

struct GlobalFlags {
  std::string input;
  std::string date_col = "date";
  std::string close_col = "close";
  std::string returns_col;
  std::string date_format = "%Y-%m-%d";
  std::string return_method = "log";
  std::string years;
  std::vector<std::string> dists{"normal", "t", "ged"};
  double prune_p = 0.10;
  double ref_p = 0.10;
  double display_p = 0.10;
  double watch_p = 0.25;
  double refine_p = 0.10;
  std::uint64_t seed = 20240101;
  std::string out = "solarterm-report";
  std::vector<std::string> formats{"csv", "md", "json"};
  std::vector<int> arch_lags{1, 2, 3, 4, 5, 10, 15};
  bool two_step = false;
  bool quiet = false;
};

RunConfig make_config(const GlobalFlags& g, std::vector<Analysis> analyses) {
  RunConfig cfg;
  cfg.input = g.input;
  cfg.csv.date_col = g.date_col;
  cfg.csv.close_col = g.close_col;
  if (!g.returns_col.empty()) cfg.csv.returns_col = g.returns_col;
  cfg.csv.date_format = g.date_format;
  if (g.return_method == "log") {
    cfg.method = ReturnMethod::Log;
  } else if (g.return_method == "simple") {
    cfg.method = ReturnMethod::Simple;
  } else {
    throw UsageError(fmt::format("--return-method must be log or simple (got '{}')", g.return_method));
  }
  if (!g.years.empty()) cfg.years = parse_years(g.years);
  cfg.analyses = std::move(analyses);
  cfg.thresholds = {g.ref_p, g.display_p, g.watch_p};
  cfg.prune_p = g.prune_p;
  cfg.refine_p = g.refine_p;
  cfg.dists.clear();
  for (const auto& d : g.dists) cfg.dists.push_back(parse_dist(d));
  cfg.seed = g.seed;
  cfg.two_step = g.two_step;
  cfg.arch_lags = g.arch_lags;
  cfg.out_dir = g.out;
  cfg.formats.clear();
  for (const auto& f : g.formats) cfg.formats.push_back(parse_format(f));
  cfg.validate();
  return cfg;
}

int run_analyses(const GlobalFlags& g, std::vector<Analysis> analyses) {
  const RunConfig cfg = make_config(g, std::move(analyses));
  const ReportBundle bundle = run_pipeline(cfg);
  write_bundle(bundle, cfg.out_dir, cfg.formats);
  if (!g.quiet) {
    for (const auto& a : bundle.artifacts) {
      for (Format f : cfg.formats) {
        fmt::print("wrote {}\n", (std::filesystem::path(cfg.out_dir) / (a.stem + "." + std::string(to_string(f)))).string());
      }
    }
    fmt::print("wrote {}\n", (std::filesystem::path(cfg.out_dir) / "manifest.json").string());
  }
  for (const auto& w : bundle.warnings) fmt::print(std::cerr, "warning: {}\n", w);
  if (!bundle.complete) {
    fmt::print(std::cerr, "error: {}\n", bundle.error);
    fmt::print(std::cerr, "report bundle in {} is incomplete\n", cfg.out_dir);
    return bundle.exit_code;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Solar-term calendar anomaly analyses for daily return series"};
  app.set_version_flag("--version", std::string(SOLARTERM_VERSION));
  app.set_config("--config", "", "key = value file with any long flag; command-line flags override it");
  app.require_subcommand(1);

  GlobalFlags g;
  app.add_option("--input", g.input, "Daily price CSV ('-' for stdin)");
  app.add_option("--date-col", g.date_col, "Date column name")->capture_default_str();
  app.add_option("--close-col", g.close_col, "Closing price column name")->capture_default_str();
  app.add_option("--returns-col", g.returns_col, "Read precomputed returns from this column instead of prices");
  app.add_option("--date-format", g.date_format, "strptime-style date format")->capture_default_str();
  app.add_option("--return-method", g.return_method, "log or simple")
      ->check(CLI::IsMember({"log", "simple"}))
      ->capture_default_str();
  app.add_option("--years", g.years, "Restrict input to years A:B (inclusive)");
  app.add_option("--dist", g.dists, "Error distributions for IGARCH fits")
      ->check(CLI::IsMember({"normal", "t", "ged"}))
      ->capture_default_str();
  app.add_option("--prune-p", g.prune_p, "Variance-dummy pruning threshold")->capture_default_str();
  app.add_option("--ref-p", g.ref_p, "Reference-term panel threshold")->capture_default_str();
  app.add_option("--display-p", g.display_p, "Panel display threshold")->capture_default_str();
  app.add_option("--watch-p", g.watch_p, "Watchlist panel threshold")->capture_default_str();
  app.add_option("--refine-p", g.refine_p, "Mean-dummy threshold for the refined mean fit")->capture_default_str();
  app.add_option("--arch-lags", g.arch_lags, "ARCH-LM lags")->capture_default_str();
  app.add_option("--seed", g.seed, "Seed for optimizer restarts and synthetic data")->capture_default_str();
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--format", g.formats, "Output formats")
      ->check(CLI::IsMember({"csv", "md", "json"}))
      ->capture_default_str();
  app.add_flag("--two-step", g.two_step, "Fit the mean equation by OLS, then the variance equation on its residuals");
  app.add_flag("-q,--quiet", g.quiet, "Do not list written files");

  std::vector<Analysis> selected;
  auto add_analysis = [&](const std::string& name, const std::string& help, std::vector<Analysis> list) {
    auto* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    sub->callback([&selected, list] { selected = list; });
    return sub;
  };
  add_analysis("terms", "Solar-term calendar aligned to the input's trading days", {Analysis::Terms});
  add_analysis("describe", "Per-term and overall descriptive statistics", {Analysis::Describe});
  add_analysis("inter", "Reference-term regressions with VIF and HC3 extreme bounds", {Analysis::Inter});
  add_analysis("full-mean", "AR(1) mean-level fit with term dummies, refined fit and ARCH-LM test",
               {Analysis::FullMean});
  add_analysis("full-vol", "IGARCH(1,1) variance-level fits with term dummies and pruning", {Analysis::FullVol});
  int radius = 1;
  auto* turn = add_analysis("turn", "Turn-of-term window IGARCH fits", {});
  turn->add_option("--radius", radius, "Window radius in calendar days")->check(CLI::IsMember({1, 2}))->required();
  turn->callback([&] { selected = {radius == 1 ? Analysis::Turn1 : Analysis::Turn2}; });
  std::vector<std::string> run_list;
  auto* run = add_analysis("run", "Every analysis in dependency order", {});
  run->add_option("--analyses", run_list, "Subset to run (terms describe inter full-mean full-vol turn1 turn2)");
  run->callback([&] {
    selected.clear();
    if (run_list.empty()) selected = all_analyses();
    for (const auto& a : run_list) selected.push_back(parse_analysis(a));
  });

  SynthSpec spec;
  std::vector<std::string> mean_inj, var_inj;
  auto* synth = app.add_subcommand("synth", "Write a seeded synthetic price CSV and its ground-truth sidecar to --out");
  synth->fallthrough();
  synth->add_option("--start-year", spec.start_year, "First calendar year")->capture_default_str();
  synth->add_option("--n-years", spec.n_years, "Number of years")->capture_default_str();
  synth->add_option("--mean", spec.base_mean, "Baseline daily mean return")->capture_default_str();
  synth->add_option("--std", spec.base_std, "Innovation standard deviation")->capture_default_str();
  synth->add_option("--ar", spec.ar, "AR(1) coefficient")->capture_default_str();
  synth->add_option("--gamma", spec.gamma, "IGARCH reaction coefficient (0 for iid)")->capture_default_str();
  synth->add_option("--mean-inj", mean_inj, "TERM=VALUE additive return on term days (repeatable)");
  synth->add_option("--var-inj", var_inj, "TERM=FACTOR variance factor on window days (repeatable)");
  synth->add_option("--var-radius", spec.variance_radius, "Window radius for variance injections")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) {
      spec.seed = g.seed;
      spec.mean_injections = parse_injections(mean_inj, "--mean-inj");
      spec.variance_injections = parse_injections(var_inj, "--var-inj");
      const auto data = synth_generate(spec);
      std::filesystem::create_directories(g.out);
      const auto csv_path = std::filesystem::path(g.out) / "synth_prices.csv";
      const auto truth_path = std::filesystem::path(g.out) / "synth_truth.json";
      std::ofstream csv(csv_path, std::ios::binary);
      write_price_csv(csv, data.prices);
      std::ofstream truth(truth_path, std::ios::binary);
      truth << synth_truth_json(data);
      if (!csv || !truth) throw UsageError(fmt::format("cannot write to {}", g.out));
      if (!g.quiet) fmt::print("wrote {}\nwrote {}\n", csv_path.string(), truth_path.string());
      return 0;
    }
    return run_analyses(g, selected);
  } catch (const UsageError& e) {
    fmt::print(std::cerr, "usage error: {}\n", e.what());
    return 1;
  } catch (const DataError& e) {
    fmt::print(std::cerr, "data error: {}\n", e.what());
    return 2;
  } catch (const EstimationError& e) {
    fmt::print(std::cerr, "estimation error: {}\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    fmt::print(std::cerr, "error: {}\n", e.what());
    return 3;
  }
}
