#include "solarterm/report.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <nlohmann/json.hpp>
#include <set>

#include "solarterm/error.hpp"

namespace solarterm {

using json = nlohmann::ordered_json;

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string md_number(double x) {
  if (std::isnan(x)) return "NaN";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return fmt::format("{:.4g}", x);
}

json cell_json(const Cell& c) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else if constexpr (std::is_same_v<T, double>) {
          return std::isfinite(v) ? json(v) : json(nullptr);
        } else {
          return v;
        }
      },
      c.value);
}

json header_json(const ReportContext& ctx) {
  json h;
  h["source"] = ctx.source_id;
  h["return_method"] = to_string(ctx.method);
  h["index_type"] = "unknown (price or total return, as supplied)";
  h["n_returns"] = ctx.n_returns;
  h["first_date"] = ctx.first_date;
  h["last_date"] = ctx.last_date;
  return h;
}

std::string header_markdown(const ReportContext& ctx) {
  return fmt::format("Source: `{}`; {} returns, {} to {} ({} observations). Index type as supplied (price or total "
                     "return not recorded).\n\n",
                     ctx.source_id, to_string(ctx.method), ctx.first_date, ctx.last_date, ctx.n_returns);
}

json table_json(const Table& t) {
  json j;
  j["title"] = t.title;
  j["columns"] = t.columns;
  json rows = json::array();
  for (const auto& r : t.rows) {
    json o;
    for (std::size_t c = 0; c < t.columns.size() && c < r.size(); ++c) o[t.columns[c]] = cell_json(r[c]);
    rows.push_back(std::move(o));
  }
  j["rows"] = std::move(rows);
  j["notes"] = t.notes;
  return j;
}

Artifact make_artifact(std::string stem, const Table& t, const ReportContext* ctx, json details = {}) {
  Artifact a;
  a.stem = std::move(stem);
  a.csv = render_csv(t);
  a.markdown = (ctx ? "## " + t.title + "\n\n" + header_markdown(*ctx) : "## " + t.title + "\n\n");
  a.markdown += render_markdown(t);
  json j;
  j["artifact"] = a.stem;
  if (ctx) j["header"] = header_json(*ctx);
  j["table"] = table_json(t);
  if (!details.is_null()) j["details"] = std::move(details);
  a.json = j.dump(2) + "\n";
  return a;
}

const std::string kStarNote = "*** p < 0.01, ** p < 0.05, * p < 0.10.";

json ols_json(const OlsFit& fit) {
  json j;
  json coefs = json::array();
  for (Eigen::Index i = 0; i < fit.coefficients.size(); ++i) {
    json c;
    c["name"] = fit.columns[static_cast<std::size_t>(i)];
    c["estimate"] = fit.coefficients(i);
    c["se"] = fit.se(i);
    c["t"] = fit.t(i);
    c["p"] = fit.p(i);
    c["ci95"] = {fit.ci95[static_cast<std::size_t>(i)].lower, fit.ci95[static_cast<std::size_t>(i)].upper};
    coefs.push_back(std::move(c));
  }
  j["coefficients"] = std::move(coefs);
  j["n_obs"] = fit.nobs();
  j["df"] = fit.df;
  j["sigma2"] = fit.sigma2;
  j["r_squared"] = fit.r_squared;
  return j;
}

}  // namespace

std::string_view to_string(Format f) {
  switch (f) {
    case Format::Csv: return "csv";
    case Format::Markdown: return "md";
    case Format::Json: return "json";
  }
  return "csv";
}

Format parse_format(std::string_view s) {
  if (s == "csv") return Format::Csv;
  if (s == "md" || s == "markdown") return Format::Markdown;
  if (s == "json") return Format::Json;
  throw UsageError(fmt::format("unknown output format '{}' (expected csv, md or json)", s));
}

std::string stars(double p) {
  if (!(p >= 0.0)) return {};
  if (p < 0.01) return "***";
  if (p < 0.05) return "**";
  if (p < 0.10) return "*";
  return {};
}

std::string render_csv(const Table& t) {
  std::string out;
  for (std::size_t c = 0; c < t.columns.size(); ++c) out += (c ? "," : "") + csv_escape(t.columns[c]);
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
              out += fmt::format("{}", v);
            } else if constexpr (std::is_same_v<T, long long>) {
              out += std::to_string(v);
            } else if constexpr (std::is_same_v<T, std::string>) {
              out += csv_escape(v);
            }
          },
          row[c].value);
    }
    out += '\n';
  }
  return out;
}

std::string render_markdown(const Table& t) {
  std::string out = "|";
  for (const auto& c : t.columns) out += " " + c + " |";
  out += "\n|";
  for (std::size_t c = 0; c < t.columns.size(); ++c) out += "---|";
  out += '\n';
  for (const auto& row : t.rows) {
    out += '|';
    for (const auto& cell : row) {
      std::string text = std::visit(
          [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
              return md_number(v);
            } else if constexpr (std::is_same_v<T, long long>) {
              return std::to_string(v);
            } else if constexpr (std::is_same_v<T, std::string>) {
              return v;
            } else {
              return "";
            }
          },
          cell.value);
      if (cell.star_p) text += stars(*cell.star_p);
      out += " " + text + " |";
    }
    out += '\n';
  }
  if (!t.notes.empty()) {
    out += '\n';
    for (const auto& n : t.notes) out += n + "\n";
  }
  return out;
}

Artifact term_calendar_artifact(const std::vector<TermEvent>& events) {
  Table t;
  t.title = "Solar-term calendar (Beijing time, UTC+8)";
  t.columns = {"year", "order", "name", "instant_utc8", "trading_day"};
  json near = json::array();
  for (const auto& ev : events) {
    t.rows.push_back({Cell(ev.year), Cell(ev.term.order), Cell(std::string(ev.term.name())),
                      Cell(format_local_time(ev.local_time())),
                      ev.trading_day ? Cell(format_date(*ev.trading_day)) : Cell()});
    if (ev.near_midnight()) near.push_back(fmt::format("{} term {}", ev.year, ev.term.order));
  }
  t.notes.push_back("Empty trading_day: the term's local date is not a trading day and the term is excluded.");
  if (!near.empty()) {
    t.notes.push_back(fmt::format("{} instant(s) within one hour of local midnight; the date could shift under a "
                                  "different time-zone convention.",
                                  near.size()));
  }
  json details;
  details["near_midnight"] = std::move(near);
  return make_artifact("term_calendar", t, nullptr, std::move(details));
}

Artifact per_term_stats_artifact(const ReportContext& ctx, const std::vector<TermStatsRow>& rows) {
  Table t;
  t.title = "Statistics of solar-term-day returns";
  t.columns = {"order", "name", "n", "mean", "std", "skewness", "kurtosis", "t_stat", "t_p", "sw_W", "sw_p", "note"};
  for (const auto& r : rows) {
    const auto& s = r.stats;
    std::optional<double> tp = s.t_test ? std::optional<double>(s.t_test->p_value) : std::nullopt;
    t.rows.push_back({Cell(r.order), Cell(std::string(SolarTerm{r.order}.name())), Cell(s.n),
                      s.n > 0 ? Cell(s.mean, tp) : Cell(), s.n > 1 ? Cell(s.std) : Cell(), Cell(s.skewness),
                      Cell(s.kurtosis), s.t_test ? Cell(s.t_test->statistic, tp) : Cell(), Cell(tp),
                      s.shapiro ? Cell(s.shapiro->statistic) : Cell(),
                      s.shapiro ? Cell(s.shapiro->p_value, s.shapiro->p_value) : Cell(), Cell(r.note)});
  }
  t.notes = {"Kurtosis is non-excess (normal = 3). t tests the null of a zero mean.", kStarNote};
  return make_artifact("table1_per_term_stats", t, &ctx);
}

Artifact overall_stats_artifact(const ReportContext& ctx, const SampleStats& s) {
  Table t;
  t.title = "Statistics of overall return";
  t.columns = {"n", "mean", "std", "skewness", "kurtosis", "t_stat", "t_p", "sw_W", "sw_p"};
  std::optional<double> tp = s.t_test ? std::optional<double>(s.t_test->p_value) : std::nullopt;
  t.rows.push_back({Cell(s.n), Cell(s.mean, tp), Cell(s.std), Cell(s.skewness), Cell(s.kurtosis),
                    s.t_test ? Cell(s.t_test->statistic, tp) : Cell(), Cell(tp),
                    s.shapiro ? Cell(s.shapiro->statistic) : Cell(),
                    s.shapiro ? Cell(s.shapiro->p_value, s.shapiro->p_value) : Cell()});
  if (!s.shapiro) t.notes.push_back("Shapiro-Wilk not reported: it is defined here for 3 <= n <= 5000.");
  t.notes.push_back(kStarNote);
  return make_artifact("table4_overall_stats", t, &ctx);
}

Artifact histogram_artifact(const ReportContext& ctx, std::span<const double> sample, int bins) {
  Table t;
  t.title = "Return histogram with fitted normal density";
  t.columns = {"bin_lower", "bin_upper", "count", "density", "normal_density"};
  if (sample.size() >= 2 && bins > 0) {
    const auto [lo_it, hi_it] = std::minmax_element(sample.begin(), sample.end());
    const double lo = *lo_it, hi = *hi_it;
    const double width = hi > lo ? (hi - lo) / bins : 1.0;
    std::vector<long long> counts(static_cast<std::size_t>(bins), 0);
    for (double x : sample) {
      auto b = static_cast<std::size_t>(std::min<double>(bins - 1, std::floor((x - lo) / width)));
      ++counts[b];
    }
    const auto m = moments(sample);
    const double n = static_cast<double>(sample.size());
    for (int b = 0; b < bins; ++b) {
      const double a = lo + b * width;
      const double mid = a + 0.5 * width;
      const double z = m.std > 0.0 ? (mid - m.mean) / m.std : 0.0;
      const double pdf = m.std > 0.0 ? std::exp(-0.5 * z * z) / (m.std * std::sqrt(2.0 * std::numbers::pi)) : 0.0;
      t.rows.push_back({Cell(a), Cell(a + width), Cell(counts[static_cast<std::size_t>(b)]),
                        Cell(static_cast<double>(counts[static_cast<std::size_t>(b)]) / (n * width)), Cell(pdf)});
    }
  }
  t.notes.push_back("Data for an external plotting tool; no image is rendered.");
  return make_artifact("figure_return_histogram", t, &ctx);
}

namespace {

std::string panel_label(std::size_t i) {
  std::string s;
  for (std::size_t k = i + 1; k > 0; k = (k - 1) / 26) s.insert(s.begin(), static_cast<char>('A' + (k - 1) % 26));
  return s;
}

std::vector<Eigen::Index> panel_rows(const ReferencePanel& p) {
  std::vector<Eigen::Index> idx{0};
  for (int k : p.displayed_terms)
    if (auto i = p.ref.index_of(k)) idx.push_back(*i);
  return idx;
}

}  // namespace

Artifact reference_panels_artifact(const ReportContext& ctx, const std::vector<ReferencePanel>& panels) {
  Table t;
  t.title = "Inter-solar-term regression (reference-term panels)";
  t.columns = {"panel", "reference", "watchlist", "term", "coefficient", "std_error", "t_stat", "p_value",
               "ci95_lower", "ci95_upper", "tolerance", "vif"};
  json details = json::array();
  for (std::size_t i = 0; i < panels.size(); ++i) {
    const auto& p = panels[i];
    const auto& f = p.ref.fit;
    std::map<std::string, const VifEntry*> vif_by_col;
    for (const auto& v : p.vif) vif_by_col[v.column] = &v;
    for (auto j : panel_rows(p)) {
      const auto& col = f.columns[static_cast<std::size_t>(j)];
      const auto it = vif_by_col.find(col);
      t.rows.push_back({Cell(panel_label(i)), Cell(p.ref.reference), Cell(p.watchlist ? "yes" : "no"),
                        Cell(p.ref.terms[static_cast<std::size_t>(j)]), Cell(f.coefficients(j), f.p(j)),
                        Cell(f.se(j)), Cell(f.t(j)), Cell(f.p(j)), Cell(f.ci95[static_cast<std::size_t>(j)].lower),
                        Cell(f.ci95[static_cast<std::size_t>(j)].upper),
                        it != vif_by_col.end() ? Cell(it->second->tolerance) : Cell(),
                        it != vif_by_col.end() ? Cell(it->second->vif) : Cell()});
    }
    json d;
    d["panel"] = panel_label(i);
    d["reference"] = p.ref.reference;
    d["watchlist"] = p.watchlist;
    d["absent_terms"] = p.ref.absent_terms;
    d["displayed_terms"] = p.displayed_terms;
    d["fit"] = ols_json(f);
    json vifs = json::array();
    for (const auto& v : p.vif) vifs.push_back({{"column", v.column}, {"tolerance", v.tolerance}, {"vif", v.vif}});
    d["vif"] = std::move(vifs);
    details.push_back(std::move(d));
  }
  t.notes = {"The reference row's coefficient is the intercept: the reference term's mean return. Other rows are "
             "differences from the reference term.",
             "Watchlist panels have a reference p-value between the reference and watchlist thresholds.", kStarNote};
  if (panels.empty()) t.notes.insert(t.notes.begin(), "No reference term reached the reference threshold.");
  return make_artifact("table2_reference_panels", t, &ctx, std::move(details));
}

Artifact eba_artifact(const ReportContext& ctx, const std::vector<ReferencePanel>& panels) {
  Table t;
  t.title = "Extreme bounds (HC3) for reference-term panels";
  t.columns = {"panel", "reference", "term", "estimate", "hc3_se", "lower95", "upper95", "lower90", "upper90",
               "classification"};
  for (std::size_t i = 0; i < panels.size(); ++i) {
    const auto& p = panels[i];
    if (!p.eba) {
      t.rows.push_back({Cell(panel_label(i)), Cell(p.ref.reference), Cell(), Cell(), Cell(), Cell(), Cell(), Cell(),
                        Cell(), Cell("unavailable: " + p.eba_error)});
      continue;
    }
    for (auto j : panel_rows(p)) {
      const auto& r = p.eba->rows[static_cast<std::size_t>(j)];
      t.rows.push_back({Cell(panel_label(i)), Cell(p.ref.reference), Cell(p.ref.terms[static_cast<std::size_t>(j)]),
                        Cell(r.estimate), Cell(r.se), Cell(r.bounds[0].lower), Cell(r.bounds[0].upper),
                        Cell(r.bounds[1].lower), Cell(r.bounds[1].upper),
                        Cell(std::string(to_string(r.classification)))});
    }
  }
  t.notes = {"Bounds are estimate +/- u * HC3 standard error with u = 1.96 (95%) and 1.645 (90%).",
             "robust-95 / robust-90: both bounds share the estimate's sign at that level; fragile otherwise."};
  return make_artifact("table3_eba_bounds", t, &ctx);
}

Artifact mean_fit_artifact(const ReportContext& ctx, std::string stem, std::string title, const MeanFit& fit) {
  Table t;
  t.title = std::move(title);
  t.columns = {"parameter", "term", "estimate", "std_error", "t_stat", "p_value"};
  const auto& f = fit.ols;
  for (Eigen::Index j = 0; j < f.coefficients.size(); ++j) {
    const Cell term = j >= 2 ? Cell(fit.dummy_terms[static_cast<std::size_t>(j - 2)]) : Cell();
    t.rows.push_back({Cell(f.columns[static_cast<std::size_t>(j)]), term, Cell(f.coefficients(j), f.p(j)),
                      Cell(f.se(j)), Cell(f.t(j)), Cell(f.p(j))});
  }
  t.notes.push_back(fmt::format("Observations: {}; R-squared: {}.", fit.n_obs, md_number(f.r_squared)));
  if (!fit.dropped_terms.empty()) {
    t.notes.push_back(fmt::format("Terms without observations (columns dropped): {}.", fmt::join(fit.dropped_terms, ", ")));
  }
  t.notes.push_back("mu: normal-day mean; r: coefficient on the previous day's return; alphaK: term-K day effect.");
  t.notes.push_back(kStarNote);
  json d = ols_json(f);
  d["dropped_terms"] = fit.dropped_terms;
  return make_artifact(std::move(stem), t, &ctx, std::move(d));
}

Artifact arch_test_artifact(const ReportContext& ctx, const std::vector<ArchLmRow>& rows) {
  Table t;
  t.title = "ARCH-LM test on mean-equation residuals";
  t.columns = {"lag", "lm_stat", "p_value", "n_effective", "reject_1pct"};
  for (const auto& r : rows) {
    t.rows.push_back({Cell(r.lag), Cell(r.lm, r.p), Cell(r.p), Cell(r.n_effective), Cell(r.reject_1pct ? "yes" : "no")});
  }
  t.notes = {"Null hypothesis: no ARCH effect. LM = n_effective * R^2, chi-squared with `lag` degrees of freedom.",
             kStarNote};
  return make_artifact("table7_arch_test", t, &ctx);
}

Artifact volatility_artifact(const ReportContext& ctx, std::string stem, std::string title,
                             const VolatilityAnalysis& a) {
  Table t;
  t.title = std::move(title);
  t.columns = {"parameter"};
  for (Dist d : a.dists) {
    const auto n = std::string(to_string(d));
    t.columns.push_back(n + "_estimate");
    t.columns.push_back(n + "_se");
    t.columns.push_back(n + "_p");
  }
  // Row order: mean parameters, gamma, beta, surviving dummies in term order, distribution parameter.
  std::vector<std::string> names{"mu", "r", "gamma", "beta"};
  std::set<int> terms;
  for (const auto& pr : a.per_dist)
    for (int k : pr.fit.variance_terms) terms.insert(k);
  for (int k : terms) names.push_back(fmt::format("alpha{}", k));
  names.push_back("nu");
  names.push_back("v");
  for (const auto& name : names) {
    std::vector<Cell> row{Cell(name)};
    bool any = false;
    for (const auto& pr : a.per_dist) {
      if (const auto* p = pr.fit.param(name)) {
        row.push_back(Cell(p->estimate, p->p));
        row.push_back(Cell(p->se));
        row.push_back(Cell(p->p));
        any = true;
      } else {
        row.insert(row.end(), 3, Cell());
      }
    }
    if (any) t.rows.push_back(std::move(row));
  }
  auto summary_row = [&](std::string label, auto get) {
    std::vector<Cell> row{Cell(std::move(label))};
    for (const auto& pr : a.per_dist) {
      row.push_back(get(pr.fit));
      row.push_back(Cell());
      row.push_back(Cell());
    }
    t.rows.push_back(std::move(row));
  };
  summary_row("lambda", [](const GarchFit& f) { return Cell(f.lambda); });
  summary_row("loglik", [](const GarchFit& f) { return Cell(f.loglik); });
  summary_row("n_obs", [](const GarchFit& f) { return Cell(f.n_obs); });
  summary_row("floor_hits", [](const GarchFit& f) { return Cell(f.floor_hits); });
  summary_row("se_method", [](const GarchFit& f) { return Cell(f.se_method); });

  t.notes.push_back(fmt::format("Labels: {}. Variance dummies pruned one at a time (largest p first).",
                                a.mode.describe()));
  t.notes.push_back(a.strongly_efficient.empty()
                        ? std::string("Strongly efficient terms (surviving under every distribution): none.")
                        : fmt::format("Strongly efficient terms (surviving under every distribution): {}.",
                                      fmt::join(a.strongly_efficient, ", ")));
  t.notes.push_back("gamma + beta = 1 by construction. Standard errors from the finite-difference Hessian.");
  t.notes.push_back(kStarNote);

  json details;
  details["label_mode"] = a.mode.describe();
  details["strongly_efficient"] = a.strongly_efficient;
  json fits = json::array();
  for (const auto& pr : a.per_dist) {
    const auto& f = pr.fit;
    json d;
    d["dist"] = to_string(f.dist);
    d["loglik"] = f.loglik;
    d["gamma"] = f.gamma;
    d["beta"] = f.beta;
    if (f.dist_param) d["dist_param"] = *f.dist_param;
    if (f.lambda) d["lambda"] = *f.lambda;
    json ps = json::array();
    for (const auto& p : f.params) {
      ps.push_back({{"name", p.name},
                    {"estimate", p.estimate},
                    {"se", std::isfinite(p.se) ? json(p.se) : json(nullptr)},
                    {"p", std::isfinite(p.p) ? json(p.p) : json(nullptr)}});
    }
    d["params"] = std::move(ps);
    d["variance_terms"] = f.variance_terms;
    d["initial_terms"] = pr.initial_terms;
    json trace = json::array();
    for (const auto& s : pr.trace) {
      trace.push_back({{"removed_term", s.removed_term},
                       {"p_value", s.p_value},
                       {"loglik_before", s.loglik_before},
                       {"loglik_after", s.loglik_after}});
    }
    d["pruning_trace"] = std::move(trace);
    d["diagnostics"] = {{"n_obs", f.n_obs},
                        {"floor_hits", f.floor_hits},
                        {"valid", f.valid},
                        {"converged", f.converged},
                        {"iterations", f.iterations},
                        {"se_method", f.se_method},
                        {"max_scaled_gradient", f.max_scaled_gradient},
                        {"warnings", f.warnings}};
    fits.push_back(std::move(d));
  }
  details["fits"] = std::move(fits);
  return make_artifact(std::move(stem), t, &ctx, std::move(details));
}

void write_bundle(const ReportBundle& bundle, const std::filesystem::path& dir, const std::vector<Format>& formats) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw UsageError(fmt::format("cannot create output directory {}: {}", dir.string(), ec.message()));
  auto write = [&](const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw UsageError(fmt::format("cannot write {}", path.string()));
  };
  for (const auto& a : bundle.artifacts) {
    for (Format f : formats) {
      const auto& content = f == Format::Csv ? a.csv : f == Format::Markdown ? a.markdown : a.json;
      write(dir / (a.stem + "." + std::string(to_string(f))), content);
    }
  }
  write(dir / "manifest.json", bundle.manifest);
}

}  // namespace solarterm
