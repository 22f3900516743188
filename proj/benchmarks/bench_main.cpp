#include <benchmark/benchmark.h>

#include "solarterm/calendar.hpp"
#include "solarterm/descstats.hpp"
#include "solarterm/dummyreg.hpp"
#include "solarterm/igarch.hpp"
#include "solarterm/synth.hpp"

using namespace solarterm;

namespace {

const ReturnSeries& market() {
  static const ReturnSeries r = [] {
    SynthSpec spec;
    spec.gamma = 0.06;
    spec.mean_injections = {{3, 0.01}};
    spec.variance_injections = {{8, 5.0}};
    return synth_generate(spec).returns;
  }();
  return r;
}

void BM_TermCalendar(benchmark::State& state) {
  const int years = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(term_calendar(kMinYear, kMinYear + years - 1));
  state.SetItemsProcessed(state.iterations() * years * kTermCount);
}
BENCHMARK(BM_TermCalendar)->Arg(1)->Arg(28)->Arg(201);

void BM_LabelReturns(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(label_returns(market(), static_cast<int>(state.range(0))));
}
BENCHMARK(BM_LabelReturns)->Arg(0)->Arg(2);

void BM_PerTermStats(benchmark::State& state) {
  const auto ls = label_returns(market(), 0);
  for (auto _ : state) benchmark::DoNotOptimize(per_term_stats(ls));
}
BENCHMARK(BM_PerTermStats);

void BM_SignificantPanels(benchmark::State& state) {
  const auto ls = label_returns(market(), 0);
  for (auto _ : state) benchmark::DoNotOptimize(significant_panels(ls));
}
BENCHMARK(BM_SignificantPanels);

void BM_IgarchLikelihoodGradient(benchmark::State& state) {
  const auto ls = label_returns(market(), 0);
  GarchOptions o;
  o.dist = static_cast<Dist>(state.range(0));
  o.variance_terms = present_terms(ls);
  const IgarchLikelihood lik(ls, o);
  const Eigen::VectorXd x = lik.start();
  Eigen::VectorXd g;
  for (auto _ : state) benchmark::DoNotOptimize(lik.evaluate(x, &g));
}
BENCHMARK(BM_IgarchLikelihoodGradient)->Arg(0)->Arg(1)->Arg(2);

void BM_IgarchFit(benchmark::State& state) {
  const auto ls = label_returns(market(), 0);
  GarchOptions o;
  o.dist = static_cast<Dist>(state.range(0));
  o.variance_terms = {8};
  for (auto _ : state) benchmark::DoNotOptimize(igarch_fit(ls, o));
}
BENCHMARK(BM_IgarchFit)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
