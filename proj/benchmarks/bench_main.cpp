#include <benchmark/benchmark.h>

#include "harq/mdp.hpp"
#include "harq/policy_eval.hpp"
#include "harq/scheme_models.hpp"

namespace {

harq::SchemeConfig config(harq::SchemeKind kind, double rho_sq) {
  harq::SchemeConfig c;
  c.kind = kind;
  c.q_max = 10;
  c.cost = harq::CostModel::scaled(rho_sq, 4.1722);
  c.alpha = 0.1;
  c.tau = 0.5;
  c.levels = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  return c;
}

void BM_BuildAndSolve(benchmark::State& state) {
  const auto kind = static_cast<harq::SchemeKind>(state.range(0));
  const harq::SchemeConfig c = config(kind, 2.4);
  for (auto _ : state) {
    const harq::SchemeModel m = harq::build_scheme(c);
    benchmark::DoNotOptimize(harq::relative_value_iteration(m.mdp).average_cost);
  }
  state.SetLabel(c.label());
}
BENCHMARK(BM_BuildAndSolve)
    ->Arg(static_cast<int>(harq::SchemeKind::StdIr))
    ->Arg(static_cast<int>(harq::SchemeKind::Ir))
    ->Arg(static_cast<int>(harq::SchemeKind::SnCc))
    ->Arg(static_cast<int>(harq::SchemeKind::DnCc))
    ->Unit(benchmark::kMicrosecond);

void BM_SolveLargeAge(benchmark::State& state) {
  harq::SchemeConfig c = config(harq::SchemeKind::DnCc, 2.0);
  c.q_max = static_cast<int>(state.range(0));
  const harq::SchemeModel m = harq::build_scheme(c);
  for (auto _ : state) {
    benchmark::DoNotOptimize(harq::relative_value_iteration(m.mdp).average_cost);
  }
  state.counters["states"] = static_cast<double>(m.states.size());
}
BENCHMARK(BM_SolveLargeAge)->Arg(10)->Arg(40)->Arg(160)->Unit(benchmark::kMillisecond);

void BM_Simulate(benchmark::State& state) {
  const harq::SchemeModel m = harq::build_scheme(config(harq::SchemeKind::SnCc, 2.4));
  const harq::Policy p = harq::relative_value_iteration(m.mdp).policy;
  harq::EvalConfig e;
  e.trials = 1000;
  e.slots = 1000;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        harq::simulate_policy(m, p, e, static_cast<unsigned>(state.range(0))).mu_mse);
  }
  state.SetItemsProcessed(state.iterations() * e.trials * e.slots);
}
BENCHMARK(BM_Simulate)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

// The packaged benchmark_main archive is LTO bytecode from another compiler
// release, so the entry point is defined here.
BENCHMARK_MAIN();
