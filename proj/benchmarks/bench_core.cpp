#include <benchmark/benchmark.h>

#include "tcindiff/bs_engine.hpp"
#include "tcindiff/expansion.hpp"
#include "tcindiff/hjb_oracle.hpp"
#include "tcindiff/simulator.hpp"

using namespace tcindiff;

namespace {

MarketParams base(double eps) {
  MarketParams p;
  p.epsilon = eps;
  return p;
}

const ClaimSpec kCall = ClaimSpec::mollified_call(1.0, 1.0);

void BM_BsCashGreeks(benchmark::State& st) {
  double S = 0.9;
  for (auto _ : st) {
    benchmark::DoNotOptimize(bs_cash_greeks(true, S, 1.0, 1.5, 0.0, 1.4142135623730951));
    S = S < 1.1 ? S + 1e-6 : 0.9;
  }
}
BENCHMARK(BM_BsCashGreeks);

void BM_Band(benchmark::State& st) {
  const MarketParams p = base(1e-2);
  double S = 0.9;
  for (auto _ : st) {
    benchmark::DoNotOptimize(band(p, kCall, Side::with_claim, S, 0.3));
    S = S < 1.1 ? S + 1e-6 : 0.9;
  }
}
BENCHMARK(BM_Band);

// Fresh field each iteration so the memo cache does not hide the quadrature.
void BM_H2HeatKernel(benchmark::State& st) {
  const MarketParams p = base(1e-2);
  for (auto _ : st) {
    const H2Field f(p, kCall, Side::with_claim);
    benchmark::DoNotOptimize(f.value(1.0, 0.0));
  }
}
BENCHMARK(BM_H2HeatKernel)->Unit(benchmark::kMillisecond);

void BM_LogQ(benchmark::State& st) {
  const Expansion e(base(1e-2), kCall, Side::with_claim);
  e.h3_constants();
  const auto b = e.band(1.0, 0.2);
  const double y = 0.5 * (b.y_minus + b.y_plus);
  for (auto _ : st) benchmark::DoNotOptimize(e.log_q(1.0, y, 0.2, Bound::plus));
}
BENCHMARK(BM_LogQ);

void BM_SimulatePaths(benchmark::State& st) {
  const MarketParams p = base(1e-2);
  const PortfolioPoint start{0.0, 0.0, 0.5, 1.0};
  SimOptions opt;
  opt.threads = 1;
  for (auto _ : st)
    benchmark::DoNotOptimize(simulate(p, kCall, Side::with_claim, {PolicyKind::band}, 100, 250, 1, start, opt));
  st.SetItemsProcessed(st.iterations() * 100 * 250);
}
BENCHMARK(BM_SimulatePaths)->Unit(benchmark::kMillisecond);

void BM_SolveQvi(benchmark::State& st) {
  const MarketParams p = base(1e-2);
  GridSpec g = default_grid(kCall);
  g.n_S = static_cast<int>(st.range(0));
  g.n_y = 64;
  g.n_t = 64;
  g.error_estimate = false;
  for (auto _ : st) benchmark::DoNotOptimize(solve_qvi(g, p, kCall, Side::without_claim));
  st.SetItemsProcessed(st.iterations() * g.n_S * g.n_y * g.n_t);
}
BENCHMARK(BM_SolveQvi)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
