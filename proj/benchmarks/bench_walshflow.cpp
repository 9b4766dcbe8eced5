#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "walshflow/graph.hpp"
#include "walshflow/isde.hpp"
#include "walshflow/quadrant.hpp"
#include "walshflow/rng.hpp"
#include "walshflow/stats.hpp"
#include "walshflow/walsh.hpp"

using namespace walshflow;

namespace {

constexpr double kPi = 3.14159265358979323846;

void BM_OrbmLeg(benchmark::State& st) {
  const double dt = std::ldexp(1.0, -static_cast<int>(st.range(0)));
  std::uint64_t i = 0;
  for (auto _ : st) {
    RngStream rng(1, i++);
    benchmark::DoNotOptimize(orbm_leg(kPi / 4, 1.0, dt, rng).Y_S);
  }
}
BENCHMARK(BM_OrbmLeg)->Arg(10)->Arg(14)->Arg(18);

void BM_QuadrantProcess(benchmark::State& st) {
  const AngleSource src = AngleSource::fixed(kPi / 3, kPi / 3);
  std::uint64_t i = 0;
  for (auto _ : st) {
    RngStream rng(2, i++);
    benchmark::DoNotOptimize(quadrant_process(src, 1.0, 1e-3, 1e-3, 100000, rng).thetas.size());
  }
}
BENCHMARK(BM_QuadrantProcess);

void BM_WalshExactStep(benchmark::State& st) {
  const StarGraph g = make_star(3, {0.5, 0.3, 0.2});
  RngStream rng(3, 0);
  for (auto _ : st) benchmark::DoNotOptimize(wbm_exact_step(g, g.point(0, 0.5), 1.0, rng).coord);
}
BENCHMARK(BM_WalshExactStep);

void BM_CoupledPath(benchmark::State& st) {
  const StarGraph g = make_star(3, {0.5, 0.3, 0.2});
  const WalshOptions opt{st.range(0) != 0};
  std::uint64_t i = 0;
  for (auto _ : st) {
    RngStream rng(4, i++);
    benchmark::DoNotOptimize(wbm_coupled_path(g, StarGraph::origin(), 1.0, 1e-3, rng, opt).points.size());
  }
}
BENCHMARK(BM_CoupledPath)->Arg(0)->Arg(1);

void BM_Coalescence(benchmark::State& st) {
  const StarGraph g = make_star(3, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  std::uint64_t i = 0;
  for (auto _ : st) {
    RngStream rng(5, i++);
    benchmark::DoNotOptimize(coalescence_time(g, g.point(0, 1.0), StarGraph::origin(), 1e-3, rng, 1e3).time);
  }
}
BENCHMARK(BM_Coalescence);

void BM_IncompleteBeta(benchmark::State& st) {
  double x = 0.0;
  for (auto _ : st) {
    x = x < 0.99 ? x + 0.01 : 0.01;
    benchmark::DoNotOptimize(reg_incomplete_beta(0.25, 0.75, x));
  }
}
BENCHMARK(BM_IncompleteBeta);

void BM_KsOneSample(benchmark::State& st) {
  RngStream rng(6, 0);
  std::vector<double> v(static_cast<std::size_t>(st.range(0)));
  for (double& x : v) x = rng.uniform();
  for (auto _ : st) benchmark::DoNotOptimize(ks_against_cdf(v, [](double x) { return x; }).statistic);
}
BENCHMARK(BM_KsOneSample)->Arg(10000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
