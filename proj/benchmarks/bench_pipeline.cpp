#include <benchmark/benchmark.h>

#include <random>

#include "vfpid/ar.hpp"
#include "vfpid/basis.hpp"
#include "vfpid/signal.hpp"
#include "vfpid/simulate.hpp"
#include "vfpid/spectral.hpp"
#include "vfpid/vfp.hpp"

namespace {

vfpid::SignalPool demo_pool(std::size_t n_samples, int grid_k1, int grid_k2) {
  vfpid::SimSpec spec = vfpid::demo_wing_spec();
  std::vector<double> k1s, k2s;
  for (int i = 0; i < grid_k1; ++i)
    k1s.push_back(9.0 + 8.0 * i / std::max(1, grid_k1 - 1));
  for (int j = 0; j < grid_k2; ++j)
    k2s.push_back(15.0 * j / std::max(1, grid_k2 - 1));
  spec.states = vfpid::state_grid(k1s, k2s);
  spec.innovation_gamma.resize(0, 0);
  spec.n_samples = n_samples;
  return vfpid::simulate_pool(spec);
}

void BM_ChebyshevBasisEval(benchmark::State& state) {
  const auto basis =
      vfpid::complete_basis(static_cast<int>(state.range(0)),
                            vfpid::Ranges{{9.0, 17.0}, {0.0, 15.0}});
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> k1(9.0, 17.0), k2(0.0, 15.0);
  for (auto _ : state) {
    const vfpid::FlightState k{k1(rng), k2(rng)};
    benchmark::DoNotOptimize(vfpid::eval_basis(basis, k));
  }
}
BENCHMARK(BM_ChebyshevBasisEval)->Arg(3)->Arg(25);

void BM_Cheby2Filter(benchmark::State& state) {
  const auto filter = vfpid::design_cheby2_lowpass(12, 80.0, 50.0, 1000.0);
  std::vector<double> x(static_cast<std::size_t>(state.range(0)));
  std::mt19937_64 rng(2);
  std::normal_distribution<double> noise;
  for (double& v : x) v = noise(rng);
  for (auto _ : state) benchmark::DoNotOptimize(vfpid::sos_filter(filter, x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Cheby2Filter)->Arg(10000)->Arg(90000);

void BM_FitAr(benchmark::State& state) {
  const auto pool = demo_pool(4000, 1, 1);
  const auto& signal = pool.records.front().samples;
  for (auto _ : state)
    benchmark::DoNotOptimize(vfpid::fit_ar(signal, static_cast<int>(state.range(0)), 200.0));
}
BENCHMARK(BM_FitAr)->Arg(8)->Arg(24)->Arg(72)->Unit(benchmark::kMillisecond);

void BM_AssembleDense(benchmark::State& state) {
  const auto pool = demo_pool(1000, 4, 4);
  const auto basis = vfpid::complete_basis(static_cast<int>(state.range(0)),
                                           vfpid::Ranges{{9.0, 17.0}, {0.0, 15.0}});
  for (auto _ : state)
    benchmark::DoNotOptimize(vfpid::assemble(pool, 8, basis));
  state.SetItemsProcessed(state.iterations() * 16 * 992);
}
BENCHMARK(BM_AssembleDense)->Arg(3)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_StreamedNormalEquations(benchmark::State& state) {
  const auto pool = demo_pool(2000, 6, 6);
  const auto basis = vfpid::complete_basis(10, vfpid::Ranges{{9.0, 17.0}, {0.0, 15.0}});
  const int order = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto eqs = vfpid::accumulate_normal_equations(pool, order, basis);
    benchmark::DoNotOptimize(vfpid::solve_normal_equations(eqs));
  }
}
BENCHMARK(BM_StreamedNormalEquations)->Arg(8)->Arg(24)->Unit(benchmark::kMillisecond);

void BM_FitVfpWls(benchmark::State& state) {
  const auto pool = demo_pool(static_cast<std::size_t>(state.range(0)), 3, 3);
  const auto basis = vfpid::complete_basis(6, vfpid::Ranges{{9.0, 17.0}, {0.0, 15.0}});
  vfpid::VfpFitOptions options;
  options.method = vfpid::FitMethod::wls1;
  options.compute_p_theta = false;
  for (auto _ : state)
    benchmark::DoNotOptimize(vfpid::fit_vfp(pool, 4, basis, options));
}
BENCHMARK(BM_FitVfpWls)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_WelchPsd(benchmark::State& state) {
  const auto pool = demo_pool(90000 / 16, 1, 1);
  vfpid::SignalRecord record = pool.records.front();
  for (auto _ : state)
    benchmark::DoNotOptimize(
        vfpid::welch_psd(record, static_cast<std::size_t>(state.range(0)), 0.9));
}
BENCHMARK(BM_WelchPsd)->Arg(1024)->Arg(5096)->Unit(benchmark::kMillisecond);

void BM_FrfSurface(benchmark::State& state) {
  const vfpid::SimSpec demo = vfpid::demo_wing_spec();
  vfpid::SweepSpec sweep;
  sweep.variable = vfpid::SweepVariable::airspeed;
  sweep.from = 9.0;
  sweep.to = 17.0;
  sweep.step = 0.1;
  sweep.fixed_value = 0.0;
  const vfpid::FreqGrid freq{0.1, 80.0, 0.05};
  for (auto _ : state)
    benchmark::DoNotOptimize(vfpid::frf_surface(demo.model, sweep, freq));
}
BENCHMARK(BM_FrfSurface)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
