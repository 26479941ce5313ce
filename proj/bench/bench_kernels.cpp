#include "rsc/cooling.hpp"
#include "rsc/detection.hpp"
#include "rsc/spectroscopy.hpp"

#include <benchmark/benchmark.h>

#include <vector>

namespace {

rsc::ExecutionPolicy policy_of(const benchmark::State& state) {
    return state.range(0) == 0 ? rsc::ExecutionPolicy::Serial : rsc::ExecutionPolicy::Parallel;
}

void BM_Spectrum(benchmark::State& state) {
    rsc::SpectroscopyConfig config;
    config.trial.trials_per_sign = 100;
    config.trial.atoms_per_point = 8;
    std::vector<double> magnitudes;
    for (int k = 0; k <= 70; k += 5) magnitudes.push_back(rsc::hz(k * 1e4));
    for (auto _ : state)
        benchmark::DoNotOptimize(rsc::acquire_spectrum(magnitudes, config, 7, policy_of(state)));
}
BENCHMARK(BM_Spectrum)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_CoolingScan(benchmark::State& state) {
    const rsc::TrapConfig trap;
    const rsc::CoolingConfig cooling;
    std::vector<double> values;
    for (int k = 0; k <= 10; ++k) values.push_back(-600e3 + 20e3 * k);
    for (auto _ : state)
        benchmark::DoNotOptimize(
            rsc::cooling_scan(trap, cooling, rsc::ScanAxis::RamanDetuning, values, policy_of(state)));
}
BENCHMARK(BM_CoolingScan)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_DetectionMonteCarlo(benchmark::State& state) {
    rsc::DetectionConfig config;
    config.flip_rate_4to3 = 300.0;
    for (auto _ : state)
        benchmark::DoNotOptimize(rsc::confusion_matrix_monte_carlo(config, 1 << 18, 11, policy_of(state)));
}
BENCHMARK(BM_DetectionMonteCarlo)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
