#include "nsssm/analysis.hpp"
#include "nsssm/scenarios.hpp"
#include "nsssm/ssm_analytic.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

using namespace nsssm;

namespace {

// range(0): 0 serial reference, 1 OpenMP
void BM_SpTraining(benchmark::State& state) {
    SpParams p;
    p.delta = 0.1;
    const bool parallel = state.range(0) != 0;
    for (auto _ : state) {
        auto d = sp_training(p, 1, 0.1, 60.0, 8, 0.05, 0.5, parallel);
        benchmark::DoNotOptimize(d.trajectories.data());
    }
}
BENCHMARK(BM_SpTraining)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SpFrcIndependent(benchmark::State& state) {
    SpParams p;
    p.delta = 1e-2;
    p.eps = 0.15;
    FlowFactory full = [p](double w) {
        SpParams q = p;
        q.omega = w;
        return std::make_unique<FullFlow>(sp_system(q));
    };
    std::vector<double> om;
    for (int i = 0; i < 8; ++i) om.push_back(0.9 + 0.025 * i);
    FlowState s;
    s.x = Vec::Zero(4);
    s.x[0] = 0.1;
    FrcOptions o;
    o.warm_start = false;
    o.parallel = state.range(0) != 0;
    for (auto _ : state) {
        auto c = frc_curve(full, om, s, 0, o);
        benchmark::DoNotOptimize(c.data());
    }
}
BENCHMARK(BM_SpFrcIndependent)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SpRomStep(benchmark::State& state) {
    SpParams p;
    p.delta = 1e-3;
    NonsmoothRom rom(build_sp_model(p, 1), build_sp_model(p, -1), sp_switching());
    rom.sticking = std::make_shared<SpSticking>(p);
    Vec eta(2);
    eta << 0.3, 0.0;
    for (auto _ : state) {
        auto tr = simulate_rom(rom, eta, 1, 0.0, 60.0);
        benchmark::DoNotOptimize(tr.end_eta.data());
    }
}
BENCHMARK(BM_SpRomStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
