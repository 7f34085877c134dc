#include <chrono>
#include <cstdio>
#include <functional>
#include <random>

#include <omp.h>

#include "renewal/harness.hpp"
#include "renewal/lp.hpp"
#include "renewal/ocmdp.hpp"

using namespace renewal;

namespace {

double best_of(int reps, const std::function<void()>& fn) {
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
}

void report(const char* kernel, double serial, double parallel, bool identical) {
    std::printf("%-28s serial %9.4f s  parallel %9.4f s  speedup %5.2fx  outputs %s\n", kernel, serial, parallel,
                serial / parallel, identical ? "identical" : "DIFFER");
}

void bench_pivot() {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Tableau base(600, 6000);
    for (auto& c : base.cells) c = u(rng);
    Tableau a = base, b = base;
    const int pivots = 20;
    const double ts = best_of(1, [&] {
        for (int k = 0; k < pivots; ++k) pivot_rows_serial(a, static_cast<std::size_t>(k), static_cast<std::size_t>(k));
    });
    const double tp = best_of(1, [&] {
        for (int k = 0; k < pivots; ++k) pivot_rows_parallel(b, static_cast<std::size_t>(k), static_cast<std::size_t>(k));
    });
    report("simplex pivot (600x6000)", ts, tp, a.cells == b.cells);
}

void bench_replications() {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::coupled_energy;
    cfg.horizon = 50000;
    cfg.replications = 8;
    cfg.V = {10.0, 100.0};
    cfg.V_given = true;
    RunOptions serial;
    serial.jobs = 1;
    serial.write_outputs = false;
    RunOptions parallel;
    parallel.jobs = 0;
    parallel.write_outputs = false;
    RunSummary a, b;
    const double ts = best_of(1, [&] { a = run_experiment(cfg, serial); });
    const double tp = best_of(1, [&] { b = run_experiment(cfg, parallel); });
    report("replication fan-out (16)", ts, tp, a.means == b.means);
}

void bench_projection() {
    const OcmdpInstance inst = random_ocmdp_instance(8, 12, 6, 2, 1.0, 3);
    OcmdpRunLog a, b;
    const double ts = best_of(1, [&] { a = run_ocmdp(inst, 40.0, 1600.0, 1500, 5, {false, 0, 0.0}); });
    const double tp = best_of(1, [&] { b = run_ocmdp(inst, 40.0, 1600.0, 1500, 5, {true, 0, 0.0}); });
    report("per-MDP projection (K=8)", ts, tp, a.f_sum == b.f_sum && a.g_sum == b.g_sum);
}

}  // namespace

int main() {
    std::printf("OpenMP threads: %d\n", omp_get_max_threads());
    bench_pivot();
    bench_replications();
    bench_projection();
    return 0;
}
