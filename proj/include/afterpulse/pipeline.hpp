#pragma once

// Multi-run orchestration shared by the CLI and the acceptance suite.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "afterpulse/estimators.hpp"
#include "afterpulse/fitting.hpp"
#include "afterpulse/run_config.hpp"
#include "afterpulse/simulator.hpp"

namespace afterpulse {

// splitmix64 of (seed, index): independent sub-run seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// Runs fn(i) for i in [0, n) on up to `threads` workers (0: hardware
// concurrency). Results come back in index order; the first exception is
// rethrown.
template <class Fn>
auto parallel_map(std::size_t n, unsigned threads, Fn fn) -> std::vector<decltype(fn(std::size_t{}))> {
    using R = decltype(fn(std::size_t{}));
    std::vector<R> out(n);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                out[i] = fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
    return out;
}

struct SweepRun {
    ClickTrace trace;
    SweepHistogram histogram;
    double tau_s = 0.0;  // statistical dead time, s
};

// Simulates `sim` and builds the oscilloscope histogram described by `cfg`.
SweepRun simulate_sweep(const SimConfig& sim, const RunConfig& cfg);

// Lit and dark gate histograms folded over f_g / f_l gates.
struct GateRun {
    GateHistogram lit;
    GateHistogram dark;
    ClickTrace lit_trace;
    ClickTrace dark_trace;
};
GateRun simulate_gate_pair(const SimConfig& sim, std::int64_t bins_per_gate);

// Dead time of `scheme` rounded up to the gate grid, s.
double gate_dead_time(const DeadTimeScheme& scheme, double f_g);

EstimateBundle estimate_run(const SweepRun& run, const TimeWindow& window);

// p2 and its counting sigma, propagated from p_exp by central difference.
MethodEstimate p2_with_sigma(const EstimateBundle& bundle, double rate, double tau_s);

enum class Method { custom, bethune, yuan, coincidence };
Method parse_method(std::string_view name);
std::string_view to_string(Method m);

struct CompareRow {
    Method method = Method::custom;
    double mu = 0.0;
    double p_ap = 0.0;
    double sigma = 0.0;
};

// Observer for every simulation a multi-run command performs. May be
// called concurrently from worker threads.
struct RunHook {
    std::function<void(const SimConfig&, const SweepRun&)> sweep;
    std::function<void(const SimConfig&, const GateRun&)> gate;
};

// One row per (method, mu), ordered by method then mu.
std::vector<CompareRow> compare_methods(const RunConfig& cfg, const std::vector<double>& mus,
                                        const RunHook& hook = {});

struct SweepPoint {
    DeadTimeKind scheme = DeadTimeKind::lt;
    double tau = 0.0;  // s
    double mu = 0.0;
    double rate = 0.0;
    EstimateBundle estimate;
};

struct SweepFit {
    DeadTimeKind scheme = DeadTimeKind::lt;
    std::string quantity;
    FitResult fit;
};

struct DeadTimeSweep {
    std::vector<SweepPoint> points;
    std::vector<SweepFit> fits;
};

// Scheme for a sweep point: LT latches for tau; LT+AR holds the bias low
// for tau with a matching latch and no recovery transient.
DeadTimeScheme sweep_scheme(DeadTimeKind kind, double tau);

// Finds mu giving `target_rate` (Hz) within a few short calibration runs.
double calibrate_mu(SimConfig sim, double target_rate, std::int64_t gates);

// For every (scheme, tau): calibrate mu to the target count rate, simulate,
// estimate. Fits p_exp and p2 against tau with both laws when at least four
// taus are given.
DeadTimeSweep sweep_deadtime(const RunConfig& cfg, const std::vector<double>& taus,
                             const std::vector<DeadTimeKind>& schemes, const RunHook& hook = {});

}  // namespace afterpulse
