#include "afterpulse/pipeline.hpp"

#include <cmath>
#include <limits>

#include "afterpulse/errors.hpp"

namespace afterpulse {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kCalibrationRounds = 4;

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

double gate_dead_time(const DeadTimeScheme& scheme, double f_g) {
    return static_cast<double>(gates_for(scheme.statistical_dead_time(), f_g)) / f_g;
}

SweepRun simulate_sweep(const SimConfig& sim, const RunConfig& cfg) {
    SweepRun run;
    run.trace = run_simulation(sim);
    const LaserSchedule laser{sim.gates_per_laser_period(), 0};
    run.histogram = build_sweep_histogram(run.trace, cfg.sweep, cfg.bin_width, laser);
    run.tau_s = sim.scheme.statistical_dead_time();
    return run;
}

GateRun simulate_gate_pair(const SimConfig& sim, std::int64_t bins_per_gate) {
    SimConfig dark = sim;
    dark.mu = 0.0;
    dark.seed = derive_seed(sim.seed, 1);
    const std::int64_t period = sim.gates_per_laser_period();
    const double dead = gate_dead_time(sim.scheme, sim.f_g);

    GateRun run;
    run.lit_trace = run_simulation(sim);
    run.lit = build_gate_histogram(run.lit_trace, period, bins_per_gate, dead);
    run.dark_trace = run_simulation(dark);
    run.dark = build_gate_histogram(run.dark_trace, period, bins_per_gate, dead);
    return run;
}

EstimateBundle estimate_run(const SweepRun& run, const TimeWindow& window) {
    return estimate_and_derive(run.histogram, run.tau_s, window, run.trace.count_rate());
}

MethodEstimate p2_with_sigma(const EstimateBundle& b, double rate, double tau_s) {
    if (!(b.p_exp >= 0.0) || std::isnan(b.p2)) return {kNaN, b.p_exp_sigma};
    const double d = 1e-6;
    const double lo = std::max(0.0, b.p_exp - d);
    const double hi = b.p_exp + d;
    const double slope = (derive_all(hi, rate, tau_s).p2 - derive_all(lo, rate, tau_s).p2) / (hi - lo);
    return {b.p2, std::abs(slope) * b.p_exp_sigma};
}

Method parse_method(std::string_view name) {
    if (name == "custom") return Method::custom;
    if (name == "bethune") return Method::bethune;
    if (name == "yuan") return Method::yuan;
    if (name == "coincidence") return Method::coincidence;
    throw ConfigError("unknown method '" + std::string(name) +
                      "' (expected custom, bethune, yuan or coincidence)");
}

std::string_view to_string(Method m) {
    switch (m) {
        case Method::custom: return "custom";
        case Method::bethune: return "bethune";
        case Method::yuan: return "yuan";
        case Method::coincidence: return "coincidence";
    }
    return "?";
}

std::vector<CompareRow> compare_methods(const RunConfig& cfg, const std::vector<double>& mus,
                                        const RunHook& hook) {
    if (mus.empty()) throw ConfigError("mu list is empty");
    for (const double mu : mus) {
        if (!(mu > 0.0) || !std::isfinite(mu)) throw ConfigError("mu values must be positive");
    }
    cfg.validate();

    // Three jobs per mu: custom sweep run, Bethune pair, Yuan/coincidence pair.
    struct JobResult {
        std::vector<CompareRow> rows;
    };
    const std::size_t n_jobs = mus.size() * 3;
    const auto results = parallel_map(n_jobs, cfg.threads, [&](std::size_t j) {
        const std::size_t i = j / 3;
        const std::size_t kind = j % 3;
        SimConfig sim = cfg.sim;
        sim.mu = mus[i];
        sim.seed = derive_seed(cfg.sim.seed, j);
        JobResult out;
        if (kind == 0) {
            sim.n_gates = cfg.custom_gates;
            const SweepRun run = simulate_sweep(sim, cfg);
            if (hook.sweep) hook.sweep(sim, run);
            const EstimateBundle b = estimate_run(run, cfg.dcr_window);
            const MethodEstimate p2 = p2_with_sigma(b, run.trace.count_rate(), run.tau_s);
            out.rows.push_back({Method::custom, mus[i], p2.value, p2.sigma});
        } else if (kind == 1) {
            sim.n_gates = cfg.gate_method_gates;
            sim.f_l = sim.f_g / 2.0;
            const GateRun run = simulate_gate_pair(sim, cfg.bins_per_gate);
            if (hook.gate) hook.gate(sim, run);
            const MethodEstimate e = estimate_bethune(run.lit, run.dark);
            out.rows.push_back({Method::bethune, mus[i], e.value, e.sigma});
        } else {
            sim.n_gates = cfg.gate_method_gates;
            sim.f_l = sim.f_g / static_cast<double>(cfg.yuan_ratio);
            const GateRun run = simulate_gate_pair(sim, cfg.bins_per_gate);
            if (hook.gate) hook.gate(sim, run);
            const MethodEstimate y = estimate_yuan(run.lit, run.dark, sim.f_g, sim.f_l, cfg.yuan_gate);
            const MethodEstimate c = estimate_coincidence(run.lit, run.dark, sim.f_g, sim.f_l);
            out.rows.push_back({Method::yuan, mus[i], y.value, y.sigma});
            out.rows.push_back({Method::coincidence, mus[i], c.value, c.sigma});
        }
        return out;
    });

    std::vector<CompareRow> rows;
    for (const Method m : {Method::custom, Method::bethune, Method::yuan, Method::coincidence}) {
        for (const auto& r : results) {
            for (const auto& row : r.rows) {
                if (row.method == m) rows.push_back(row);
            }
        }
    }
    return rows;
}

DeadTimeScheme sweep_scheme(DeadTimeKind kind, double tau) {
    if (kind == DeadTimeKind::lt) return DeadTimeScheme::latched(tau);
    return DeadTimeScheme::active_reset(tau, tau, 0.0, RecoveryRamp::step);
}

double calibrate_mu(SimConfig sim, double target_rate, std::int64_t gates) {
    if (!(sim.pde > 0.0)) throw ConfigError("count-rate calibration needs pde > 0");
    if (!(target_rate > 0.0)) throw ConfigError("target rate must be positive");
    sim.n_gates = gates;
    double q = std::clamp(target_rate / sim.f_l, 1e-9, 0.999);
    const std::uint64_t base = sim.seed;
    for (int round = 0; round < kCalibrationRounds; ++round) {
        sim.mu = -std::log1p(-q) / sim.pde;
        sim.seed = derive_seed(base, static_cast<std::uint64_t>(round));
        const double rate = run_simulation(sim).count_rate();
        q = rate > 0.0 ? q * target_rate / rate : q * 10.0;
        q = std::clamp(q, 1e-9, 0.999);
    }
    return -std::log1p(-q) / sim.pde;
}

DeadTimeSweep sweep_deadtime(const RunConfig& cfg, const std::vector<double>& taus,
                             const std::vector<DeadTimeKind>& schemes, const RunHook& hook) {
    if (schemes.empty()) throw ConfigError("scheme list is empty");
    if (taus.empty()) throw ConfigError("tau grid is empty");
    for (std::size_t i = 0; i < taus.size(); ++i) {
        if (!(taus[i] > 0.0)) throw ConfigError("tau values must be positive");
        if (i > 0 && !(taus[i] > taus[i - 1])) throw ConfigError("tau grid must be strictly increasing");
    }
    if (taus.back() > cfg.dcr_window.begin) {
        throw ConfigError("tau grid must end before the dark-count window");
    }
    cfg.validate();

    const std::size_t n = taus.size() * schemes.size();
    DeadTimeSweep sweep;
    sweep.points = parallel_map(n, cfg.threads, [&](std::size_t j) {
        SweepPoint p;
        p.scheme = schemes[j / taus.size()];
        p.tau = taus[j % taus.size()];
        SimConfig sim = cfg.sim;
        sim.scheme = sweep_scheme(p.scheme, p.tau);
        sim.seed = derive_seed(cfg.sim.seed, 2 * j + 1);
        p.mu = calibrate_mu(sim, cfg.target_rate_hz, cfg.calibration_gates);
        sim.mu = p.mu;
        sim.seed = derive_seed(cfg.sim.seed, 2 * j);
        const SweepRun run = simulate_sweep(sim, cfg);
        if (hook.sweep) hook.sweep(sim, run);
        p.rate = run.trace.count_rate();
        p.estimate = estimate_run(run, cfg.dcr_window);
        return p;
    });

    if (taus.size() < 4) return sweep;
    for (std::size_t s = 0; s < schemes.size(); ++s) {
        for (const char* quantity : {"p_exp", "p2"}) {
            std::vector<double> ys;
            for (std::size_t t = 0; t < taus.size(); ++t) {
                const auto& e = sweep.points[s * taus.size() + t].estimate;
                ys.push_back(std::string_view(quantity) == "p_exp" ? e.p_exp : e.p2);
            }
            if (std::any_of(ys.begin(), ys.end(), [](double y) { return !std::isfinite(y); })) continue;
            for (const FitLaw law : {FitLaw::power_law, FitLaw::exponential}) {
                sweep.fits.push_back({schemes[s], quantity, fit_curve(taus, ys, law)});
            }
        }
    }
    return sweep;
}

}  // namespace afterpulse
