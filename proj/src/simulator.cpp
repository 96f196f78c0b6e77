#include "afterpulse/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "afterpulse/errors.hpp"

namespace afterpulse {
namespace {

constexpr std::int64_t kNever = std::numeric_limits<std::int64_t>::max();
constexpr std::int64_t kRedraw = -1;

bool in_unit(double p) { return p >= 0.0 && p <= 1.0; }

std::int64_t whole_nanoseconds(double seconds, const char* what) {
    const double ns = seconds * 1e9;
    const auto rounded = std::llround(ns);
    if (std::abs(ns - static_cast<double>(rounded)) > 1e-6) {
        throw DomainError(std::string(what) + " must be a whole number of nanoseconds");
    }
    return rounded;
}

}  // namespace

DeadTimeKind parse_dead_time_kind(std::string_view name) {
    if (name == "lt") return DeadTimeKind::lt;
    if (name == "lt-ar" || name == "lt_ar") return DeadTimeKind::lt_ar;
    throw ConfigError("unknown dead-time scheme '" + std::string(name) + "' (expected lt or lt-ar)");
}

std::string_view to_string(DeadTimeKind kind) {
    return kind == DeadTimeKind::lt ? "lt" : "lt-ar";
}

RecoveryRamp parse_recovery_ramp(std::string_view name) {
    if (name == "linear") return RecoveryRamp::linear;
    if (name == "step") return RecoveryRamp::step;
    throw ConfigError("unknown recovery ramp '" + std::string(name) + "' (expected linear or step)");
}

std::string_view to_string(RecoveryRamp ramp) {
    return ramp == RecoveryRamp::linear ? "linear" : "step";
}

DeadTimeScheme DeadTimeScheme::latched(double tau_l) {
    DeadTimeScheme s;
    s.kind = DeadTimeKind::lt;
    s.tau_l = tau_l;
    s.tau_c = 0.0;
    s.tau_er = 0.0;
    return s;
}

DeadTimeScheme DeadTimeScheme::active_reset(double tau_l, double tau_c, double tau_er,
                                            RecoveryRamp ramp) {
    DeadTimeScheme s;
    s.kind = DeadTimeKind::lt_ar;
    s.tau_l = tau_l;
    s.tau_c = tau_c;
    s.tau_er = tau_er;
    s.ramp = ramp;
    return s;
}

void DeadTimeScheme::validate() const {
    if (!(tau_l > 0.0)) throw ConfigError("tau_l must be positive");
    if (kind == DeadTimeKind::lt_ar) {
        if (!(tau_c > 0.0)) throw ConfigError("tau_c must be positive for lt-ar");
        if (!(tau_er >= 0.0)) throw ConfigError("tau_er must be non-negative");
    }
}

double DeadTimeScheme::statistical_dead_time() const {
    return kind == DeadTimeKind::lt ? tau_l : std::max(tau_l, tau_c);
}

double avalanche_efficiency(double t, const DeadTimeScheme& scheme) {
    if (scheme.kind == DeadTimeKind::lt) return 1.0;
    if (t < scheme.tau_c) return 0.0;
    if (scheme.ramp == RecoveryRamp::step || scheme.tau_er <= 0.0) return 1.0;
    return std::clamp((t - scheme.tau_c) / scheme.tau_er, 0.0, 1.0);
}

double effective_efficiency(double t, const DeadTimeScheme& scheme) {
    if (t < scheme.tau_l) return 0.0;
    return avalanche_efficiency(t, scheme);
}

void SimConfig::validate() const {
    if (!(f_g > 0.0) || !(f_l > 0.0)) throw ConfigError("frequencies must be positive");
    if (f_l > f_g) throw ConfigError("laser rate must not exceed the gate frequency");
    const double ratio = f_g / f_l;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
        throw ConfigError("gate frequency must be an integer multiple of the laser rate");
    }
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw ConfigError("mu must be non-negative");
    if (!in_unit(pde)) throw ConfigError("pde must lie in [0, 1]");
    if (!in_unit(dcr_per_gate)) throw ConfigError("dcr_per_gate must lie in [0, 1]");
    if (!in_unit(p_ap_internal)) throw ConfigError("p_ap_internal must lie in [0, 1]");
    if (!(tau_detrap > 0.0)) throw ConfigError("tau_detrap must be positive");
    if (n_gates < 1) throw ConfigError("n_gates must be >= 1");
    scheme.validate();
}

std::int64_t SimConfig::gates_per_laser_period() const {
    return std::llround(f_g / f_l);
}

double SimConfig::photon_click_probability() const {
    return -std::expm1(-mu * pde);
}

double dcr_per_gate_from_hz(double dcr_hz, double f_g) {
    return dcr_hz / f_g;
}

std::int64_t gates_for(double t, double f_g) {
    return std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(t * f_g - 1e-9)));
}

std::vector<double> ClickTrace::click_times() const {
    std::vector<double> times;
    times.reserve(click_gates.size());
    for (const auto g : click_gates) times.push_back(static_cast<double>(g) / f_g);
    return times;
}

double ClickTrace::acquisition_time() const {
    return static_cast<double>(total_gates) / f_g;
}

double ClickTrace::count_rate() const {
    return static_cast<double>(click_gates.size()) / acquisition_time();
}

std::size_t TrapQueue::discard_before(double t) {
    std::size_t dropped = 0;
    while (!heap_.empty() && heap_.top() < t) {
        heap_.pop();
        ++dropped;
    }
    return dropped;
}

double sample_detrap_delay(std::mt19937_64& rng, double tau_detrap) {
    std::exponential_distribution<double> delay(1.0 / tau_detrap);
    double d = 0.0;
    do {
        d = delay(rng);
    } while (!(d > 0.0));
    return d;
}

ClickTrace run_simulation(const SimConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    const DeadTimeScheme& scheme = cfg.scheme;
    const bool active_reset = scheme.kind == DeadTimeKind::lt_ar;
    const std::int64_t laser_period = cfg.gates_per_laser_period();
    const double p_photon = cfg.photon_click_probability();
    const double gate_period = 1.0 / cfg.f_g;
    const std::int64_t latch_gates = gates_for(scheme.tau_l, cfg.f_g);
    const std::int64_t bias_low_gates = active_reset ? gates_for(scheme.tau_c, cfg.f_g) : 0;

    // First success among gates from, from + stride, ...
    auto next_bernoulli = [&](double p, std::int64_t from, std::int64_t stride) {
        if (p <= 0.0) return kNever;
        std::int64_t skip = 0;
        if (p < 1.0) skip = std::geometric_distribution<std::int64_t>(p)(rng);
        if (skip >= (kNever - from) / stride) return kNever;
        return from + skip * stride;
    };
    auto next_photon_from = [&](std::int64_t g) {
        const std::int64_t aligned = (g + laser_period - 1) / laser_period * laser_period;
        return next_bernoulli(p_photon, aligned, laser_period);
    };
    auto release_gate = [&](double t) {
        return static_cast<std::int64_t>(std::ceil(t * cfg.f_g));
    };
    // Bias-level factor by gate offset, consistent with the gate grid.
    auto avalanche_factor = [&](std::int64_t offset) {
        if (!active_reset) return 1.0;
        if (offset < bias_low_gates) return 0.0;
        if (scheme.ramp == RecoveryRamp::step || scheme.tau_er <= 0.0) return 1.0;
        const double t = static_cast<double>(offset) * gate_period;
        return std::clamp((t - scheme.tau_c) / scheme.tau_er, 0.0, 1.0);
    };

    ClickTrace trace;
    trace.total_gates = cfg.n_gates;
    trace.f_g = cfg.f_g;
    trace.laser_period_gates = laser_period;

    TrapQueue traps;
    std::int64_t g = 0;
    std::int64_t last = -1;
    std::int64_t next_photon = kRedraw;
    std::int64_t next_dark = kRedraw;

    while (g < cfg.n_gates) {
        if (active_reset && last >= 0) {
            g = std::max(g, last + bias_low_gates);
            traps.discard_before(static_cast<double>(last) * gate_period + scheme.tau_c);
        }
        if (next_photon < g) next_photon = next_photon_from(g);
        if (next_dark < g) next_dark = next_bernoulli(cfg.dcr_per_gate, g, 1);
        const std::int64_t trap_gate =
            traps.empty() ? kNever : std::max(g, release_gate(traps.earliest()));

        const std::int64_t event = std::min({next_photon, next_dark, trap_gate});
        if (event >= cfg.n_gates) break;
        if (next_photon == event) next_photon = kRedraw;
        if (next_dark == event) next_dark = kRedraw;
        while (!traps.empty() && release_gate(traps.earliest()) <= event) traps.pop();
        g = event + 1;

        if (last >= 0) {
            const double factor = avalanche_factor(event - last);
            if (factor < 1.0 && !(uniform(rng) < factor)) continue;
        }
        if (last < 0 || event - last >= latch_gates) {
            trace.click_gates.push_back(event);
            last = event;
        } else {
            ++trace.hidden_avalanches;
        }
        if (cfg.p_ap_internal > 0.0 && uniform(rng) < cfg.p_ap_internal) {
            traps.push(static_cast<double>(event) * gate_period + sample_detrap_delay(rng, cfg.tau_detrap));
        }
    }
    return trace;
}

SweepHistogram build_sweep_histogram(const ClickTrace& trace, double sweep, double bin_width,
                                     const LaserSchedule& laser) {
    if (!(bin_width > 0.0) || !(sweep > bin_width)) {
        throw DomainError("sweep histogram requires sweep > bin_width > 0");
    }
    if (laser.gates_per_pulse < 1) throw DomainError("laser schedule needs a positive period");
    SweepHistogram h;
    h.sweep_ns = whole_nanoseconds(sweep, "sweep");
    h.bin_width_ns = whole_nanoseconds(bin_width, "bin width");
    if (h.sweep_ns % h.bin_width_ns != 0) throw DomainError("bin width must divide the sweep");
    const std::int64_t n_bins = h.sweep_ns / h.bin_width_ns;
    h.bins = Counts::Zero(n_bins);

    const double gates_per_bin = trace.f_g * static_cast<double>(h.bin_width_ns) / 1e9;
    bool open = false;
    std::int64_t trigger = 0;
    for (const auto click : trace.click_gates) {
        if (open) {
            const double delay_bins = static_cast<double>(click - trigger) / gates_per_bin;
            const auto bin = static_cast<std::int64_t>(std::floor(delay_bins + 1e-9));
            if (bin < n_bins) {
                ++h.bins[bin];
                continue;
            }
            open = false;
        }
        if (laser.coincident(click)) {
            ++h.c0;
            trigger = click;
            open = true;
        }
    }
    return h;
}

GateHistogram build_gate_histogram(const ClickTrace& trace, std::int64_t gates_per_period,
                                   std::int64_t bins_per_gate, double dead_time) {
    if (gates_per_period < 1 || bins_per_gate < 1) {
        throw DomainError("gate histogram needs positive gates_per_period and bins_per_gate");
    }
    GateHistogram h;
    h.gates_per_period = gates_per_period;
    h.bin_width_ps = std::llround(1e12 / (trace.f_g * static_cast<double>(bins_per_gate)));
    h.acquisition_gates = trace.total_gates;
    h.dead_time_ps = std::llround(dead_time * 1e12);
    h.bins = Counts::Zero(gates_per_period * bins_per_gate);
    for (const auto click : trace.click_gates) {
        ++h.bins[(click % gates_per_period) * bins_per_gate + bins_per_gate / 2];
    }
    return h;
}

}  // namespace afterpulse
