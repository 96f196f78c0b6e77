#pragma once

// Monte Carlo model of a sine-gated SPAD.
//
// Time advances on the gate grid (gate g sits at t = g / f_g). Photon clicks
// are possible only on laser-aligned gates (g % (f_g / f_l) == 0) with
// probability 1 - exp(-mu * pde); dark clicks on any gate with probability
// dcr_per_gate. Every avalanche spawns at most one trapped carrier with
// probability p_ap_internal; the carrier is released after an exponential
// delay and avalanches at the first gate at or after its release, provided
// the bias is up.
//
// Dead-time schemes:
//  - LT: after a registered click the comparator ignores avalanches for tau_l.
//    The bias stays high, so avalanches during latching still happen
//    (hidden avalanches) and refill the traps.
//  - LT_AR: the registered click additionally drops the bias for tau_c.
//    Nothing avalanches then and carriers released meanwhile are lost. The
//    efficiency recovers over tau_er (linear or step). Registration still
//    requires t >= tau_l.
//
// The engine is event driven: it jumps between gates on which something can
// happen, so cost scales with the number of avalanches, not gates.

#include <cstdint>
#include <queue>
#include <random>
#include <string_view>
#include <vector>

#include "afterpulse/histio.hpp"

namespace afterpulse {

enum class DeadTimeKind { lt, lt_ar };
enum class RecoveryRamp { linear, step };

DeadTimeKind parse_dead_time_kind(std::string_view name);
std::string_view to_string(DeadTimeKind kind);
RecoveryRamp parse_recovery_ramp(std::string_view name);
std::string_view to_string(RecoveryRamp ramp);

struct DeadTimeScheme {
    DeadTimeKind kind = DeadTimeKind::lt_ar;
    double tau_l = 0.2e-6; // comparator latching time, s
    double tau_c = 0.2e-6; // active reset (bias low) time, s; LT_AR only
    double tau_er = 0.0;   // efficiency recovery after bias restoration, s
    RecoveryRamp ramp = RecoveryRamp::linear;

    static DeadTimeScheme latched(double tau_l);
    static DeadTimeScheme active_reset(double tau_l, double tau_c, double tau_er = 0.0,
                                       RecoveryRamp ramp = RecoveryRamp::linear);

    void validate() const;
    double statistical_dead_time() const;
};

// Bias-level factor on the avalanche probability, t seconds after the last
// registered click. Always 1 for LT.
double avalanche_efficiency(double t_since_click, const DeadTimeScheme& scheme);

// Probability factor for a registered click t seconds after the previous one:
// the avalanche factor, gated by the comparator latch.
double effective_efficiency(double t_since_click, const DeadTimeScheme& scheme);

struct SimConfig {
    double f_g = 312.5e6;  // gate frequency, Hz
    double f_l = 1e4;      // laser repetition rate, Hz
    double mu = 1.0;       // mean photons per pulse
    double pde = 0.2;
    double dcr_per_gate = 100.0 / 312.5e6;
    double p_ap_internal = 0.1;
    double tau_detrap = 1e-6;  // mean carrier release time, s
    DeadTimeScheme scheme;
    std::int64_t n_gates = 50'000'000;
    std::uint64_t seed = 1;

    void validate() const;
    std::int64_t gates_per_laser_period() const;
    double photon_click_probability() const;
};

double dcr_per_gate_from_hz(double dcr_hz, double f_g);

// First gate offset whose time is at or after `t` (tolerant to rounding).
std::int64_t gates_for(double t, double f_g);

struct ClickTrace {
    std::vector<std::int64_t> click_gates;  // strictly increasing
    std::int64_t hidden_avalanches = 0;
    std::int64_t total_gates = 0;
    double f_g = 312.5e6;
    std::int64_t laser_period_gates = 1;

    std::vector<double> click_times() const;
    double acquisition_time() const;
    double count_rate() const;
};

// Pending carrier release times (absolute, s).
class TrapQueue {
  public:
    void push(double release_time) { heap_.push(release_time); }
    bool empty() const { return heap_.empty(); }
    std::size_t size() const { return heap_.size(); }
    double earliest() const { return heap_.top(); }
    void pop() { heap_.pop(); }
    std::size_t discard_before(double t);

  private:
    std::priority_queue<double, std::vector<double>, std::greater<>> heap_;
};

double sample_detrap_delay(std::mt19937_64& rng, double tau_detrap);

ClickTrace run_simulation(const SimConfig& cfg);

struct LaserSchedule {
    std::int64_t gates_per_pulse = 1;
    std::int64_t phase = 0;

    bool coincident(std::int64_t gate) const noexcept {
        return (gate - phase) % gates_per_pulse == 0;
    }
};

// Oscilloscope emulation: laser-coincident clicks open a sweep of length
// `sweep`; later clicks inside the window are binned by their delay. Sweeps
// never overlap. Times are in seconds and must be whole nanoseconds.
SweepHistogram build_sweep_histogram(const ClickTrace& trace, double sweep, double bin_width,
                                     const LaserSchedule& laser);

// Click counts folded over `gates_per_period` gates with `bins_per_gate`
// bins each; clicks land in the centre bin of their gate.
GateHistogram build_gate_histogram(const ClickTrace& trace, std::int64_t gates_per_period,
                                   std::int64_t bins_per_gate, double dead_time);

}  // namespace afterpulse
