#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "afterpulse/errors.hpp"
#include "afterpulse/simulator.hpp"

using namespace afterpulse;

namespace {

SimConfig quiet_config() {
    SimConfig c;
    c.dcr_per_gate = 0.0;
    c.p_ap_internal = 0.0;
    c.n_gates = 100'000'000;
    return c;
}

std::int64_t min_spacing(const ClickTrace& t) {
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    for (std::size_t i = 1; i < t.click_gates.size(); ++i) {
        best = std::min(best, t.click_gates[i] - t.click_gates[i - 1]);
    }
    return best;
}

}  // namespace

TEST(GateGrid, GatesFor) {
    EXPECT_EQ(gates_for(0.2e-6, 312.5e6), 63);
    EXPECT_EQ(gates_for(1e-6, 312.5e6), 313);
    EXPECT_EQ(gates_for(3.2e-9, 312.5e6), 1);
    EXPECT_EQ(gates_for(0.0, 312.5e6), 0);
}

TEST(DeadTime, Efficiency) {
    const auto lt = DeadTimeScheme::latched(1e-6);
    EXPECT_EQ(avalanche_efficiency(0.1e-6, lt), 1.0);
    EXPECT_EQ(effective_efficiency(0.5e-6, lt), 0.0);
    EXPECT_EQ(effective_efficiency(1e-6, lt), 1.0);

    const auto ar = DeadTimeScheme::active_reset(1e-6, 1e-6, 0.4e-6);
    EXPECT_EQ(avalanche_efficiency(0.5e-6, ar), 0.0);
    EXPECT_NEAR(avalanche_efficiency(1.2e-6, ar), 0.5, 1e-12);
    EXPECT_EQ(avalanche_efficiency(2e-6, ar), 1.0);
    const auto step = DeadTimeScheme::active_reset(1e-6, 1e-6, 0.4e-6, RecoveryRamp::step);
    EXPECT_EQ(avalanche_efficiency(1.01e-6, step), 1.0);

    EXPECT_DOUBLE_EQ(lt.statistical_dead_time(), 1e-6);
    EXPECT_DOUBLE_EQ(DeadTimeScheme::active_reset(2e-6, 1e-6).statistical_dead_time(), 2e-6);
}

TEST(DeadTime, Parse) {
    EXPECT_EQ(parse_dead_time_kind("lt-ar"), DeadTimeKind::lt_ar);
    EXPECT_EQ(parse_dead_time_kind("lt_ar"), DeadTimeKind::lt_ar);
    EXPECT_EQ(parse_dead_time_kind("lt"), DeadTimeKind::lt);
    EXPECT_THROW(parse_dead_time_kind("ar"), ConfigError);
    EXPECT_EQ(parse_recovery_ramp("step"), RecoveryRamp::step);
}

TEST(Config, Validation) {
    SimConfig c;
    EXPECT_NO_THROW(c.validate());
    c.n_gates = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = SimConfig{};
    c.f_l = 3e4;
    EXPECT_THROW(c.validate(), ConfigError);
    c = SimConfig{};
    c.pde = 1.5;
    EXPECT_THROW(c.validate(), ConfigError);
    c = SimConfig{};
    c.scheme.tau_l = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
    EXPECT_THROW(run_simulation(c), ConfigError);
}

TEST(Traps, QueueOrder) {
    TrapQueue q;
    for (double t : {5.0, 1.0, 3.0, 2.0}) q.push(t);
    EXPECT_DOUBLE_EQ(q.earliest(), 1.0);
    EXPECT_EQ(q.discard_before(2.5), 2u);
    EXPECT_DOUBLE_EQ(q.earliest(), 3.0);
    EXPECT_EQ(q.size(), 2u);
}

TEST(Traps, DelayMean) {
    std::mt19937_64 rng(11);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double d = sample_detrap_delay(rng, 1e-6);
        ASSERT_GT(d, 0.0);
        sum += d;
    }
    // sigma of the mean is 1e-6 / sqrt(n)
    EXPECT_NEAR(sum / n, 1e-6, 4e-6 / std::sqrt(n));
}

TEST(Simulation, Deterministic) {
    SimConfig c;
    c.seed = 42;
    const auto a = run_simulation(c);
    const auto b = run_simulation(c);
    EXPECT_EQ(a.click_gates, b.click_gates);
    c.seed = 43;
    EXPECT_NE(run_simulation(c).click_gates, a.click_gates);
}

TEST(Simulation, PhotonClicksOnLaserGates) {
    SimConfig c = quiet_config();
    const auto t = run_simulation(c);
    const double pulses = static_cast<double>(c.n_gates / c.gates_per_laser_period());
    const double q = c.photon_click_probability();
    for (const auto g : t.click_gates) ASSERT_EQ(g % c.gates_per_laser_period(), 0);
    const double n = static_cast<double>(t.click_gates.size());
    EXPECT_NEAR(n, pulses * q, 4.0 * std::sqrt(pulses * q * (1 - q)));
}

TEST(Simulation, DarkCountRate) {
    SimConfig c = quiet_config();
    c.mu = 0.0;
    c.dcr_per_gate = 1e-5;
    c.n_gates = 1'000'000'000;
    const auto t = run_simulation(c);
    const double n = static_cast<double>(t.click_gates.size());
    // Dead gates after each click cannot click.
    const double live = static_cast<double>(c.n_gates) - n * gates_for(c.scheme.statistical_dead_time(), c.f_g);
    EXPECT_NEAR(n, live * c.dcr_per_gate, 4.0 * std::sqrt(live * c.dcr_per_gate));
    EXPECT_EQ(t.hidden_avalanches, 0);
}

TEST(Simulation, MinimumSpacing) {
    for (const auto scheme : {DeadTimeScheme::latched(0.5e-6), DeadTimeScheme::active_reset(0.2e-6, 0.2e-6),
                              DeadTimeScheme::active_reset(1e-6, 0.3e-6, 0.2e-6)}) {
        SimConfig c;
        c.f_l = c.f_g / 50;
        c.mu = 5.0;
        c.p_ap_internal = 0.3;
        c.n_gates = 20'000'000;
        c.scheme = scheme;
        const auto t = run_simulation(c);
        ASSERT_GT(t.click_gates.size(), 1000u);
        EXPECT_GE(min_spacing(t), gates_for(scheme.tau_l, c.f_g));
    }
}

TEST(Simulation, HiddenAvalanches) {
    SimConfig c;
    c.scheme = DeadTimeScheme::latched(1e-6);
    c.p_ap_internal = 0.3;
    c.n_gates = 1'000'000'000;
    EXPECT_GT(run_simulation(c).hidden_avalanches, 0);
    c.scheme = DeadTimeScheme::active_reset(1e-6, 1e-6);
    EXPECT_EQ(run_simulation(c).hidden_avalanches, 0);
}

TEST(Simulation, HoldOffChainMatchesAnalytic) {
    // Without dark counts each trigger starts a chain; each link survives the
    // hold-off with probability q = p * exp(-tau_c / tau_detrap), so the mean
    // number of afterpulses per trigger is q / (1 - q).
    SimConfig c;
    c.dcr_per_gate = 0.0;
    c.n_gates = 10'000'000'000;
    const auto t = run_simulation(c);
    const auto h = build_sweep_histogram(t, 25e-6, 10e-9, {c.gates_per_laser_period(), 0});
    const double q = c.p_ap_internal * std::exp(-c.scheme.tau_c / c.tau_detrap);
    const double expected = q / (1 - q);
    const double p_exp = static_cast<double>(h.total()) / static_cast<double>(h.c0);
    EXPECT_NEAR(p_exp, expected, 4.0 * std::sqrt(expected / static_cast<double>(h.c0)));
    EXPECT_EQ(h.bins.head(20).sum(), 0);
}

TEST(Simulation, LatchedExceedsActiveReset) {
    SimConfig c;
    c.n_gates = 5'000'000'000;
    c.p_ap_internal = 0.15;
    c.scheme = DeadTimeScheme::latched(1e-6);
    const auto lt = run_simulation(c);
    c.scheme = DeadTimeScheme::active_reset(1e-6, 1e-6);
    const auto ar = run_simulation(c);
    EXPECT_GT(lt.click_gates.size(), ar.click_gates.size());
}

TEST(Histograms, SweepBinning) {
    ClickTrace t;
    t.f_g = 312.5e6;
    t.total_gates = 100000;
    t.laser_period_gates = 31250;
    // trigger at 0; clicks at 63 gates (201.6 ns) and 3125 gates (10 us)
    t.click_gates = {0, 63, 3125, 31250, 31250 + 7811};
    const auto h = build_sweep_histogram(t, 25e-6, 10e-9, {31250, 0});
    EXPECT_EQ(h.c0, 2);
    EXPECT_EQ(h.bins.size(), 2500);
    EXPECT_EQ(h.bins[20], 1);
    EXPECT_EQ(h.bins[1000], 1);
    EXPECT_EQ(h.bins[2499], 1);  // 7811 gates = 24.9952 us
    EXPECT_EQ(h.total(), 3);
    EXPECT_THROW(build_sweep_histogram(t, 25e-6, 3.3e-9, {31250, 0}), DomainError);
    EXPECT_THROW(build_sweep_histogram(t, 25e-6, 7e-9, {31250, 0}), DomainError);
}

TEST(Histograms, SweepsDoNotOverlap) {
    ClickTrace t;
    t.f_g = 312.5e6;
    t.total_gates = 100000;
    // Laser every gate: the second click is inside the first sweep and
    // must not open another one.
    t.click_gates = {0, 100, 20000};
    const auto h = build_sweep_histogram(t, 25e-6, 10e-9, {1, 0});
    EXPECT_EQ(h.c0, 2);
    EXPECT_EQ(h.total(), 1);
}

TEST(Histograms, GateFolding) {
    ClickTrace t;
    t.f_g = 312.5e6;
    t.total_gates = 1000;
    t.click_gates = {0, 2, 5, 7, 8};
    const auto g = build_gate_histogram(t, 2, 10, 201.6e-9);
    EXPECT_EQ(g.bin_width_ps, 320);
    EXPECT_EQ(g.gate_counts(0), 3);
    EXPECT_EQ(g.gate_counts(1), 2);
    EXPECT_EQ(g.bins[5], 3);
    EXPECT_EQ(g.bins[15], 2);
    EXPECT_EQ(g.dead_time_ps, 201600);
    EXPECT_EQ(g.acquisition_gates, 1000);
}
