#include <gtest/gtest.h>

#include "afterpulse/errors.hpp"
#include "afterpulse/pipeline.hpp"
#include "afterpulse/run_config.hpp"

using namespace afterpulse;

TEST(RunConfig, DefaultFileMatchesBuiltIn) {
    const auto cfg = load_run_config(AFTERPULSE_SOURCE_DIR "/configs/default.ini");
    const RunConfig builtin;
    EXPECT_DOUBLE_EQ(cfg.sim.f_g, 312.5e6);
    EXPECT_DOUBLE_EQ(cfg.sim.f_l, 1e4);
    EXPECT_DOUBLE_EQ(cfg.sim.mu, builtin.sim.mu);
    EXPECT_DOUBLE_EQ(cfg.sim.pde, builtin.sim.pde);
    EXPECT_DOUBLE_EQ(cfg.sim.dcr_per_gate, 100.0 / 312.5e6);
    EXPECT_DOUBLE_EQ(cfg.sim.p_ap_internal, builtin.sim.p_ap_internal);
    EXPECT_DOUBLE_EQ(cfg.sim.tau_detrap, builtin.sim.tau_detrap);
    EXPECT_EQ(cfg.sim.scheme.kind, DeadTimeKind::lt_ar);
    EXPECT_DOUBLE_EQ(cfg.sim.scheme.tau_l, builtin.sim.scheme.tau_l);
    EXPECT_DOUBLE_EQ(cfg.sim.scheme.tau_c, builtin.sim.scheme.tau_c);
    EXPECT_EQ(cfg.sim.n_gates, builtin.sim.n_gates);
    EXPECT_DOUBLE_EQ(cfg.sweep, 25e-6);
    EXPECT_DOUBLE_EQ(cfg.bin_width, 10e-9);
    EXPECT_DOUBLE_EQ(cfg.dcr_window.begin, 20e-6);
    EXPECT_DOUBLE_EQ(cfg.dcr_window.end, 25e-6);
    EXPECT_EQ(cfg.text_hash.size(), 16u);
}

TEST(RunConfig, Overrides) {
    const auto cfg = parse_run_config("[source]\nmu = 0.5\n[deadtime]\nscheme = lt\ntau_l_us = 2\n[run]\nseed = 9\n");
    EXPECT_DOUBLE_EQ(cfg.sim.mu, 0.5);
    EXPECT_EQ(cfg.sim.scheme.kind, DeadTimeKind::lt);
    EXPECT_DOUBLE_EQ(cfg.sim.scheme.tau_l, 2e-6);
    EXPECT_EQ(cfg.sim.seed, 9u);
}

TEST(RunConfig, Rejections) {
    EXPECT_THROW(parse_run_config("[run]\nn_gates = 0\n"), ConfigError);
    EXPECT_THROW(parse_run_config("[run]\nbogus = 1\n"), ConfigError);
    EXPECT_THROW(parse_run_config("[nowhere]\nx = 1\n"), ConfigError);
    EXPECT_THROW(parse_run_config("[source]\nmu = lots\n"), ConfigError);
    EXPECT_THROW(parse_run_config("[source]\nf_l_hz = 30000\n"), ConfigError);
    EXPECT_THROW(parse_run_config("[deadtime]\nscheme = magic\n"), ConfigError);
    EXPECT_THROW(parse_run_config("[histogram]\nbin_width_ns = 7\n"), ConfigError);
    EXPECT_THROW(parse_run_config("[histogram]\ndcr_window_ns = 20000\n"), ConfigError);
    EXPECT_THROW(parse_run_config("[run]\nn_gates = 1.5\n"), ConfigError);
    EXPECT_THROW(parse_run_config("[source\nmu = 1\n"), ParseError);
    EXPECT_THROW(load_run_config("/nonexistent/config.ini"), std::runtime_error);
}

TEST(RunConfig, HashIsStable) {
    EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
    EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}

TEST(Seeds, DerivedSeedsDiffer) {
    EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
    EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
    EXPECT_EQ(derive_seed(5, 3), derive_seed(5, 3));
}

TEST(ParallelMap, OrderedAndPropagatesErrors) {
    const auto out = parallel_map(100, 4, [](std::size_t i) { return static_cast<int>(i * i); });
    for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], static_cast<int>(i * i));
    EXPECT_THROW(parallel_map(10, 3,
                              [](std::size_t i) {
                                  if (i == 7) throw DegenerateError("boom");
                                  return 0;
                              }),
                 DegenerateError);
}
