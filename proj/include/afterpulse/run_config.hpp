#pragma once

// Sectioned key-value run configuration.
//
//   [detector]  f_g_hz pde dcr_hz p_ap_internal tau_detrap_us
//   [source]    f_l_hz mu
//   [deadtime]  scheme tau_l_us tau_c_us tau_er_us ramp
//   [run]       n_gates seed threads
//   [histogram] sweep_ns bin_width_ns dcr_window_ns bins_per_gate
//   [compare]   custom_gates gate_method_gates yuan_ratio yuan_gate
//   [sweep]     target_rate_hz calibration_gates
//
// Every key is optional; unknown sections and keys are rejected.
// `dcr_window_ns` is "begin,end".

#include <cstdint>
#include <filesystem>
#include <string>

#include "afterpulse/estimators.hpp"
#include "afterpulse/simulator.hpp"

namespace afterpulse {

struct RunConfig {
    SimConfig sim;
    double dcr_hz = 100.0;
    unsigned threads = 0;  // 0: hardware concurrency

    double sweep = 25e-6;
    double bin_width = 10e-9;
    TimeWindow dcr_window{20e-6, 25e-6};
    std::int64_t bins_per_gate = 10;

    std::int64_t custom_gates = 50'000'000;
    std::int64_t gate_method_gates = 200'000'000;
    std::int64_t yuan_ratio = 50;  // f_g / f_l for Yuan and coincidence runs
    std::int64_t yuan_gate = 1;

    double target_rate_hz = 1500.0;
    std::int64_t calibration_gates = 20'000'000;

    std::string text_hash;  // FNV-1a of the source text, hex

    void validate() const;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

std::string fnv1a_hex(const std::string& text);

}  // namespace afterpulse
