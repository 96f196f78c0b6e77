#pragma once

// Histogram data model and the text file format shared by simulator output
// and measured data.
//
// Sweep histogram file:
//   # bin_width_ns = 10
//   # sweep_ns = 25000
//   # c0 = 1234
//   # <key> = <value>          (any further metadata)
//   0,17
//   10,3
//   ...
// One `bin_start_ns,count` record per bin, integer fields, '\n' line ends.
// The trigger bin is carried by `c0` and is not part of the records.
//
// Gate histogram file: same grammar with `# kind = gate` and picosecond
// keys `bin_width_ps`, `gates_per_period`, `acquisition_gates`,
// `dead_time_ps`; records are `bin_start_ps,count`.

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace afterpulse {

using Counts = Eigen::Array<std::int64_t, Eigen::Dynamic, 1>;
using Metadata = std::map<std::string, std::string>;

struct SweepHistogram {
    std::int64_t bin_width_ns = 10;
    std::int64_t sweep_ns = 0;
    Counts bins;
    std::int64_t c0 = 0;
    Metadata meta;

    double bin_width() const noexcept { return static_cast<double>(bin_width_ns) * 1e-9; }
    double sweep() const noexcept { return static_cast<double>(sweep_ns) * 1e-9; }
    std::int64_t total() const { return bins.sum(); }

    void validate() const;
};

bool operator==(const SweepHistogram& a, const SweepHistogram& b);

// Click counts folded over one analysis period (one or more gates).
struct GateHistogram {
    std::int64_t bin_width_ps = 320;
    std::int64_t gates_per_period = 2;
    std::int64_t acquisition_gates = 0;
    std::int64_t dead_time_ps = 0;
    Counts bins;
    Metadata meta;

    std::int64_t bins_per_gate() const;
    double period() const;          // s
    double gate_frequency() const;  // Hz
    double acquisition_time() const;
    // Acquisition time minus one dead time per registered click.
    double live_time() const;
    std::int64_t gate_counts(std::int64_t gate) const;
    std::int64_t total() const { return bins.sum(); }

    void validate() const;
};

bool operator==(const GateHistogram& a, const GateHistogram& b);

SweepHistogram merge_bins(const SweepHistogram& h, std::int64_t factor);

// Bins divided by (c0 - c_dcr). For plots only.
Eigen::ArrayXd normalize_for_plot(const SweepHistogram& h, double c_dcr);

void write_histogram(const SweepHistogram& h, const std::filesystem::path& path);
SweepHistogram read_histogram(const std::filesystem::path& path);

void write_gate_histogram(const GateHistogram& h, const std::filesystem::path& path);
GateHistogram read_gate_histogram(const std::filesystem::path& path);

// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace afterpulse
