#include "afterpulse/histio.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string_view>
#include <system_error>
#include <vector>

#include "afterpulse/errors.hpp"

namespace afterpulse {
namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

bool parse_int(std::string_view text, std::int64_t& out) {
    text = trim(text);
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc{} && ptr == end && !text.empty();
}

struct RawFile {
    Metadata header;
    std::vector<std::pair<std::int64_t, std::int64_t>> records;
    std::vector<std::size_t> record_lines;
    std::size_t last_line = 0;
};

RawFile read_raw(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    RawFile raw;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view view = trim(line);
        if (view.empty()) continue;
        if (view.front() == '#') {
            const auto body = view.substr(1);
            const auto eq = body.find('=');
            if (eq == std::string_view::npos) continue;
            const auto key = trim(body.substr(0, eq));
            if (key.empty()) throw ParseError("metadata line without key", lineno);
            raw.header[std::string(key)] = std::string(trim(body.substr(eq + 1)));
            continue;
        }
        const auto comma = view.find(',');
        std::int64_t start = 0;
        std::int64_t count = 0;
        if (comma == std::string_view::npos || !parse_int(view.substr(0, comma), start) ||
            !parse_int(view.substr(comma + 1), count)) {
            throw ParseError("expected 'bin_start,count' with integer fields", lineno);
        }
        if (count < 0) throw ParseError("negative count", lineno);
        raw.records.emplace_back(start, count);
        raw.record_lines.push_back(lineno);
    }
    raw.last_line = lineno;
    return raw;
}

std::int64_t take_int(Metadata& header, const std::string& key, std::size_t line) {
    const auto it = header.find(key);
    if (it == header.end()) throw ParseError("missing mandatory key '" + key + "'", line);
    std::int64_t value = 0;
    if (!parse_int(it->second, value)) {
        throw ParseError("key '" + key + "' is not an integer", line);
    }
    header.erase(it);
    return value;
}

Counts collect_bins(const RawFile& raw, std::int64_t width, const char* unit) {
    if (raw.records.empty()) throw ParseError("histogram has no bins", raw.last_line);
    Counts bins(static_cast<Eigen::Index>(raw.records.size()));
    for (std::size_t i = 0; i < raw.records.size(); ++i) {
        const auto [start, count] = raw.records[i];
        if (start != static_cast<std::int64_t>(i) * width) {
            throw ParseError(std::string("bin start must be index * bin width in ") + unit,
                             raw.record_lines[i]);
        }
        bins[static_cast<Eigen::Index>(i)] = count;
    }
    return bins;
}

void write_meta(std::ostream& out, const Metadata& meta, std::initializer_list<std::string_view> reserved) {
    for (const auto& [key, value] : meta) {
        if (std::find(reserved.begin(), reserved.end(), key) != reserved.end()) continue;
        if (key.find_first_of("=\n") != std::string::npos || value.find('\n') != std::string::npos) {
            throw std::invalid_argument("metadata entry '" + key + "' cannot be serialised");
        }
        out << "# " << key << " = " << value << '\n';
    }
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

void SweepHistogram::validate() const {
    if (bin_width_ns <= 0) throw DomainError("bin width must be positive");
    if (bins.size() == 0) throw DomainError("histogram has no bins");
    if ((bins < 0).any()) throw DomainError("histogram counts must be non-negative");
    if (c0 < 0) throw DomainError("c0 must be non-negative");
    const std::int64_t span = bins.size() * bin_width_ns;
    if (span < sweep_ns - bin_width_ns || span > sweep_ns + bin_width_ns) {
        throw DomainError("bins do not cover the sweep");
    }
}

bool operator==(const SweepHistogram& a, const SweepHistogram& b) {
    return a.bin_width_ns == b.bin_width_ns && a.sweep_ns == b.sweep_ns && a.c0 == b.c0 &&
           a.bins.size() == b.bins.size() && (a.bins == b.bins).all() && a.meta == b.meta;
}

std::int64_t GateHistogram::bins_per_gate() const {
    return gates_per_period > 0 ? bins.size() / gates_per_period : 0;
}

double GateHistogram::period() const {
    return static_cast<double>(bins.size() * bin_width_ps) * 1e-12;
}

double GateHistogram::gate_frequency() const {
    return static_cast<double>(gates_per_period) / period();
}

double GateHistogram::acquisition_time() const {
    return static_cast<double>(acquisition_gates) / gate_frequency();
}

double GateHistogram::live_time() const {
    const double dead = static_cast<double>(total()) * static_cast<double>(dead_time_ps) * 1e-12;
    return std::max(acquisition_time() - dead, 0.0);
}

std::int64_t GateHistogram::gate_counts(std::int64_t gate) const {
    const auto per = bins_per_gate();
    if (gate < 0 || gate >= gates_per_period) throw std::out_of_range("gate index outside period");
    return bins.segment(gate * per, per).sum();
}

void GateHistogram::validate() const {
    if (bin_width_ps <= 0) throw DomainError("bin width must be positive");
    if (gates_per_period < 1) throw DomainError("gates_per_period must be >= 1");
    if (bins.size() == 0 || bins.size() % gates_per_period != 0) {
        throw DomainError("bin count must be a positive multiple of gates_per_period");
    }
    if ((bins < 0).any()) throw DomainError("histogram counts must be non-negative");
    if (acquisition_gates < 0 || dead_time_ps < 0) throw DomainError("negative acquisition data");
}

bool operator==(const GateHistogram& a, const GateHistogram& b) {
    return a.bin_width_ps == b.bin_width_ps && a.gates_per_period == b.gates_per_period &&
           a.acquisition_gates == b.acquisition_gates && a.dead_time_ps == b.dead_time_ps &&
           a.bins.size() == b.bins.size() && (a.bins == b.bins).all() && a.meta == b.meta;
}

SweepHistogram merge_bins(const SweepHistogram& h, std::int64_t factor) {
    if (factor < 1 || h.bins.size() % factor != 0) {
        throw DomainError("merge factor must be >= 1 and divide the bin count");
    }
    SweepHistogram out = h;
    out.bin_width_ns = h.bin_width_ns * factor;
    out.bins = h.bins.reshaped(factor, h.bins.size() / factor).colwise().sum().transpose();
    return out;
}

Eigen::ArrayXd normalize_for_plot(const SweepHistogram& h, double c_dcr) {
    const double norm = static_cast<double>(h.c0) - c_dcr;
    if (!(norm > 0.0)) throw DegenerateError("normalize_for_plot: c0 must exceed c_dcr");
    return h.bins.cast<double>() / norm;
}

void write_histogram(const SweepHistogram& h, const std::filesystem::path& path) {
    h.validate();
    std::ostringstream out;
    out << "# bin_width_ns = " << h.bin_width_ns << '\n';
    out << "# sweep_ns = " << h.sweep_ns << '\n';
    out << "# c0 = " << h.c0 << '\n';
    write_meta(out, h.meta, {"bin_width_ns", "sweep_ns", "c0"});
    for (Eigen::Index i = 0; i < h.bins.size(); ++i) {
        out << i * h.bin_width_ns << ',' << h.bins[i] << '\n';
    }
    write_file(path, out.str());
}

SweepHistogram read_histogram(const std::filesystem::path& path) {
    RawFile raw = read_raw(path);
    const std::size_t header_line = raw.record_lines.empty() ? raw.last_line : raw.record_lines.front();
    SweepHistogram h;
    h.bin_width_ns = take_int(raw.header, "bin_width_ns", header_line);
    h.sweep_ns = take_int(raw.header, "sweep_ns", header_line);
    h.c0 = take_int(raw.header, "c0", header_line);
    if (h.bin_width_ns <= 0) throw ParseError("bin_width_ns must be positive", header_line);
    if (h.c0 < 0) throw ParseError("c0 must be non-negative", header_line);
    h.bins = collect_bins(raw, h.bin_width_ns, "ns");
    h.meta = std::move(raw.header);
    try {
        h.validate();
    } catch (const DomainError& e) {
        throw ParseError(e.what(), raw.last_line);
    }
    return h;
}

void write_gate_histogram(const GateHistogram& h, const std::filesystem::path& path) {
    h.validate();
    std::ostringstream out;
    out << "# kind = gate\n";
    out << "# bin_width_ps = " << h.bin_width_ps << '\n';
    out << "# gates_per_period = " << h.gates_per_period << '\n';
    out << "# acquisition_gates = " << h.acquisition_gates << '\n';
    out << "# dead_time_ps = " << h.dead_time_ps << '\n';
    write_meta(out, h.meta,
               {"kind", "bin_width_ps", "gates_per_period", "acquisition_gates", "dead_time_ps"});
    for (Eigen::Index i = 0; i < h.bins.size(); ++i) {
        out << i * h.bin_width_ps << ',' << h.bins[i] << '\n';
    }
    write_file(path, out.str());
}

GateHistogram read_gate_histogram(const std::filesystem::path& path) {
    RawFile raw = read_raw(path);
    const std::size_t header_line = raw.record_lines.empty() ? raw.last_line : raw.record_lines.front();
    const auto kind = raw.header.find("kind");
    if (kind == raw.header.end() || kind->second != "gate") {
        throw ParseError("not a gate histogram (missing '# kind = gate')", header_line);
    }
    raw.header.erase(kind);
    GateHistogram h;
    h.bin_width_ps = take_int(raw.header, "bin_width_ps", header_line);
    h.gates_per_period = take_int(raw.header, "gates_per_period", header_line);
    h.acquisition_gates = take_int(raw.header, "acquisition_gates", header_line);
    h.dead_time_ps = take_int(raw.header, "dead_time_ps", header_line);
    if (h.bin_width_ps <= 0) throw ParseError("bin_width_ps must be positive", header_line);
    h.bins = collect_bins(raw, h.bin_width_ps, "ps");
    h.meta = std::move(raw.header);
    try {
        h.validate();
    } catch (const DomainError& e) {
        throw ParseError(e.what(), raw.last_line);
    }
    return h;
}

}  // namespace afterpulse
