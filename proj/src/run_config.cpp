#include "afterpulse/run_config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "afterpulse/errors.hpp"

namespace afterpulse {
namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& raw) {
    const std::string v = trim(raw);
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out)) {
        throw ConfigError("'" + key + "': expected a number, got '" + raw + "'");
    }
    return out;
}

std::int64_t to_int(const std::string& key, const std::string& raw) {
    const double d = to_double(key, raw);
    if (d != std::floor(d) || std::abs(d) > 9e18) {
        throw ConfigError("'" + key + "': expected an integer, got '" + raw + "'");
    }
    return static_cast<std::int64_t>(d);
}

TimeWindow to_window_ns(const std::string& key, const std::string& raw) {
    const auto comma = raw.find(',');
    if (comma == std::string::npos) throw ConfigError("'" + key + "': expected 'begin,end'");
    return {to_double(key, raw.substr(0, comma)) * 1e-9, to_double(key, raw.substr(comma + 1)) * 1e-9};
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, std::map<std::string, Setter>>& setters() {
    static const std::map<std::string, std::map<std::string, Setter>> table = {
        {"detector",
         {
             {"f_g_hz", [](RunConfig& c, auto& k, auto& v) { c.sim.f_g = to_double(k, v); }},
             {"pde", [](RunConfig& c, auto& k, auto& v) { c.sim.pde = to_double(k, v); }},
             {"dcr_hz", [](RunConfig& c, auto& k, auto& v) { c.dcr_hz = to_double(k, v); }},
             {"p_ap_internal", [](RunConfig& c, auto& k, auto& v) { c.sim.p_ap_internal = to_double(k, v); }},
             {"tau_detrap_us", [](RunConfig& c, auto& k, auto& v) { c.sim.tau_detrap = to_double(k, v) * 1e-6; }},
         }},
        {"source",
         {
             {"f_l_hz", [](RunConfig& c, auto& k, auto& v) { c.sim.f_l = to_double(k, v); }},
             {"mu", [](RunConfig& c, auto& k, auto& v) { c.sim.mu = to_double(k, v); }},
         }},
        {"deadtime",
         {
             {"scheme", [](RunConfig& c, auto&, auto& v) { c.sim.scheme.kind = parse_dead_time_kind(trim(v)); }},
             {"tau_l_us", [](RunConfig& c, auto& k, auto& v) { c.sim.scheme.tau_l = to_double(k, v) * 1e-6; }},
             {"tau_c_us", [](RunConfig& c, auto& k, auto& v) { c.sim.scheme.tau_c = to_double(k, v) * 1e-6; }},
             {"tau_er_us", [](RunConfig& c, auto& k, auto& v) { c.sim.scheme.tau_er = to_double(k, v) * 1e-6; }},
             {"ramp", [](RunConfig& c, auto&, auto& v) { c.sim.scheme.ramp = parse_recovery_ramp(trim(v)); }},
         }},
        {"run",
         {
             {"n_gates", [](RunConfig& c, auto& k, auto& v) { c.sim.n_gates = to_int(k, v); }},
             {"seed",
              [](RunConfig& c, auto& k, auto& v) {
                  const auto s = to_int(k, v);
                  if (s < 0) throw ConfigError("'seed' must be non-negative");
                  c.sim.seed = static_cast<std::uint64_t>(s);
              }},
             {"threads",
              [](RunConfig& c, auto& k, auto& v) {
                  const auto t = to_int(k, v);
                  if (t < 0 || t > 4096) throw ConfigError("'threads' must lie in [0, 4096]");
                  c.threads = static_cast<unsigned>(t);
              }},
         }},
        {"histogram",
         {
             {"sweep_ns", [](RunConfig& c, auto& k, auto& v) { c.sweep = to_double(k, v) * 1e-9; }},
             {"bin_width_ns", [](RunConfig& c, auto& k, auto& v) { c.bin_width = to_double(k, v) * 1e-9; }},
             {"dcr_window_ns", [](RunConfig& c, auto& k, auto& v) { c.dcr_window = to_window_ns(k, v); }},
             {"bins_per_gate", [](RunConfig& c, auto& k, auto& v) { c.bins_per_gate = to_int(k, v); }},
         }},
        {"compare",
         {
             {"custom_gates", [](RunConfig& c, auto& k, auto& v) { c.custom_gates = to_int(k, v); }},
             {"gate_method_gates", [](RunConfig& c, auto& k, auto& v) { c.gate_method_gates = to_int(k, v); }},
             {"yuan_ratio", [](RunConfig& c, auto& k, auto& v) { c.yuan_ratio = to_int(k, v); }},
             {"yuan_gate", [](RunConfig& c, auto& k, auto& v) { c.yuan_gate = to_int(k, v); }},
         }},
        {"sweep",
         {
             {"target_rate_hz", [](RunConfig& c, auto& k, auto& v) { c.target_rate_hz = to_double(k, v); }},
             {"calibration_gates", [](RunConfig& c, auto& k, auto& v) { c.calibration_gates = to_int(k, v); }},
         }},
    };
    return table;
}

}  // namespace

void RunConfig::validate() const {
    SimConfig check = sim;
    check.dcr_per_gate = dcr_per_gate_from_hz(dcr_hz, sim.f_g);
    check.validate();
    if (!(dcr_hz >= 0.0)) throw ConfigError("dcr_hz must be non-negative");
    if (!(bin_width > 0.0) || !(sweep > bin_width)) throw ConfigError("histogram needs sweep > bin_width > 0");
    const double bins = sweep / bin_width;
    if (std::abs(bins - std::round(bins)) > 1e-6) throw ConfigError("bin_width must divide sweep");
    if (!(dcr_window.begin >= 0.0) || !(dcr_window.begin < dcr_window.end) || dcr_window.end > sweep * (1 + 1e-12)) {
        throw ConfigError("dcr_window_ns must be a non-empty interval inside the sweep");
    }
    if (check.scheme.statistical_dead_time() >= dcr_window.begin) {
        throw ConfigError("dead time must end before the dark-count window");
    }
    if (bins_per_gate < 1) throw ConfigError("bins_per_gate must be >= 1");
    if (custom_gates < 1 || gate_method_gates < 1 || calibration_gates < 1) {
        throw ConfigError("gate counts must be >= 1");
    }
    if (yuan_ratio < 2) throw ConfigError("yuan_ratio must be >= 2");
    if (yuan_gate < 1 || yuan_gate >= yuan_ratio) throw ConfigError("yuan_gate must lie in [1, yuan_ratio)");
    if (!(target_rate_hz > 0.0)) throw ConfigError("target_rate_hz must be positive");
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (const unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunConfig parse_run_config(const std::string& text) {
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ParseError(e.message(), e.line());
    }

    RunConfig cfg;
    const auto& table = setters();
    for (const auto& [section, body] : tree) {
        const auto sec = table.find(section);
        if (sec == table.end()) throw ConfigError("unknown config section [" + section + "]");
        if (!body.data().empty() && body.empty()) {
            throw ConfigError("key '" + section + "' outside any section");
        }
        for (const auto& [key, node] : body) {
            const auto setter = sec->second.find(key);
            if (setter == sec->second.end()) {
                throw ConfigError("unknown config key '" + key + "' in [" + section + "]");
            }
            setter->second(cfg, key, node.data());
        }
    }
    cfg.sim.dcr_per_gate = dcr_per_gate_from_hz(cfg.dcr_hz, cfg.sim.f_g);
    cfg.validate();
    cfg.text_hash = fnv1a_hex(text);
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str());
}

}  // namespace afterpulse
