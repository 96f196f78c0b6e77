#include <CLI11.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "afterpulse/cli.hpp"
#include "afterpulse/errors.hpp"
#include "afterpulse/estimators.hpp"
#include "afterpulse/fitting.hpp"
#include "afterpulse/histio.hpp"
#include "afterpulse/pipeline.hpp"
#include "afterpulse/run_config.hpp"

namespace afterpulse {
namespace {

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

std::string fmt(double v) { return format_double(v); }

std::ofstream open_output(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    return f;
}

RunConfig load_or_default(const std::string& path) {
    if (path.empty()) {
        RunConfig cfg;
        cfg.sim.dcr_per_gate = dcr_per_gate_from_hz(cfg.dcr_hz, cfg.sim.f_g);
        cfg.validate();
        cfg.text_hash = fnv1a_hex("");
        return cfg;
    }
    return load_run_config(path);
}

double meta_number(const Metadata& meta, const std::string& key) {
    const auto it = meta.find(key);
    if (it == meta.end()) {
        throw ConfigError("histogram has no '" + key + "' metadata; pass it on the command line");
    }
    double v = 0.0;
    const auto& s = it->second;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ConfigError("metadata '" + key + "' is not a number");
    }
    return v;
}

std::vector<DeadTimeKind> schemes_from(const std::string& name) {
    if (name == "both") return {DeadTimeKind::lt, DeadTimeKind::lt_ar};
    return {parse_dead_time_kind(name)};
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        throw ConfigError("column '" + name + "' not found");
    }
};

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

Table read_table(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    Table t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_csv(line);
        if (t.header.empty()) {
            t.header = std::move(fields);
            continue;
        }
        if (fields.size() != t.header.size()) throw ParseError("wrong number of fields", lineno);
        t.rows.push_back(std::move(fields));
    }
    if (t.header.empty()) throw ParseError("empty table", lineno);
    return t;
}

double parse_cell(const std::string& s, std::size_t row) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ParseError("'" + s + "' is not a number", row + 2);
    }
    return v;
}

double unit_scale(const std::string& unit) {
    if (unit == "s") return 1.0;
    if (unit == "us") return 1e-6;
    if (unit == "ns") return 1e-9;
    throw ConfigError("unknown unit '" + unit + "'");
}

// ---- subcommands ----

struct SimulateArgs {
    std::string config, out, dark_out, kind = "sweep";
    std::optional<std::uint64_t> seed;
    std::optional<double> mu;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
    RunConfig cfg = load_or_default(a.config);
    if (a.seed) cfg.sim.seed = *a.seed;
    if (a.mu) {
        if (!(*a.mu >= 0.0)) throw ConfigError("mu must be non-negative");
        cfg.sim.mu = *a.mu;
    }
    const std::string source = a.config.empty() ? "default" : a.config;

    if (a.kind == "gate") {
        const GateRun run = simulate_gate_pair(cfg.sim, cfg.bins_per_gate);
        GateHistogram lit = run.lit;
        lit.meta = {{"source", "simulate:" + source},
                    {"seed", std::to_string(cfg.sim.seed)},
                    {"config_hash", cfg.text_hash},
                    {"illumination", "lit"}};
        write_gate_histogram(lit, a.out);
        if (!a.dark_out.empty()) {
            GateHistogram dark = run.dark;
            dark.meta = lit.meta;
            dark.meta["illumination"] = "dark";
            dark.meta["seed"] = std::to_string(derive_seed(cfg.sim.seed, 1));
            write_gate_histogram(dark, a.dark_out);
        }
        out << "clicks,hidden_avalanches,live_time_s,rate_hz\n";
        out << run.lit_trace.click_gates.size() << ',' << run.lit_trace.hidden_avalanches << ','
            << fmt(lit.live_time()) << ',' << fmt(run.lit_trace.count_rate()) << '\n';
        return 0;
    }
    if (a.kind != "sweep") throw ConfigError("unknown histogram kind '" + a.kind + "' (expected sweep or gate)");
    if (!a.dark_out.empty()) err << "warning: --dark is ignored for sweep histograms\n";

    SweepRun run = simulate_sweep(cfg.sim, cfg);
    const double live = run.trace.acquisition_time() -
                        static_cast<double>(run.trace.click_gates.size()) * gate_dead_time(cfg.sim.scheme, cfg.sim.f_g);
    auto& meta = run.histogram.meta;
    meta["source"] = "simulate:" + source;
    meta["seed"] = std::to_string(cfg.sim.seed);
    meta["config_hash"] = cfg.text_hash;
    meta["tau_s_ns"] = fmt(run.tau_s * 1e9);
    meta["rate_hz"] = fmt(run.trace.count_rate());
    meta["gate_frequency_hz"] = fmt(cfg.sim.f_g);
    meta["n_gates"] = std::to_string(cfg.sim.n_gates);
    meta["hidden_avalanches"] = std::to_string(run.trace.hidden_avalanches);
    write_histogram(run.histogram, a.out);
    out << "clicks,hidden_avalanches,live_time_s,c0,rate_hz\n";
    out << run.trace.click_gates.size() << ',' << run.trace.hidden_avalanches << ',' << fmt(live) << ','
        << run.histogram.c0 << ',' << fmt(run.trace.count_rate()) << '\n';
    return 0;
}

struct EstimateArgs {
    std::string method = "custom", hist, dark, config;
    std::optional<double> tau_s_us, rate_hz, f_g, f_l;
    std::vector<double> window_us;
    std::int64_t yuan_gate = 1;
};

int cmd_estimate(const EstimateArgs& a, std::ostream& out, std::ostream& err) {
    const Method method = parse_method(a.method);
    if (method == Method::custom) {
        const SweepHistogram h = read_histogram(a.hist);
        TimeWindow window = a.config.empty() ? TimeWindow{} : load_run_config(a.config).dcr_window;
        if (!a.window_us.empty()) {
            if (a.window_us.size() != 2) throw ConfigError("--window expects begin,end in microseconds");
            window = {a.window_us[0] * 1e-6, a.window_us[1] * 1e-6};
        }
        const double tau_s = a.tau_s_us ? *a.tau_s_us * 1e-6 : meta_number(h.meta, "tau_s_ns") * 1e-9;
        const double rate = a.rate_hz ? *a.rate_hz : meta_number(h.meta, "rate_hz");
        const EstimateBundle b = estimate_and_derive(h, tau_s, window, rate);
        if (b.warning) err << "warning: C_ap is negative beyond 3 sigma; check tau_s and the dark window\n";
        if (b.p_exp < 0.0) err << "warning: p_exp < 0; model conversions are undefined\n";
        out << "method,p_exp,p_s,p1,p2,P_ap\n";
        out << "custom," << fmt(b.p_exp) << ',' << fmt(b.p_s) << ',' << fmt(b.p1) << ',' << fmt(b.p2) << ','
            << fmt(b.P_ap) << '\n';
        return 0;
    }

    if (a.dark.empty()) throw ConfigError("--dark is required for the " + a.method + " method");
    const GateHistogram lit = read_gate_histogram(a.hist);
    const GateHistogram dark = read_gate_histogram(a.dark);
    const double f_g = a.f_g ? *a.f_g : lit.gate_frequency();
    const double f_l = a.f_l ? *a.f_l : f_g / static_cast<double>(lit.gates_per_period);
    MethodEstimate e;
    if (method == Method::bethune) {
        e = estimate_bethune(lit, dark);
    } else if (method == Method::yuan) {
        e = estimate_yuan(lit, dark, f_g, f_l, a.yuan_gate);
    } else {
        e = estimate_coincidence(lit, dark, f_g, f_l);
    }
    out << "method,P_ap\n" << to_string(method) << ',' << fmt(e.value) << '\n';
    return 0;
}

struct CompareArgs {
    std::string config, out;
    std::optional<std::uint64_t> seed;
    std::vector<double> mu;
};

int cmd_compare(const CompareArgs& a, std::ostream& out) {
    RunConfig cfg = load_or_default(a.config);
    if (a.seed) cfg.sim.seed = *a.seed;
    const std::vector<double> mus = a.mu.empty() ? std::vector<double>{0.1, 1.0, 10.0} : a.mu;
    const auto rows = compare_methods(cfg, mus);

    std::ostringstream csv;
    csv << "method,mu,p_ap,sigma\n";
    for (const auto& r : rows) {
        csv << to_string(r.method) << ',' << fmt(r.mu) << ',' << fmt(r.p_ap) << ',' << fmt(r.sigma) << '\n';
    }
    if (a.out.empty()) {
        out << csv.str();
    } else {
        open_output(a.out) << csv.str();
    }
    return 0;
}

struct SweepArgs {
    std::string config, out, fit_out, scheme = "both";
    std::optional<std::uint64_t> seed;
    std::vector<double> tau_us;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
    RunConfig cfg = load_or_default(a.config);
    if (a.seed) cfg.sim.seed = *a.seed;
    std::vector<double> taus;
    const std::vector<double> grid_us = a.tau_us.empty() ? std::vector<double>{0.5, 1, 2, 5, 10, 20} : a.tau_us;
    for (const double t : grid_us) taus.push_back(t * 1e-6);
    const DeadTimeSweep sweep = sweep_deadtime(cfg, taus, schemes_from(a.scheme));

    std::ostringstream csv;
    csv << "scheme,tau_us,mu,rate_hz,c0,p_exp,p_exp_sigma,p_s,p1,p2\n";
    for (const auto& p : sweep.points) {
        const auto& e = p.estimate;
        csv << to_string(p.scheme) << ',' << fmt(p.tau * 1e6) << ',' << fmt(p.mu) << ',' << fmt(p.rate) << ','
            << e.c0 << ',' << fmt(e.p_exp) << ',' << fmt(e.p_exp_sigma) << ',' << fmt(e.p_s) << ','
            << fmt(e.p1) << ',' << fmt(e.p2) << '\n';
        if (e.p_exp < 0.0) {
            err << "warning: p_exp < 0 at " << to_string(p.scheme) << " tau=" << fmt(p.tau * 1e6) << " us\n";
        }
    }
    std::ostringstream fits;
    fits << "scheme,quantity,law,a,b,c,rss,iterations,converged\n";
    for (const auto& f : sweep.fits) {
        fits << to_string(f.scheme) << ',' << f.quantity << ',' << to_string(f.fit.law) << ',' << fmt(f.fit.a)
             << ',' << fmt(f.fit.b) << ',' << fmt(f.fit.c) << ',' << fmt(f.fit.rss) << ',' << f.fit.iterations
             << ',' << (f.fit.converged ? "true" : "false") << '\n';
    }
    if (sweep.fits.empty()) err << "note: fewer than four tau values, no fits\n";

    if (a.out.empty()) {
        out << csv.str();
        if (!sweep.fits.empty()) out << '\n' << fits.str();
        return 0;
    }
    open_output(a.out) << csv.str();
    std::string fit_path = a.fit_out;
    if (fit_path.empty()) {
        std::filesystem::path p(a.out);
        fit_path = (p.parent_path() / (p.stem().string() + "_fits.csv")).string();
    }
    if (!sweep.fits.empty()) open_output(fit_path) << fits.str();
    return 0;
}

struct FitArgs {
    std::string in, out, x = "tau_us", y = "p2", law = "both", group, x_unit = "us";
};

int cmd_fit(const FitArgs& a, std::ostream& out) {
    const Table t = read_table(a.in);
    const std::size_t xc = t.column(a.x);
    const std::size_t yc = t.column(a.y);
    const std::optional<std::size_t> gc = a.group.empty() ? std::nullopt : std::optional(t.column(a.group));
    const double scale = unit_scale(a.x_unit);
    std::vector<FitLaw> laws;
    if (a.law == "both") {
        laws = {FitLaw::power_law, FitLaw::exponential};
    } else {
        laws = {parse_fit_law(a.law)};
    }

    // Groups in order of first appearance.
    std::vector<std::string> order;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> data;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const std::string g = gc ? t.rows[r][*gc] : "";
        if (!data.count(g)) order.push_back(g);
        auto& [xs, ys] = data[g];
        xs.push_back(parse_cell(t.rows[r][xc], r) * scale);
        ys.push_back(parse_cell(t.rows[r][yc], r));
    }

    std::ostringstream csv;
    csv << "group,law,a,b,c,rss,iterations,converged\n";
    for (const auto& g : order) {
        const auto& [xs, ys] = data[g];
        for (const FitLaw law : laws) {
            const FitResult f = fit_curve(xs, ys, law);
            csv << g << ',' << to_string(law) << ',' << fmt(f.a) << ',' << fmt(f.b) << ',' << fmt(f.c) << ','
                << fmt(f.rss) << ',' << f.iterations << ',' << (f.converged ? "true" : "false") << '\n';
        }
    }
    if (a.out.empty()) {
        out << csv.str();
    } else {
        open_output(a.out) << csv.str();
    }
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Afterpulse characterisation toolkit for gated SPADs", "afterpulse"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Simulate a detector and write a histogram");
    simulate->add_option("--config", sim.config, "Run configuration (INI)");
    simulate->add_option("--out", sim.out, "Output histogram path")->required();
    simulate->add_option("--seed", sim.seed, "Override the configured seed");
    simulate->add_option("--mu", sim.mu, "Override the mean photon number");
    simulate->add_option("--kind", sim.kind, "sweep (oscilloscope) or gate (folded) histogram");
    simulate->add_option("--dark", sim.dark_out, "Also write the matching dark gate histogram");

    EstimateArgs est;
    auto* estimate = app.add_subcommand("estimate", "Estimate afterpulsing from histogram files");
    estimate->add_option("--method", est.method, "custom, bethune, yuan or coincidence");
    estimate->add_option("--hist,--in", est.hist, "Histogram (illuminated for gate methods)")->required();
    estimate->add_option("--dark", est.dark, "Dark gate histogram");
    estimate->add_option("--config", est.config, "Configuration supplying the dark-count window");
    estimate->add_option("--tau-s", est.tau_s_us, "Dead time, us (default: file metadata)");
    estimate->add_option("--rate", est.rate_hz, "Total count rate, Hz (default: file metadata)");
    estimate->add_option("--window", est.window_us, "Dark-count window begin,end in us")->delimiter(',');
    estimate->add_option("--f-g", est.f_g, "Gate frequency, Hz");
    estimate->add_option("--f-l", est.f_l, "Laser frequency, Hz");
    estimate->add_option("--yuan-gate", est.yuan_gate, "Non-illuminated gate offset for Yuan");

    CompareArgs cmp;
    auto* compare = app.add_subcommand("compare", "Compare the four methods across mean photon numbers");
    compare->add_option("--config", cmp.config, "Run configuration (INI)");
    compare->add_option("--mu", cmp.mu, "Mean photon numbers")->delimiter(',');
    compare->add_option("--out", cmp.out, "Output CSV (default: stdout)");
    compare->add_option("--seed", cmp.seed, "Override the configured seed");

    SweepArgs sw;
    auto* sweep = app.add_subcommand("sweep-deadtime", "Afterpulsing versus dead time for LT and LT+AR");
    sweep->add_option("--config", sw.config, "Run configuration (INI)");
    sweep->add_option("--tau", sw.tau_us, "Dead times in us")->delimiter(',');
    sweep->add_option("--scheme", sw.scheme, "lt, lt-ar or both");
    sweep->add_option("--out", sw.out, "Output CSV (default: stdout)");
    sweep->add_option("--fit-out", sw.fit_out, "Fit table (default: <out stem>_fits.csv)");
    sweep->add_option("--seed", sw.seed, "Override the configured seed");

    FitArgs ft;
    auto* fit = app.add_subcommand("fit", "Fit power-law and exponential laws to a CSV table");
    fit->add_option("--in", ft.in, "Input CSV with a header line")->required();
    fit->add_option("--x", ft.x, "Dead-time column");
    fit->add_option("--y", ft.y, "Probability column");
    fit->add_option("--x-unit", ft.x_unit, "Unit of the x column: s, us or ns");
    fit->add_option("--law", ft.law, "power, exp or both");
    fit->add_option("--group", ft.group, "Column splitting the table into independent fits");
    fit->add_option("--out", ft.out, "Output CSV (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : kUsageError;
    }

    try {
        if (*simulate) return cmd_simulate(sim, out, err);
        if (*estimate) return cmd_estimate(est, out, err);
        if (*compare) return cmd_compare(cmp, out);
        if (*sweep) return cmd_sweep(sw, out, err);
        if (*fit) return cmd_fit(ft, out);
    } catch (const NoRootError& e) {
        err << "error: " << e.what() << '\n';
        return kDataError;
    } catch (const DegenerateError& e) {
        err << "error: " << e.what() << '\n';
        return kDataError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    }
    return kUsageError;
}

}  // namespace afterpulse
