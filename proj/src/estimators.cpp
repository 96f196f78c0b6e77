#include "afterpulse/estimators.hpp"

#include <cmath>
#include <string>

#include "afterpulse/errors.hpp"
#include "afterpulse/models.hpp"

namespace afterpulse {
namespace {

constexpr double kNsTolerance = 1e-6;

void require_matching(const GateHistogram& lit, const GateHistogram& dark) {
    lit.validate();
    dark.validate();
    if (lit.gates_per_period != dark.gates_per_period || lit.bins.size() != dark.bins.size()) {
        throw ConfigError("illuminated and dark histograms must share the gate layout");
    }
    if (!(dark.live_time() > 0.0) || !(lit.live_time() > 0.0)) {
        throw DegenerateError("histogram live time is zero");
    }
}

double integer_ratio(const GateHistogram& lit, double f_g, double f_l) {
    if (!(f_g > 0.0) || !(f_l > 0.0)) throw ConfigError("frequencies must be positive");
    const double ratio = f_g / f_l;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
        throw ConfigError("f_g / f_l must be an integer");
    }
    if (std::llround(ratio) != lit.gates_per_period) {
        throw ConfigError("f_g / f_l does not match the histogram's gates per period");
    }
    return std::round(ratio);
}

double n(std::int64_t count) { return static_cast<double>(count); }

}  // namespace

std::int64_t illuminated_gate(const GateHistogram& lit) {
    std::int64_t best = 0;
    for (std::int64_t g = 1; g < lit.gates_per_period; ++g) {
        if (lit.gate_counts(g) > lit.gate_counts(best)) best = g;
    }
    return best;
}

MethodEstimate estimate_bethune(const GateHistogram& lit, const GateHistogram& dark) {
    if (lit.gates_per_period != 2) {
        throw ConfigError("Bethune method requires a two-gate period (f_l = f_g / 2)");
    }
    require_matching(lit, dark);
    const std::int64_t lit_gate = illuminated_gate(lit);
    const std::int64_t ni_gate = 1 - lit_gate;
    const double n_ni = n(lit.gate_counts(ni_gate));
    const double n_lit = n(lit.gate_counts(lit_gate));
    const double n_dark = n(dark.gate_counts(ni_gate));
    const double k = lit.live_time() / dark.live_time();

    const double den = n_ni + n_lit;  // R_de * T
    if (den <= 0.0) throw DegenerateError("Bethune method: no counts in the illuminated histogram");
    const double num = n_ni - k * n_dark;
    const double d_ni = 1.0 / den - num / (den * den);
    const double d_lit = -num / (den * den);
    const double d_dark = -k / den;
    return {num / den, std::sqrt(d_ni * d_ni * n_ni + d_lit * d_lit * n_lit + d_dark * d_dark * n_dark)};
}

MethodEstimate estimate_yuan(const GateHistogram& lit, const GateHistogram& dark, double f_g,
                             double f_l, std::int64_t ni_offset) {
    const double ratio = integer_ratio(lit, f_g, f_l);
    require_matching(lit, dark);
    if (ni_offset < 1 || ni_offset >= lit.gates_per_period) {
        throw ConfigError("Yuan gate offset must lie in [1, gates_per_period)");
    }
    const std::int64_t lit_gate = illuminated_gate(lit);
    const std::int64_t ni_gate = (lit_gate + ni_offset) % lit.gates_per_period;
    const double n_ni = n(lit.gate_counts(ni_gate));
    const double n_c = n(lit.gate_counts(lit_gate));
    const double n_dark = n(dark.gate_counts(ni_gate));
    const double k = lit.live_time() / dark.live_time();

    const double den = n_c - n_ni;
    if (den <= 0.0) throw DegenerateError("Yuan method: R_c_de must exceed R_ni");
    const double num = n_ni - k * n_dark;
    const double d_ni = ratio * (1.0 / den + num / (den * den));
    const double d_c = -ratio * num / (den * den);
    const double d_dark = -ratio * k / den;
    return {ratio * num / den,
            std::sqrt(d_ni * d_ni * n_ni + d_c * d_c * n_c + d_dark * d_dark * n_dark)};
}

MethodEstimate estimate_coincidence(const GateHistogram& lit, const GateHistogram& dark, double f_g,
                                    double f_l) {
    integer_ratio(lit, f_g, f_l);
    require_matching(lit, dark);
    const std::int64_t lit_gate = illuminated_gate(lit);
    const double n_c = n(lit.gate_counts(lit_gate));
    const double n_other = n(lit.total()) - n_c;
    const double n_dark = n(dark.total());
    const double k = lit.live_time() / dark.live_time();
    const double dark_share = 1.0 - f_l / f_g;

    if (n_c <= 0.0) throw DegenerateError("coincidence method: no coincident counts");
    const double num = n_other - dark_share * k * n_dark;
    const double d_other = 1.0 / n_c;
    const double d_c = -num / (n_c * n_c);
    const double d_dark = -dark_share * k / n_c;
    return {num / n_c,
            std::sqrt(d_other * d_other * n_other + d_c * d_c * n_c + d_dark * d_dark * n_dark)};
}

namespace {

struct BinRanges {
    Eigen::Array<bool, Eigen::Dynamic, 1> dcr;
    Eigen::Array<bool, Eigen::Dynamic, 1> ap;
};

Eigen::Array<bool, Eigen::Dynamic, 1> window_bins(const SweepHistogram& h, const TimeWindow& window) {
    const double begin_ns = window.begin * 1e9;
    const double end_ns = window.end * 1e9;
    if (!(begin_ns < end_ns) || begin_ns < -kNsTolerance ||
        end_ns > static_cast<double>(h.sweep_ns) + kNsTolerance) {
        throw DomainError("dark-count window must be a non-empty interval inside the sweep");
    }
    Eigen::Array<bool, Eigen::Dynamic, 1> inside(h.bins.size());
    for (Eigen::Index i = 0; i < h.bins.size(); ++i) {
        const double lo = static_cast<double>(i * h.bin_width_ns);
        const double hi = lo + static_cast<double>(h.bin_width_ns);
        inside[i] = lo >= begin_ns - kNsTolerance && hi <= end_ns + kNsTolerance;
    }
    if (!inside.any()) throw DegenerateError("dark-count window contains no whole bins");
    return inside;
}

}  // namespace

double dcr_baseline(const SweepHistogram& h, const TimeWindow& window) {
    h.validate();
    const auto inside = window_bins(h, window);
    const double total = inside.select(h.bins, 0).cast<double>().sum();
    return total / static_cast<double>(inside.count());
}

EstimateBundle estimate_custom(const SweepHistogram& h, double tau_s, const TimeWindow& window) {
    h.validate();
    if (h.c0 <= 0) throw DegenerateError("estimate_custom: no trigger clicks (c0 = 0)");
    if (!(tau_s >= 0.0) || !(tau_s < h.sweep())) {
        throw DomainError("estimate_custom: tau_s must lie inside the sweep");
    }
    const auto dcr = window_bins(h, window);
    const double tau_ns = tau_s * 1e9;
    Eigen::Array<bool, Eigen::Dynamic, 1> ap(h.bins.size());
    for (Eigen::Index i = 0; i < h.bins.size(); ++i) {
        ap[i] = static_cast<double>((i + 1) * h.bin_width_ns) > tau_ns + kNsTolerance;
    }

    const Eigen::ArrayXd counts = h.bins.cast<double>();
    const double n_dcr = static_cast<double>(dcr.count());
    const double n_ap = static_cast<double>(ap.count());
    const double c_dcr = dcr.select(counts, 0.0).sum() / n_dcr;
    const double c_ap = ap.select(counts, 0.0).sum() - n_ap * c_dcr;

    // Each bin enters C_ap with weight [ap] - (N_ap / N_dcr) [dcr].
    const Eigen::ArrayXd weight =
        ap.cast<double>() - (n_ap / n_dcr) * dcr.cast<double>();
    const double sigma_c_ap = std::sqrt((weight.square() * counts).sum());

    EstimateBundle out;
    out.c0 = h.c0;
    out.c_dcr = c_dcr;
    out.c_ap = c_ap;
    out.p_exp = c_ap / static_cast<double>(h.c0);
    out.p_exp_sigma = sigma_c_ap / static_cast<double>(h.c0);
    out.warning = c_ap < -3.0 * sigma_c_ap;
    return out;
}

EstimateBundle derive_all(double p_exp, double rate, double tau_s) {
    const ExperimentalAfterpulse exp{p_exp, rate, tau_s};
    exp.validate();
    EstimateBundle out;
    out.p_exp = p_exp;
    out.p_n = rate * tau_s;
    out.p0 = out.p_n / (1.0 + p_exp);
    out.p_s = p_s_from_rate(exp);
    out.p1 = invert_first(p_exp);
    // invert_second tends to invert_first as p0 -> 0.
    out.p2 = out.p0 > 0.0 ? invert_second(p_exp, out.p0) : out.p1;
    out.P_ap = universal_P_ap(p_exp, out.p0);
    return out;
}

EstimateBundle estimate_and_derive(const SweepHistogram& h, double tau_s, const TimeWindow& window,
                                   double rate) {
    const EstimateBundle counts = estimate_custom(h, tau_s, window);
    if (counts.p_exp < 0.0) return counts;
    EstimateBundle out = derive_all(counts.p_exp, rate, tau_s);
    out.p_exp_sigma = counts.p_exp_sigma;
    out.c0 = counts.c0;
    out.c_ap = counts.c_ap;
    out.c_dcr = counts.c_dcr;
    out.warning = counts.warning;
    return out;
}

}  // namespace afterpulse
