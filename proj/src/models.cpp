#include "afterpulse/models.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "afterpulse/errors.hpp"

namespace afterpulse {
namespace {

constexpr double kBisectionTolerance = 1e-12;
constexpr double kUpperGuard = 1e-9;

void require_probability(double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) {
        throw DomainError(std::string(what) + " must lie in [0, 1], got " + std::to_string(v));
    }
}

void require_p_ap(double p_ap) {
    if (!(p_ap >= 0.0 && p_ap < 1.0)) {
        throw DomainError("p_ap must lie in [0, 1), got " + std::to_string(p_ap));
    }
}

// f(lo) < 0 <= f(hi) is required by callers.
template <typename F>
double bisect(F&& f, double lo, double hi) {
    for (int it = 0; it < 200 && hi - lo > kBisectionTolerance; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

ModelKind parse_model_kind(std::string_view name) {
    if (name == "simple") return ModelKind::simple;
    if (name == "first") return ModelKind::first;
    if (name == "second") return ModelKind::second;
    throw ConfigError("unknown model '" + std::string(name) + "'");
}

std::string_view to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::simple: return "simple";
        case ModelKind::first: return "first";
        case ModelKind::second: return "second";
    }
    return "?";
}

void ModelParams::validate() const {
    require_p_ap(p_ap);
    if (order_max < 1) throw DomainError("order_max must be >= 1");
}

void ExperimentalAfterpulse::validate() const {
    if (!(p_exp >= 0.0)) throw DomainError("p_exp must be non-negative");
    if (!(rate >= 0.0)) throw DomainError("rate must be non-negative");
    if (!(tau_s > 0.0)) throw DomainError("tau_s must be positive");
    if (!(rate * tau_s < 1.0 + p_exp)) {
        throw DomainError("rate * tau_s must be below 1 + p_exp");
    }
}

GeometricSums geometric_sums(double p_ap) {
    require_p_ap(p_ap);
    const double q = 1.0 - p_ap;
    return {1.0 / q, p_ap / (q * q * (1.0 + p_ap))};
}

double simple_forward(double p0, double p_s) {
    require_probability(p0, "p0");
    require_probability(p_s, "p_s");
    return p0 * (1.0 + p_s - p0 * p_s);
}

ClickProbabilities first_order_forward(double p0, const ModelParams& params) {
    require_probability(p0, "p0");
    params.validate();
    return {p0, p0 / (1.0 - params.p_ap)};
}

double second_order_forward(double p0, const ModelParams& params) {
    require_probability(p0, "p0");
    params.validate();
    const auto [s1, s2] = geometric_sums(params.p_ap);
    return p0 * s1 - p0 * p0 * s2;
}

double exact_forward(double p0, const ModelParams& params) {
    require_probability(p0, "p0");
    params.validate();
    double miss = 1.0;
    double term = p0;
    for (int i = 0; i <= params.order_max; ++i) {
        miss *= 1.0 - term;
        term *= params.p_ap;
    }
    return 1.0 - miss;
}

double invert_simple(double p_exp, double p0) {
    if (!(p0 >= 0.0 && p0 < 1.0)) throw DomainError("invert_simple: p0 must lie in [0, 1)");
    return p_exp / (1.0 - p0);
}

double invert_first(double p_exp) {
    if (!(p_exp >= 0.0)) throw DomainError("invert_first: p_exp must be non-negative");
    return p_exp / (1.0 + p_exp);
}

double invert_second(double p_exp, double p0) {
    if (!(p_exp >= 0.0)) throw DomainError("invert_second: p_exp must be non-negative");
    if (!(p0 > 0.0 && p0 < 1.0)) throw DomainError("invert_second: p0 must lie in (0, 1)");
    if (p0 * (1.0 + p_exp) > 1.0 + 1e-12) {
        throw DomainError("invert_second: p0 * (1 + p_exp) exceeds one");
    }
    if (p_exp == 0.0) return 0.0;

    // Scaled residual: second_order_forward / p0 - (1 + p_exp).
    auto residual = [&](double p) {
        const auto [s1, s2] = geometric_sums(p);
        return s1 - p0 * s2 - (1.0 + p_exp);
    };
    // d/dp of the residual has the sign of
    // (1 - p0) + (1 - p0) p - (1 + 2 p0) p^2 - p^3, which changes sign once.
    auto slope_sign = [&](double p) {
        return -((1.0 - p0) + (1.0 - p0) * p - (1.0 + 2.0 * p0) * p * p - p * p * p);
    };
    const double hi_limit = 1.0 - kUpperGuard;
    const double peak = slope_sign(hi_limit) < 0.0 ? hi_limit : bisect(slope_sign, 0.0, hi_limit);
    const double hi = std::min(peak, hi_limit);
    if (residual(hi) < 0.0) {
        throw NoRootError("invert_second: second-order model cannot reach p0 * (1 + p_exp)");
    }
    return bisect(residual, 0.0, hi);
}

double p_s_from_rate(const ExperimentalAfterpulse& exp) {
    exp.validate();
    const double denom = 1.0 + exp.p_exp - exp.rate * exp.tau_s;
    return exp.p_exp * (1.0 + exp.p_exp) / denom;
}

double universal_P_ap(double p_exp, double p0) {
    if (!(p0 >= 0.0 && p0 < 1.0)) throw DomainError("universal_P_ap: p0 must lie in [0, 1)");
    return p_exp * p0 / (1.0 - p0);
}

double p0_from_observed(double p_total, ModelKind model, double p_ap) {
    require_probability(p_total, "p_total");
    require_p_ap(p_ap);
    switch (model) {
        case ModelKind::first:
            return p_total * (1.0 - p_ap);
        case ModelKind::simple: {
            // p_s p0^2 - (1 + p_s) p0 + P = 0, smaller root in stable form.
            const double b = 1.0 + p_ap;
            const double disc = b * b - 4.0 * p_ap * p_total;
            if (disc < 0.0) throw NoRootError("p0_from_observed: no real root (simple model)");
            return 2.0 * p_total / (b + std::sqrt(disc));
        }
        case ModelKind::second: {
            const auto [s1, s2] = geometric_sums(p_ap);
            const double vertex = s2 > 0.0 ? s1 / (2.0 * s2) : 1.0;
            const double hi = std::min(1.0, vertex);
            auto residual = [&](double p0) { return p0 * s1 - p0 * p0 * s2 - p_total; };
            if (residual(hi) < 0.0) {
                throw NoRootError("p0_from_observed: second-order model cannot reach p_total");
            }
            return bisect(residual, 0.0, hi);
        }
    }
    throw DomainError("p0_from_observed: unknown model");
}

}  // namespace afterpulse
