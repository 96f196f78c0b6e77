#pragma once

// Click-probability models for a detector with recursive afterpulsing.
//
// p0 is the probability of a click from photons, dark counts and tunneling
// alone; p_ap is the per-click probability that an avalanche produces an
// afterpulse. The exact model treats the afterpulse generations
// gamma_i (P(gamma_i) = p0 * p_ap^i) as independent events and takes their
// union. The first and second order models truncate its inclusion-exclusion
// expansion after the linear and quadratic terms in p0.

#include <string_view>

namespace afterpulse {

enum class ModelKind { simple, first, second };

ModelKind parse_model_kind(std::string_view name);
std::string_view to_string(ModelKind kind);

struct ModelParams {
    double p_ap = 0.0;
    int order_max = 20;

    void validate() const;
};

struct ClickProbabilities {
    double p0 = 0.0;
    double p_total = 0.0;

    // Truncated expansions may exceed one for large p0 * p_ap.
    bool out_of_range() const noexcept { return p_total > 1.0; }
};

// Quantities obtained from a measured sweep histogram and the count rate.
struct ExperimentalAfterpulse {
    double p_exp = 0.0;
    double rate = 0.0;   // Hz
    double tau_s = 0.0;  // s, statistical dead time

    void validate() const;
};

struct GeometricSums {
    double s1 = 1.0;  // sum_i p^i
    double s2 = 0.0;  // sum_{j>i} p^(i+j)
};

GeometricSums geometric_sums(double p_ap);

double simple_forward(double p0, double p_s);
ClickProbabilities first_order_forward(double p0, const ModelParams& params);
double second_order_forward(double p0, const ModelParams& params);

// Union of gamma_0..gamma_{order_max} via the independent-events product.
double exact_forward(double p0, const ModelParams& params);

double invert_simple(double p_exp, double p0);
double invert_first(double p_exp);

// Smallest p_ap with second_order_forward(p0, p_ap) == p0 * (1 + p_exp).
// The second-order truncation rises and then falls in p_ap; the root on the
// rising branch is returned.
double invert_second(double p_exp, double p0);

double p_s_from_rate(const ExperimentalAfterpulse& exp);
double universal_P_ap(double p_exp, double p0);

double p0_from_observed(double p_total, ModelKind model, double p_ap);

}  // namespace afterpulse
