#pragma once

// Afterpulse estimators.
//
// Gate-histogram methods (Bethune, Yuan, coincidence) work on click counts
// folded over one laser period, with and without illumination. Rates are
// counts over live acquisition time. The illuminated gate is the gate with
// the most counts.
//
// The sweep-histogram method counts follow-on clicks after laser-triggered
// clicks, subtracts the dark-count plateau at the end of the sweep and
// normalises by the trigger count c0, then converts the ratio into the
// simple, first and second order model parameters.

#include <cstdint>
#include <limits>

#include "afterpulse/histio.hpp"

namespace afterpulse {

struct TimeWindow {
    double begin = 20e-6;  // s
    double end = 25e-6;    // s
};

// Estimate with its Poisson counting uncertainty.
struct MethodEstimate {
    double value = 0.0;
    double sigma = 0.0;
};

struct EstimateBundle {
    double p_exp = 0.0;
    double p_exp_sigma = 0.0;
    double p_s = kUndefined;
    double p1 = kUndefined;
    double p2 = kUndefined;
    double P_ap = kUndefined;
    double p0 = kUndefined;   // click probability without afterpulsing
    double p_n = kUndefined;  // observed click probability, rate * tau_s
    std::int64_t c0 = 0;
    double c_ap = 0.0;
    double c_dcr = 0.0;
    // C_ap is negative by more than three standard deviations.
    bool warning = false;

    static constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();
};

std::int64_t illuminated_gate(const GateHistogram& lit);

MethodEstimate estimate_bethune(const GateHistogram& lit, const GateHistogram& dark);

// `ni_offset` selects the non-illuminated gate, counted from the illuminated one.
MethodEstimate estimate_yuan(const GateHistogram& lit, const GateHistogram& dark, double f_g,
                             double f_l, std::int64_t ni_offset = 1);

MethodEstimate estimate_coincidence(const GateHistogram& lit, const GateHistogram& dark, double f_g,
                                    double f_l);

// Mean count per bin over the bins lying fully inside `window`.
double dcr_baseline(const SweepHistogram& h, const TimeWindow& window);

// Fills p_exp, its sigma and the count fields.
EstimateBundle estimate_custom(const SweepHistogram& h, double tau_s, const TimeWindow& window);

// Conversions from p_exp, the total count rate (Hz) and the statistical
// dead time (s).
EstimateBundle derive_all(double p_exp, double rate, double tau_s);

// estimate_custom followed by derive_all, keeping the count fields.
EstimateBundle estimate_and_derive(const SweepHistogram& h, double tau_s, const TimeWindow& window,
                                   double rate);

}  // namespace afterpulse
