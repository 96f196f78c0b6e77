#pragma once

// Three-parameter fits of afterpulse probability against dead time:
//   power law:    p(tau) = A * tau^B + C
//   exponential:  p(tau) = A * exp(-B * tau) + C
// Inputs are in seconds; internally, and in the returned parameters, tau is
// in microseconds so that B stays of order one.

#include <span>
#include <string_view>

namespace afterpulse {

enum class FitLaw { power_law, exponential };

FitLaw parse_fit_law(std::string_view name);
std::string_view to_string(FitLaw law);

struct FitParameters {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
};

struct FitResult {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    FitLaw law = FitLaw::exponential;
    double rss = 0.0;
    int iterations = 0;
    bool converged = false;

    // Model value at dead time `tau` (s).
    double operator()(double tau) const;
};

double evaluate_law(FitLaw law, const FitParameters& params, double tau_us);

FitParameters initial_guess(std::span<const double> xs, std::span<const double> ys, FitLaw law);

// Unweighted unless `sigma` (same length as ys) is given.
FitResult fit_curve(std::span<const double> xs, std::span<const double> ys, FitLaw law,
                    std::span<const double> sigma = {});

}  // namespace afterpulse
