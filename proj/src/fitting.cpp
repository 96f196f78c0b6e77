#include "afterpulse/fitting.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "afterpulse/errors.hpp"

namespace afterpulse {
namespace {

constexpr double kSecondsToMicro = 1e6;
constexpr int kMaxIterations = 500;
constexpr double kRelativeImprovement = 1e-10;
constexpr double kStepTolerance = 1e-12;

using Params = Eigen::Vector3d;

void check_inputs(std::span<const double> xs, std::span<const double> ys, FitLaw law) {
    if (xs.size() != ys.size()) throw DomainError("fit: xs and ys differ in length");
    if (xs.size() < 4) throw DomainError("fit: at least four points are required");
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) throw DomainError("fit: non-finite input");
        if (i > 0 && !(xs[i] > xs[i - 1])) throw DomainError("fit: xs must be strictly increasing");
    }
    if (law == FitLaw::power_law && !(xs.front() > 0.0)) {
        throw DomainError("fit: power law needs strictly positive xs");
    }
}

Eigen::ArrayXd model(FitLaw law, const Params& p, const Eigen::ArrayXd& x) {
    if (law == FitLaw::exponential) return p[0] * (-p[1] * x).exp() + p[2];
    return p[0] * x.pow(p[1]) + p[2];
}

Eigen::MatrixX3d jacobian(FitLaw law, const Params& p, const Eigen::ArrayXd& x) {
    Eigen::MatrixX3d j(x.size(), 3);
    if (law == FitLaw::exponential) {
        const Eigen::ArrayXd e = (-p[1] * x).exp();
        j.col(0) = e.matrix();
        j.col(1) = (-p[0] * x * e).matrix();
    } else {
        const Eigen::ArrayXd powed = x.pow(p[1]);
        j.col(0) = powed.matrix();
        j.col(1) = (p[0] * powed * x.log()).matrix();
    }
    j.col(2).setOnes();
    return j;
}

double weighted_rss(const Eigen::ArrayXd& residual, const Eigen::ArrayXd& weight) {
    const double rss = (weight * residual.square()).sum();
    return std::isfinite(rss) ? rss : std::numeric_limits<double>::infinity();
}

}  // namespace

FitLaw parse_fit_law(std::string_view name) {
    if (name == "power" || name == "power_law" || name == "power-law") return FitLaw::power_law;
    if (name == "exp" || name == "exponential") return FitLaw::exponential;
    throw ConfigError("unknown fit law '" + std::string(name) + "' (expected power or exp)");
}

std::string_view to_string(FitLaw law) {
    return law == FitLaw::power_law ? "power_law" : "exponential";
}

double evaluate_law(FitLaw law, const FitParameters& p, double tau_us) {
    if (law == FitLaw::exponential) return p.a * std::exp(-p.b * tau_us) + p.c;
    return p.a * std::pow(tau_us, p.b) + p.c;
}

double FitResult::operator()(double tau) const {
    return evaluate_law(law, {a, b, c}, tau * kSecondsToMicro);
}

FitParameters initial_guess(std::span<const double> xs, std::span<const double> ys, FitLaw law) {
    check_inputs(xs, ys, law);
    const auto [lo_it, hi_it] = std::minmax_element(ys.begin(), ys.end());
    const double c0 = *lo_it;
    const double range = *hi_it - *lo_it;
    const FitParameters fallback{range, 1.0, c0};

    // First and last points with a positive excess over the offset.
    const double floor = range * 1e-12;
    std::size_t first = xs.size();
    std::size_t last = xs.size();
    for (std::size_t i = 0; i < ys.size(); ++i) {
        if (ys[i] - c0 > floor) {
            if (first == xs.size()) first = i;
            last = i;
        }
    }
    if (first == xs.size() || first == last) return fallback;

    const double x1 = xs[first] * kSecondsToMicro;
    const double x2 = xs[last] * kSecondsToMicro;
    const double y1 = ys[first] - c0;
    const double y2 = ys[last] - c0;
    FitParameters guess{0.0, 0.0, c0};
    if (law == FitLaw::exponential) {
        guess.b = std::log(y1 / y2) / (x2 - x1);
        guess.a = y1 * std::exp(guess.b * x1);
    } else {
        guess.b = std::log(y2 / y1) / std::log(x2 / x1);
        guess.a = y1 / std::pow(x1, guess.b);
    }
    if (!std::isfinite(guess.a) || !std::isfinite(guess.b)) return fallback;
    return guess;
}

FitResult fit_curve(std::span<const double> xs, std::span<const double> ys, FitLaw law,
                    std::span<const double> sigma) {
    check_inputs(xs, ys, law);
    const auto n = static_cast<Eigen::Index>(xs.size());
    const Eigen::ArrayXd x = Eigen::Map<const Eigen::ArrayXd>(xs.data(), n) * kSecondsToMicro;
    const Eigen::ArrayXd y = Eigen::Map<const Eigen::ArrayXd>(ys.data(), n);
    Eigen::ArrayXd w = Eigen::ArrayXd::Ones(n);
    if (!sigma.empty()) {
        if (static_cast<Eigen::Index>(sigma.size()) != n) throw DomainError("fit: sigma length mismatch");
        const Eigen::ArrayXd s = Eigen::Map<const Eigen::ArrayXd>(sigma.data(), n);
        if ((s <= 0.0).any()) throw DomainError("fit: sigma must be positive");
        w = s.square().inverse();
    }

    const FitParameters guess = initial_guess(xs, ys, law);
    Params p(guess.a, guess.b, guess.c);
    double rss = weighted_rss(y - model(law, p, x), w);

    FitResult result;
    result.law = law;
    double lambda = 1e-3;
    int it = 0;
    bool converged = rss == 0.0;
    while (!converged && it < kMaxIterations) {
        ++it;
        const Eigen::MatrixX3d j = jacobian(law, p, x);
        const Eigen::VectorXd r = (y - model(law, p, x)).matrix();
        const Eigen::Matrix3d jtj = j.transpose() * w.matrix().asDiagonal() * j;
        const Eigen::Vector3d grad = j.transpose() * (w * r.array()).matrix();

        bool accepted = false;
        Params step = Params::Zero();
        while (lambda < 1e16) {
            Eigen::Matrix3d damped = jtj;
            for (int k = 0; k < 3; ++k) damped(k, k) += lambda * std::max(jtj(k, k), 1e-12);
            step = damped.ldlt().solve(grad);
            const Params trial = p + step;
            const double trial_rss = weighted_rss(y - model(law, trial, x), w);
            if (step.allFinite() && trial_rss < rss) {
                const double improvement = (rss - trial_rss) / rss;
                p = trial;
                rss = trial_rss;
                lambda = std::max(lambda / 10.0, 1e-12);
                accepted = true;
                converged = improvement < kRelativeImprovement || rss == 0.0;
                break;
            }
            lambda *= 10.0;
        }
        const double scale = 1.0 + p.cwiseAbs().maxCoeff();
        if (!accepted || step.cwiseAbs().maxCoeff() < kStepTolerance * scale) {
            // No step improves the residual: stationary point.
            converged = true;
        }
    }

    result.a = p[0];
    result.b = p[1];
    result.c = p[2];
    result.rss = rss;
    result.iterations = it;
    result.converged = converged && std::isfinite(rss);
    return result;
}

}  // namespace afterpulse
