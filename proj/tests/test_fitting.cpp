#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "afterpulse/errors.hpp"
#include "afterpulse/fitting.hpp"

using namespace afterpulse;

namespace {

std::vector<double> tau_grid() {
    std::vector<double> xs;
    for (int i = 0; i < 12; ++i) xs.push_back((0.2 + i * (20.0 - 0.2) / 11.0) * 1e-6);
    return xs;
}

std::vector<double> sample(FitLaw law, FitParameters p, const std::vector<double>& xs) {
    std::vector<double> ys;
    for (double x : xs) ys.push_back(evaluate_law(law, p, x * 1e6));
    return ys;
}

double rel(double got, double want) { return std::abs(got - want) / std::abs(want); }

double rss_of(FitLaw law, FitParameters p, const std::vector<double>& xs, const std::vector<double>& ys) {
    double s = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - evaluate_law(law, p, xs[i] * 1e6);
        s += r * r;
    }
    return s;
}

}  // namespace

TEST(Fit, NoiselessExponential) {
    const auto xs = tau_grid();
    const auto ys = sample(FitLaw::exponential, {0.3, 0.4, 0.02}, xs);
    const auto f = fit_curve(xs, ys, FitLaw::exponential);
    EXPECT_TRUE(f.converged);
    EXPECT_LT(rel(f.a, 0.3), 1e-6);
    EXPECT_LT(rel(f.b, 0.4), 1e-6);
    EXPECT_LT(rel(f.c, 0.02), 1e-6);
    EXPECT_NEAR(f(5e-6), 0.3 * std::exp(-2.0) + 0.02, 1e-9);
}

TEST(Fit, NoiselessPowerLaw) {
    const auto xs = tau_grid();
    const auto ys = sample(FitLaw::power_law, {0.05, -0.8, 0.01}, xs);
    const auto f = fit_curve(xs, ys, FitLaw::power_law);
    EXPECT_TRUE(f.converged);
    EXPECT_LT(rel(f.a, 0.05), 1e-6);
    EXPECT_LT(rel(f.b, -0.8), 1e-6);
    EXPECT_LT(rel(f.c, 0.01), 1e-6);
}

TEST(Fit, ConstantData) {
    const auto xs = tau_grid();
    const std::vector<double> ys(xs.size(), 0.1);
    for (const auto law : {FitLaw::exponential, FitLaw::power_law}) {
        const auto f = fit_curve(xs, ys, law);
        EXPECT_TRUE(f.converged);
        EXPECT_NEAR(f.a, 0.0, 1e-12);
        EXPECT_NEAR(f.c, 0.1, 1e-12);
        EXPECT_NEAR(f.rss, 0.0, 1e-20);
    }
}

TEST(InitialGuess, WithinFactorTwo) {
    const auto xs = tau_grid();
    const auto ys = sample(FitLaw::exponential, {0.3, 0.4, 0.02}, xs);
    const auto g = initial_guess(xs, ys, FitLaw::exponential);
    for (const auto [got, want] : {std::pair{g.a, 0.3}, {g.b, 0.4}, {g.c, 0.02}}) {
        EXPECT_GT(got, want / 2) << want;
        EXPECT_LT(got, want * 2) << want;
    }
}

TEST(InitialGuess, TwoLevelsAndIncreasing) {
    const std::vector<double> xs{1e-6, 2e-6, 3e-6, 4e-6};
    const std::vector<double> two{0.1, 0.1, 0.2, 0.2};
    const std::vector<double> rising{0.1, 0.2, 0.3, 0.4};
    const auto g = initial_guess(xs, two, FitLaw::exponential);
    EXPECT_TRUE(std::isfinite(g.a) && std::isfinite(g.b) && std::isfinite(g.c));
    const auto up = initial_guess(xs, rising, FitLaw::power_law);
    EXPECT_GT(up.b, 0.0);
    EXPECT_NO_THROW(fit_curve(xs, rising, FitLaw::power_law));
}

TEST(Fit, NeverWorseThanGuess) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> noise(0.0, 1.0);
    const auto xs = tau_grid();
    for (int rep = 0; rep < 20; ++rep) {
        auto ys = sample(FitLaw::exponential, {0.3, 0.4, 0.02}, xs);
        for (auto& y : ys) y *= 1.0 + 0.05 * noise(rng);
        for (const auto law : {FitLaw::exponential, FitLaw::power_law}) {
            const auto g = initial_guess(xs, ys, law);
            const auto f = fit_curve(xs, ys, law);
            EXPECT_LE(f.rss, rss_of(law, g, xs, ys));
            EXPECT_GE(f.rss, 0.0);
        }
    }
}

TEST(Fit, NoiseRobustness) {
    const auto xs = tau_grid();
    const auto clean = sample(FitLaw::exponential, {0.3, 0.4, 0.02}, xs);
    int good = 0;
    int exp_wins = 0;
    for (int rep = 0; rep < 100; ++rep) {
        std::mt19937_64 rng(1000 + rep);
        std::normal_distribution<double> noise(0.0, 0.02);
        auto ys = clean;
        for (auto& y : ys) y *= 1.0 + noise(rng);
        const auto f = fit_curve(xs, ys, FitLaw::exponential);
        if (rel(f.a, 0.3) < 0.1 && rel(f.b, 0.4) < 0.1 && rel(f.c, 0.02) < 0.1) ++good;
        if (f.rss <= fit_curve(xs, ys, FitLaw::power_law).rss) ++exp_wins;
    }
    EXPECT_GE(good, 90);
    EXPECT_GE(exp_wins, 90);
}

TEST(Fit, Weighted) {
    const auto xs = tau_grid();
    const auto ys = sample(FitLaw::exponential, {0.3, 0.4, 0.02}, xs);
    const std::vector<double> sigma(xs.size(), 0.01);
    const auto f = fit_curve(xs, ys, FitLaw::exponential, sigma);
    EXPECT_LT(rel(f.b, 0.4), 1e-6);
    EXPECT_THROW(fit_curve(xs, ys, FitLaw::exponential, std::vector<double>(3, 1.0)), DomainError);
    EXPECT_THROW(fit_curve(xs, ys, FitLaw::exponential, std::vector<double>(xs.size(), 0.0)), DomainError);
}

TEST(Fit, Deterministic) {
    const auto xs = tau_grid();
    auto ys = sample(FitLaw::power_law, {0.05, -0.8, 0.01}, xs);
    ys[3] *= 1.03;
    const auto a = fit_curve(xs, ys, FitLaw::power_law);
    const auto b = fit_curve(xs, ys, FitLaw::power_law);
    EXPECT_EQ(a.a, b.a);
    EXPECT_EQ(a.b, b.b);
    EXPECT_EQ(a.c, b.c);
    EXPECT_EQ(a.iterations, b.iterations);
}

TEST(Fit, Preconditions) {
    EXPECT_THROW(fit_curve(std::vector<double>{1e-6, 2e-6, 3e-6}, std::vector<double>{1, 2, 3},
                           FitLaw::exponential),
                 DomainError);
    EXPECT_THROW(fit_curve(std::vector<double>{1e-6, 3e-6, 2e-6, 4e-6}, std::vector<double>{1, 2, 3, 4},
                           FitLaw::exponential),
                 DomainError);
    EXPECT_THROW(fit_curve(std::vector<double>{0.0, 1e-6, 2e-6, 3e-6}, std::vector<double>{1, 2, 3, 4},
                           FitLaw::power_law),
                 DomainError);
    EXPECT_THROW(fit_curve(std::vector<double>{1e-6, 2e-6, 3e-6, 4e-6}, std::vector<double>{1, NAN, 3, 4},
                           FitLaw::exponential),
                 DomainError);
    EXPECT_EQ(parse_fit_law("exp"), FitLaw::exponential);
    EXPECT_EQ(parse_fit_law("power"), FitLaw::power_law);
    EXPECT_THROW(parse_fit_law("sinc"), ConfigError);
}
