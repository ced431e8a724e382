#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "vim/scale_analysis.hpp"

using namespace vim;

namespace {

CoefficientSet feller(double kappa = 1.0, double beta = 1.0) { return CoefficientSet(LogisticFeller{kappa, 0, 0, beta}); }

// a = y, h = -y^2, g = y: s(y) = exp(y + y^2/2) in closed form.
CoefficientSet competition() { return CoefficientSet(PowerLaw{1, 0, 1, 1, 1, 2, 1}); }
double comp_s(double y) { return std::exp(y + 0.5 * y * y); }

// Brute-force w_f(x) = int_0^inf S(min(x, z)) f(z) / (g s)(z) dz with
// composite Simpson on [0, 12] and S from its own Simpson cumulative.
double brute_w(double x, double (*f)(double)) {
    const int n = 240000;
    const double top = 12.0, h = top / n;
    std::vector<double> S(n + 1, 0.0);
    for (int i = 1; i <= n; ++i) {
        const double l = h * (i - 1), r = h * i;
        S[i] = S[i - 1] + h / 6.0 * (comp_s(l) + 4.0 * comp_s(0.5 * (l + r)) + comp_s(r));
    }
    auto integrand = [&](int i) {
        const double z = h * i;
        if (z == 0.0) return 0.0;
        const double Sz = z <= x ? S[i] : S[static_cast<int>(std::lround(x / h))];
        return Sz * f(z) / (z * comp_s(z));
    };
    double acc = integrand(0) + integrand(n);
    for (int i = 1; i < n; ++i) acc += integrand(i) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

double ident(double y) { return y; }

}  // namespace

TEST(ScaleAnalysis, FellerCriterionIsOneForAnyRates) {
    for (auto [k, b] : {std::pair{1.0, 1.0}, {2.0, 0.5}, {0.3, 3.0}}) {
        const ScaleTable t(feller(k, b));
        EXPECT_NEAR(extinction_criterion(t).value, 1.0, 1e-9) << k << "," << b;
        EXPECT_EQ(classify(extinction_criterion(t)), Regime::Critical);
    }
}

TEST(ScaleAnalysis, ErfIdentities) {
    const double phi1 = 0.5 * std::erfc(-1.0 / std::numbers::sqrt2);
    const double c = std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5);
    EXPECT_NEAR(extinction_criterion(ScaleTable(CoefficientSet(LogisticFeller{1, 1, 2, 1}))).value, c * phi1, 1e-9);
    EXPECT_NEAR(extinction_criterion(ScaleTable(competition())).value, c * (1.0 - phi1), 1e-9);
}

TEST(ScaleAnalysis, FellerHittingProbability) {
    const ScaleTable t(feller());
    const double e = std::numbers::e;
    EXPECT_NEAR(hitting_probability(t, 1.0, 0.0, 2.0), 1.0 / (e + 1.0), 1e-10);
    EXPECT_NEAR(hitting_probability(t, 0.5, 0.25, 3.0), (std::exp(0.5) - std::exp(0.25)) / (std::exp(3.0) - std::exp(0.25)), 1e-10);
}

TEST(ScaleAnalysis, FellerGreenOccupation) {
    const ScaleTable t(feller());
    const Fn a = [](double y) { return y; };
    EXPECT_NEAR(green_occupation(t, 1.0, kInf, a).value, 1.0, 1e-9);
    // Y_t + int_0^t Y is a martingale, so the occupation is 1 - b P^1(T_b < T_0)
    const double b = 2.0;
    EXPECT_NEAR(green_occupation(t, 1.0, b, a).value, 1.0 - b * hitting_probability(t, 1.0, 0.0, b), 1e-9);
}

TEST(ScaleAnalysis, WFunctionalClosedFormAndBruteForce) {
    // Feller: w_id(x) = x
    const ScaleTable f(feller());
    const Fn id = [](double y) { return y; };
    for (double x : {0.1, 1.0, 3.0}) EXPECT_NEAR(w_functional(f, x, id).value, x, 1e-9);
    EXPECT_NEAR(w_derivative_at_zero(f, id).value, 1.0, 1e-9);
    // competition: independent Simpson route with closed-form s
    const ScaleTable c(competition());
    for (double x : {0.5, 1.0, 2.0}) EXPECT_NEAR(w_functional(c, x, id).value, brute_w(x, ident), 1e-6) << x;
}

TEST(ScaleAnalysis, SubcriticalExpectedAreaAgainstBruteForce) {
    const ScaleTable t(competition());
    const double phi1 = 0.5 * std::erfc(-1.0 / std::numbers::sqrt2);
    const double theta = std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5) * (1.0 - phi1);
    // w_id'(0) = int_0^inf id / (g s) = theta for a = id
    const double x = 1.0;
    const double ref = brute_w(x, ident) + theta * brute_w(x, ident) / (1.0 - theta);
    EXPECT_NEAR(expected_total_area(t, x).value, ref, 1e-6);
}

TEST(ScaleAnalysis, CriticalTimeAverageTwoRoutes) {
    const ScaleTable t(feller());
    const Fn a = [](double y) { return y; };
    for (double x : {0.5, 1.0, 2.5}) {
        const double direct = critical_time_average(t, x).value;
        const double via_q = w_derivative_at_zero(t, a).value * w_functional(t, x, a).value / q_time_weighted(t, a).value;
        EXPECT_NEAR(direct, via_q, 1e-9);
        EXPECT_NEAR(direct, x, 1e-8);  // w_a(x) = x, w'(0) = 1, int w_a/(g s) = 1
    }
    EXPECT_THROW((void)critical_time_average(ScaleTable(competition()), 1.0), PreconditionError);
}

TEST(ScaleAnalysis, QFunctionals) {
    const ScaleTable t(feller());
    const Fn id = [](double y) { return y; };
    EXPECT_NEAR(q_functional(t, id, 1).value, 1.0, 1e-9);
    EXPECT_NEAR(q_time_weighted(t, id).value, 1.0, 1e-9);
    const ScaleTable l(CoefficientSet(LogisticFeller{1, 1, 2, 1}));
    const double m2 = q_functional(l, id, 2).value;
    EXPECT_NEAR(m2, q_functional_m2_symmetric(l, id).value, 1e-10 * m2);
    EXPECT_TRUE(scale_function_unbounded(t));
}

TEST(ScaleAnalysis, MalthusianAndFixedPoint) {
    const ScaleTable t(CoefficientSet(LogisticFeller{1, 1, 2, 1}));
    const ScaleSolver s(t);
    const double theta = extinction_criterion(t).value;
    // F(0) is the quadrature criterion and k'(0) equals it too
    EXPECT_NEAR(s.F(0.0), theta, 1e-8);
    const double h = 1e-4;
    EXPECT_NEAR((s.k(h) - s.k(-h)) / (2 * h), theta, 1e-6);
    const auto alpha = malthusian_alpha(s);
    EXPECT_NEAR(s.F(alpha.value), 1.0, 1e-9);
    EXPECT_LT(alpha.error, 1e-6);
    const auto q = fixed_point_q(s);
    EXPECT_GT(q.value, 0.0);
    EXPECT_NEAR(s.k(q.value), q.value, 1e-8);
    // nothing to find below criticality
    const ScaleTable c(competition());
    EXPECT_THROW((void)malthusian_alpha(ScaleSolver(c)), PreconditionError);
    EXPECT_EQ(fixed_point_q(ScaleSolver(c)).value, 0.0);
}

TEST(ScaleAnalysis, AnalyzeReportsByRegime) {
    const auto sup = analyze(ScaleTable(CoefficientSet(LogisticFeller{1, 1, 2, 1})), 1.0);
    EXPECT_EQ(sup.regime, Regime::Supercritical);
    EXPECT_TRUE(sup.alpha && sup.q);
    EXPECT_EQ(to_string(sup.regime), "Supercritical");
    const auto crit = analyze(ScaleTable(feller()), 1.0);
    EXPECT_EQ(to_string(crit.regime), "Critical");
    ASSERT_TRUE(crit.critical_ratio.has_value());
    EXPECT_NEAR(crit.critical_ratio->value, 1.0, 1e-8);
    EXPECT_FALSE(crit.alpha.has_value());
}

TEST(ScaleAnalysis, GreenOccupationInvariantUnderRescaling) {
    const ScaleTable t(CoefficientSet(LogisticFeller{1, 1, 2, 1}));
    const ScaleTable r = t.rescaled(7.3);
    const Fn a = [](double y) { return y; };
    for (double b : {2.0, 5.0, kInf}) {
        const double g1 = green_occupation(t, 0.7, b, a).value, g2 = green_occupation(r, 0.7, b, a).value;
        EXPECT_NEAR(g2 / g1, 1.0, 1e-10);
    }
}
