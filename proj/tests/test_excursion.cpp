#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "vim/diffusion.hpp"
#include "vim/excursion.hpp"

using namespace vim;

namespace {
const ScaleTable& feller() {
    static const ScaleTable t(CoefficientSet(LogisticFeller{1, 0, 0, 1}));
    return t;
}
}  // namespace

TEST(Excursion, UpDriftClosedForm) {
    // -y + 2 y e^y / (e^y - 1) for the Feller family
    const double e = std::numbers::e;
    EXPECT_NEAR(up_drift(feller(), 1.0), -1.0 + 2.0 * e / (e - 1.0), 1e-9);
    EXPECT_NEAR(up_drift(feller(), 1.0), 2.16395, 1e-5);
    // Bessel-3 behaviour near the boundary: y * drift / (2 g) -> 1
    const double y = 1e-6;
    EXPECT_NEAR(y * up_drift(feller(), y) / (2.0 * y), 1.0, 1e-5);
    EXPECT_THROW((void)up_drift(feller(), 0.0), DomainError);
}

TEST(Excursion, UpDriftInvariantUnderRescaling) {
    const ScaleTable r = feller().rescaled(3.0);
    for (double y : {0.01, 0.3, 2.0}) EXPECT_NEAR(up_drift(r, y), up_drift(feller(), y), 1e-10 * std::abs(up_drift(feller(), y)));
}

TEST(Excursion, WeightAndShape) {
    ExcursionOptions o;
    o.horizon = 50.0;
    const auto ex = sample_excursion(feller(), 1.0, o, Stream(4, 0));
    EXPECT_NEAR(ex.weight, 1.0 / (std::numbers::e - 1.0), 1e-10);
    EXPECT_GE(ex.max(), 1.0);
    EXPECT_EQ(ex.values[ex.eps_index], 1.0);
    for (std::size_t i = 0; i < ex.eps_index; ++i) EXPECT_LT(ex.values[i], 1.0);
    ASSERT_TRUE(ex.lifetime.has_value());
    EXPECT_EQ(ex.values.back(), 0.0);
}

TEST(Excursion, WindowTruncates) {
    ExcursionOptions o;
    o.window = 0.05;
    const auto ex = sample_excursion(feller(), 0.1, o, Stream(5, 0));
    EXPECT_LE(ex.duration(), 0.05 + 1e-12);
    EXPECT_TRUE(ex.lifetime.has_value() || ex.truncated);
    o.window = 0.0;
    EXPECT_THROW((void)sample_excursion(feller(), 0.1, o, Stream(5, 0)), DomainError);
}

// Of the excursions reaching eps, the fraction reaching b is S(eps)/S(b).
TEST(Excursion, CrossingFractionMatchesScaleRatio) {
    const double eps = 0.5, b = 2.0;
    ExcursionOptions o;
    o.horizon = 50.0;
    const CoefficientSet& c = feller().coeffs();
    const auto v = map_excursions(feller(), eps, 8000, o, StreamKey{6, 0}, 1, [&](std::size_t, const Excursion& e) {
        DiffusionPath tail;
        tail.dt = e.dt;
        tail.values.assign(e.values.begin() + static_cast<std::ptrdiff_t>(e.eps_index), e.values.end());
        return bridge_hit_probability(tail, c, b);
    });
    const auto m = mean_estimate(v);
    const double ref = std::expm1(eps) / std::expm1(b);
    EXPECT_LT(z_score(m.value, m.std_error, ref), 4.0) << m.value << " vs " << ref;
}

TEST(Excursion, ReplaysFromKey) {
    ExcursionOptions o;
    const auto a = sample_excursions(feller(), 0.2, 8, o, StreamKey{8, 1}, 1);
    const auto b = sample_excursions(feller(), 0.2, 8, o, StreamKey{8, 1}, 3);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].values, b[i].values);
}
