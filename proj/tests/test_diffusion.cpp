#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "vim/diffusion.hpp"

using namespace vim;

namespace {
CoefficientSet feller() { return CoefficientSet(LogisticFeller{1, 0, 0, 1}); }
}

TEST(Diffusion, StartAtZeroIsAbsorbed) {
    const auto p = simulate_path(feller(), 0.0, 1e-2, 1.0, Stream(1, 0));
    ASSERT_EQ(p.values.size(), 1u);
    EXPECT_EQ(p.absorption_time, 0.0);
    EXPECT_EQ(p.at(0.5), 0.0);
}

TEST(Diffusion, RejectsBadArguments) {
    EXPECT_THROW((void)simulate_path(feller(), -1.0, 1e-2, 1.0, Stream(1, 0)), DomainError);
    EXPECT_THROW((void)simulate_path(feller(), 1.0, 0.0, 1.0, Stream(1, 0)), DomainError);
}

TEST(Diffusion, SameStreamSamePath) {
    const auto a = simulate_path(feller(), 1.0, 1e-3, 2.0, Stream(9, 4));
    const auto b = simulate_path(feller(), 1.0, 1e-3, 2.0, Stream(9, 4));
    const auto c = simulate_path(feller(), 1.0, 1e-3, 2.0, Stream(9, 5));
    EXPECT_EQ(a.values, b.values);
    EXPECT_NE(a.values, c.values);
    for (double v : a.values) EXPECT_GE(v, 0.0);
}

TEST(Diffusion, ParallelMapIsThreadInvariant) {
    auto end = [](std::size_t, const DiffusionPath& p) { return p.values.back(); };
    const auto one = map_paths(feller(), 1.0, 1e-3, 1.0, 64, StreamKey{3, 0}, 1, end);
    const auto four = map_paths(feller(), 1.0, 1e-3, 1.0, 64, StreamKey{3, 0}, 4, end);
    EXPECT_EQ(one, four);
}

// E Y_t = e^{-t} for dY = -Y dt + sqrt(2Y) dB
TEST(Diffusion, FellerMeanDecay) {
    const auto v = map_paths(feller(), 1.0, 1e-3, 1.0, 4000, StreamKey{21, 0}, 1,
                             [](std::size_t, const DiffusionPath& p) { return p.at(1.0); });
    const auto m = mean_estimate(v);
    EXPECT_LT(z_score(m.value, m.std_error, std::exp(-1.0)), 4.0);
}

// P^1(T_2 < T_0) = (e - 1)/(e^2 - 1)
TEST(Diffusion, BridgeCorrectedHitting) {
    const CoefficientSet c = feller();
    const auto v = map_paths(c, 1.0, 1e-3, 30.0, 4000, StreamKey{22, 0}, 1,
                             [&](std::size_t, const DiffusionPath& p) { return bridge_hit_probability(p, c, 2.0); });
    const auto m = mean_estimate(v);
    EXPECT_LT(z_score(m.value, m.std_error, 1.0 / (std::numbers::e + 1.0)), 4.0);
}

TEST(Diffusion, FunctionalsOnKnownGrid) {
    DiffusionPath p;
    p.dt = 0.5;
    p.values = {0.0, 1.0, 2.0};
    EXPECT_DOUBLE_EQ(path_functional(p, [](double y) { return y; }), 1.0);
    EXPECT_DOUBLE_EQ(path_functional(p, [](double y) { return y; }, Weight::time_weighted()), 0.75);
    EXPECT_DOUBLE_EQ(p.at(0.75), 1.5);
    EXPECT_EQ(first_hitting(p, 1.5), 1.0);
    EXPECT_FALSE(first_hitting(p, 3.0).has_value());
}
