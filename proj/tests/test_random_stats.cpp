#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "vim/random.hpp"
#include "vim/stats.hpp"

using namespace vim;

// Published known-answer vectors for Philox4x32-10.
TEST(Random, PhiloxKnownAnswers) {
    using A4 = std::array<std::uint32_t, 4>;
    EXPECT_EQ(detail::philox4x32_10(A4{0, 0, 0, 0}, {0, 0}), (A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
    EXPECT_EQ(detail::philox4x32_10(A4{~0u, ~0u, ~0u, ~0u}, {~0u, ~0u}),
              (A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
    EXPECT_EQ(detail::philox4x32_10(A4{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
              (A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Random, SubKeysAreDistinctAndStable) {
    const StreamKey root{7, 0};
    std::set<std::uint64_t> ids;
    for (std::uint64_t k = 0; k < 10000; ++k) ids.insert(root.sub(k).id);
    EXPECT_EQ(ids.size(), 10000u);
    EXPECT_EQ(root.sub(3).sub(4), root.sub(3).sub(4));
    EXPECT_NE(root.sub(3).sub(4), root.sub(4).sub(3));
}

TEST(Random, StreamsReplay) {
    Stream a(1, 2), b(1, 2);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.normal(), b.normal());
    EXPECT_NE(Stream(1, 2)(), Stream(1, 3)());
    EXPECT_NE(Stream(1, 2)(), Stream(2, 2)());
}

TEST(Random, UniformMoments) {
    Stream s(11, 0);
    RunningStats st;
    for (int i = 0; i < 200000; ++i) {
        const double u = s.uniform();
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
        st.add(u);
    }
    EXPECT_LT(z_score(st.mean(), st.std_error(), 0.5), 4.0);
    EXPECT_NEAR(st.variance(), 1.0 / 12.0, 2e-3);
}

TEST(Stats, WelfordMergeMatchesSinglePass) {
    RunningStats all, left, right;
    for (int i = 0; i < 100; ++i) {
        const double x = std::sin(i * 0.37) * 3.0 + i * 0.01;
        all.add(x);
        (i < 40 ? left : right).add(x);
    }
    left.merge(right);
    EXPECT_EQ(left.count(), all.count());
    EXPECT_NEAR(left.mean(), all.mean(), 1e-12);
    EXPECT_NEAR(left.variance(), all.variance(), 1e-12);
}

TEST(Stats, ExtrapolationRecoversIntercept) {
    const std::vector<double> x = {0.4, 0.2, 0.1, 0.05}, se = {0.01, 0.01, 0.01, 0.01};
    std::vector<double> y;
    for (double v : x) y.push_back(2.0 - 3.0 * v);
    const auto e = extrapolate_to_zero(x, y, se);
    EXPECT_NEAR(e.value, 2.0, 1e-12);
    EXPECT_GT(e.std_error, 0.0);
    EXPECT_NEAR(ols_slope(x, y), -3.0, 1e-12);
}

TEST(Stats, KolmogorovSmirnov) {
    Stream s(5, 0);
    std::vector<double> a, b, c;
    for (int i = 0; i < 2000; ++i) {
        a.push_back(s.uniform());
        b.push_back(s.uniform());
        c.push_back(s.uniform() * 0.8);
    }
    EXPECT_GT(ks_two_sample(a, b).p_value, 1e-3);
    EXPECT_LT(ks_two_sample(a, c).p_value, 1e-6);
}
