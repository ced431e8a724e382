#include <gtest/gtest.h>

#include <cmath>

#include "vim/scale_table.hpp"

using namespace vim;

TEST(ScaleTable, FellerClosedForm) {
    // a = g = y, h = 0: s = e^y, S = e^y - 1
    ScaleTable t(CoefficientSet(LogisticFeller{1.0, 0.0, 0.0, 1.0}));
    EXPECT_NEAR(t.S(1.0), std::exp(1.0) - 1.0, 1e-11);
    EXPECT_NEAR(t.log_s(3.7), 3.7, 1e-11);
    EXPECT_NEAR(t.S(0.3), std::expm1(0.3), 1e-12);
}

TEST(ScaleTable, LogisticScaleDensity) {
    // rate = (-1 + (2-y))/1 = 1 - y -> log s = -(y - y^2/2); at 2 this is 0
    ScaleTable t(CoefficientSet(LogisticFeller{1.0, 1.0, 2.0, 1.0}));
    EXPECT_NEAR(t.s(2.0), 1.0, 1e-11);
    EXPECT_NEAR(t.log_s(1.0), -0.5, 1e-11);
}
