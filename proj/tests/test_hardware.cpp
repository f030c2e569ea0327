#include <gtest/gtest.h>

#include "qcs/hardware.hpp"

namespace hw = qcs::hardware;

TEST(AlphaEff, PolynomialValues) {
  EXPECT_NEAR(hw::alpha_eff(1.0), 3.06e-4, 1e-15);
  EXPECT_NEAR(hw::alpha_eff(7.5), 0.10733906, 1e-8);
  EXPECT_EQ(hw::alpha_eff(0.0), 0.0);
  EXPECT_LT(hw::alpha_eff(1e-6), 1e-15);
}

TEST(AlphaEff, RejectsNegativeHop) {
  EXPECT_THROW(hw::alpha_eff(-1.0), qcs::Error);
}

TEST(PSuccess, ReferenceGeometries) {
  EXPECT_NEAR(hw::p_success(7.5, 0), 0.6902261456, 1e-9);
  EXPECT_NEAR(hw::p_success(30.0, 5), 0.7075, 5e-4);
  EXPECT_NEAR(hw::p_success(1e-6, 0), 1.0, 1e-15);
}

TEST(PSuccess, StrictlyIncreasingInRepeaters) {
  for (double L : {2.0, 7.5, 13.0, 30.0, 60.0}) {
    for (int N = 0; N < 30; ++N) {
      EXPECT_LT(hw::p_success(L, N), hw::p_success(L, N + 1)) << "L=" << L << " N=" << N;
    }
  }
}

TEST(PSuccess, ClampedForAbsurdGeometry) {
  const double p = hw::p_success(1e4, 0);
  EXPECT_EQ(p, hw::min_success_probability);
  EXPECT_TRUE(std::isfinite(std::log(p)));
}

TEST(PSuccess, RejectsBadInput) {
  EXPECT_THROW(hw::p_success(-1.0, 0), qcs::Error);
  EXPECT_THROW(hw::p_success(1.0, -1), qcs::Error);
}

TEST(OptimizeN, ReferenceOptima) {
  EXPECT_EQ(hw::optimize_N(7.5), 0);
  EXPECT_EQ(hw::optimize_N(13.0), 1);
  EXPECT_EQ(hw::optimize_N(18.0), 2);
  EXPECT_EQ(hw::optimize_N(30.0), 5);
}

TEST(OptimizeN, OptimaGiveRoughlySeventyPercent) {
  for (double L : {7.5, 13.0, 18.0, 30.0}) {
    const double p = hw::p_success(L, hw::optimize_N(L));
    EXPECT_GE(p, 0.68) << L;
    EXPECT_LE(p, 0.72) << L;
  }
}

TEST(OptimizeN, NondecreasingInDistance) {
  int prev = 0;
  for (int L = 1; L <= 40; ++L) {
    const int n = hw::optimize_N(L);
    EXPECT_GE(n, prev) << "L=" << L;
    prev = n;
  }
}

TEST(OptimizeN, IsExhaustiveArgmin) {
  for (double L : {5.0, 17.0, 33.0}) {
    const int best = hw::optimize_N(L, 20);
    for (int N = 0; N <= 20; ++N) EXPECT_LE(hw::repeater_cost(L, best), hw::repeater_cost(L, N));
  }
  EXPECT_EQ(hw::optimize_N(30.0, 2), 2);  // capped search
  EXPECT_THROW(hw::optimize_N(0.0), qcs::Error);
}
