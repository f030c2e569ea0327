#include <gtest/gtest.h>

#include "support.hpp"

using namespace qcs;
using qcs::testing::large;
using qcs::testing::small;

namespace {

double rho_at(const Scenario& sc, int users) {
  const Scenario s = with_users(sc, users);
  return evaluate(s).rho;
}

}  // namespace

TEST(UCrit, SmallBudgetSevenStations) {
  EXPECT_EQ(u_crit(small(7, Strategy::Sequential, 2)).value, 14.0);
  EXPECT_EQ(u_crit(small(7, Strategy::Parallel, 2)).value, 13.0);
}

TEST(UCrit, SingleStationStrategiesCoincide) {
  const CapacityResult seq = u_crit(small(1, Strategy::Sequential, 2));
  const CapacityResult par = u_crit(small(1, Strategy::Parallel, 2));
  EXPECT_EQ(seq.value, 5.0);
  EXPECT_EQ(seq.value, par.value);
  EXPECT_EQ(seq.residual_load, par.residual_load);
}

TEST(UCrit, ParallelFlatBeyondPacketCount) {
  for (int k = 7; k <= 15; ++k) EXPECT_EQ(u_crit(small(k, Strategy::Parallel, 2)).value, 13.0) << k;
}

TEST(UCrit, SequentialTwelveStations) {
  EXPECT_EQ(u_crit(small(12, Strategy::Sequential, 2)).value, 18.0);
}

TEST(UCrit, BracketsUnitLoad) {
  for (int k = 1; k <= 20; ++k) {
    for (Strategy s : {Strategy::Sequential, Strategy::Parallel}) {
      const Scenario sc = small(k, s, 2);
      const int u = static_cast<int>(u_crit(sc).value);
      EXPECT_LE(rho_at(sc, u), 1.0);
      EXPECT_GT(rho_at(sc, u + 1), 1.0);
    }
  }
  for (Window w : {Window::infinite(), Window::batches(10)}) {
    const Scenario sc = large(13.0, 1, w, 3, Strategy::Sequential, 2);
    const int u = static_cast<int>(u_crit(sc).value);
    EXPECT_LE(rho_at(sc, u), 1.0);
    EXPECT_GT(rho_at(sc, u + 1), 1.0);
  }
}

TEST(UCrit, SquareRootScaling) {
  for (int k : {4, 16, 64}) {
    const double ratio =
        u_crit(small(4 * k, Strategy::Sequential, 2)).value / u_crit(small(k, Strategy::Sequential, 2)).value;
    EXPECT_GE(ratio, 1.8) << k;
    EXPECT_LE(ratio, 2.2) << k;
  }
}

TEST(UCrit, LossyLinksNeverHelp) {
  for (double p : {0.5, 0.7, 0.9, 0.99}) {
    for (int k : {1, 3, 7, 12}) {
      for (Strategy s : {Strategy::Sequential, Strategy::Parallel}) {
        auto in = experiments::small_budget(k, s, 2);
        const double ideal = u_crit(config::validate(in)).value;
        in.network.success = FixedProbability{p};
        in.request.window = Window::infinite();
        EXPECT_LE(u_crit(config::validate(in)).value, ideal);
      }
    }
  }
}

TEST(LCrit, FixedProbabilityHasExplicitRoot) {
  // With p fixed, rho is affine in L and the root has a closed form.
  auto in = experiments::small_budget(5, Strategy::Sequential, 6);
  in.network.success = FixedProbability{0.8};
  in.request.window = Window::infinite();
  const Scenario sc = config::validate(in);
  const double scale = in.request.lambda0_per_us * 6 * 5 * 1.0 / (2.0 * 5);
  const double eb = 7.0 / 0.8;
  const double root = (1.0 / scale - in.network.t_fwd_us * eb) * in.network.c_km_per_us / 2.0;
  const CapacityResult r = l_crit(sc, 6);
  EXPECT_NEAR(r.value, root, 1e-5 * root);
  EXPECT_LT(r.residual_load, 1e-5);
  EXPECT_EQ(r.method, CapacityMethod::Bisection);
}

TEST(LCrit, RespectsTravelTimeBound) {
  for (Strategy s : {Strategy::Sequential, Strategy::Parallel}) {
    for (int N : {0, 1, 2, 5, 10}) {
      const Scenario sc = large(1.0, N, Window::infinite(), 12, s, 2);
      for (int u = 2; u <= 20; ++u) {
        const double bound = 0.2 * 12 / (1e-4 * u * (u - 1.0) * sc.batch());
        const CapacityResult r = l_crit(sc, u);
        EXPECT_LE(r.value, bound);
        EXPECT_TRUE(r.bracket_monotone);
        EXPECT_FALSE(r.maxed_out);
      }
    }
  }
}

TEST(LCrit, DecreasesInUsersUntilZero) {
  for (int N : {0, 1, 2, 5, 10}) {
    const Scenario sc = large(1.0, N, Window::infinite(), 12, Strategy::Sequential, 2);
    double prev = 1e300;
    bool hit_zero = false;
    for (int u = 2; u <= 20; ++u) {
      const double L = l_crit(sc, u).value;
      if (hit_zero) {
        EXPECT_EQ(L, 0.0);
        continue;
      }
      if (L == 0.0) {
        hit_zero = true;
        continue;
      }
      EXPECT_LT(L, prev) << "N=" << N << " u=" << u;
      prev = L;
    }
  }
}

TEST(LCrit, RepeaterTradeoff) {
  auto at = [](int N, int u) {
    return l_crit(large(1.0, N, Window::infinite(), 12, Strategy::Sequential, 2), u).value;
  };
  EXPECT_GT(at(5, 10), at(10, 10));
  EXPECT_LT(at(0, 2), at(1, 2));
  EXPECT_LT(at(1, 2), at(2, 2));
  EXPECT_LT(at(2, 2), at(5, 2));
}

TEST(LCrit, SequentialReachesFurther) {
  for (int N : {0, 1, 2, 5, 10}) {
    const Scenario seq = large(1.0, N, Window::infinite(), 12, Strategy::Sequential, 2);
    const Scenario par = large(1.0, N, Window::infinite(), 12, Strategy::Parallel, 2);
    for (int u = 2; u <= 20; ++u) EXPECT_GE(l_crit(seq, u).value, l_crit(par, u).value) << N << " " << u;
  }
}

TEST(LCrit, OverloadedAtZeroDistance) {
  const CapacityResult r = l_crit(large(1.0, 0, Window::infinite(), 1, Strategy::Sequential, 2), 20);
  EXPECT_EQ(r.value, 0.0);
  EXPECT_GT(r.residual_load, 0.0);
  EXPECT_THROW(l_crit(large(1.0, 0, Window::infinite(), 1, Strategy::Sequential, 2), 1), Error);
}

TEST(LCrit, SampledWindowsUseCommonRandomNumbers) {
  window::WindowOptions opts;
  opts.samples = 5000;
  const Scenario sc = large(1.0, 1, Window::batches(10), 4, Strategy::Sequential, 2);
  const CapacityResult r = l_crit(sc, 6, opts);
  EXPECT_TRUE(r.sampled);
  EXPECT_TRUE(r.bracket_monotone);
  EXPECT_GT(r.value, 0.0);
  EXPECT_EQ(r.value, l_crit(sc, 6, opts).value);
}

TEST(LCrit, SingleStationStrategiesBitIdentical) {
  for (int u = 2; u <= 6; ++u) {
    const double a = l_crit(large(1.0, 2, Window::infinite(), 1, Strategy::Sequential, 2), u).value;
    const double b = l_crit(large(1.0, 2, Window::infinite(), 1, Strategy::Parallel, 2), u).value;
    EXPECT_EQ(a, b);
  }
}
