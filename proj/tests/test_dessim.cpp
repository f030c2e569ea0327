#include <gtest/gtest.h>

#include "support.hpp"

using namespace qcs;
using qcs::testing::small;

namespace {

sim::SimConfig sim_config(const Scenario& sc, std::uint64_t measured = 10'000, int reps = 10,
                      std::uint64_t seed = 1) {
  sim::SimConfig cfg{sc};
  cfg.measured_requests = measured;
  cfg.replications = reps;
  cfg.master_seed = seed;
  return cfg;
}

bool within(const sim::Estimate& e, double target, double k = 3.0) {
  return std::abs(e.mean - target) <= k * e.se;
}

}  // namespace

TEST(Simulation, ParallelSmallBudgetMatchesMg1) {
  const sim::SimReport r = sim::run(sim_config(small(7, Strategy::Parallel, 5)));
  EXPECT_TRUE(within(r.mean_wait, 6.797752809)) << r.mean_wait.mean << " +- " << r.mean_wait.se;
  EXPECT_TRUE(within(r.mean_sojourn, 116.7977528)) << r.mean_sojourn.mean << " +- " << r.mean_sojourn.se;
  EXPECT_DOUBLE_EQ(r.mean_service.mean, 110.0);
  EXPECT_EQ(r.requests_completed, 100'000u);
}

TEST(Simulation, LittleAndThroughput) {
  for (const Scenario& sc : {small(7, Strategy::Parallel, 5), small(3, Strategy::Sequential, 8),
                             qcs::testing::large(7.5, 0, Window::batches(8), 2, Strategy::Parallel, 4)}) {
    const sim::SimReport r = sim::run(sim_config(sc));
    EXPECT_TRUE(within(r.little_gap, 0.0)) << r.little_gap.mean << " +- " << r.little_gap.se;
    EXPECT_TRUE(within(r.throughput, sc.arrival_rate())) << r.throughput.mean << " +- " << r.throughput.se;
    EXPECT_NEAR(r.utilization.mean, r.rho, 6.0 * r.utilization.se + 1e-3);
  }
}

TEST(Simulation, SampledServiceMatchesAnalyticService) {
  const Scenario sc = qcs::testing::large(7.5, 0, Window::batches(8), 2, Strategy::Parallel, 4);
  const sim::SimReport r = sim::run(sim_config(sc));
  window::WindowOptions exact;
  exact.prefer_exact = true;
  EXPECT_TRUE(within(r.mean_service, evaluate(sc, exact).service.m1));
}

TEST(Simulation, Deterministic) {
  const Scenario sc = small(3, Strategy::Sequential, 8);
  const sim::SimReport a = sim::run(sim_config(sc, 2000, 6, 42), 1);
  const sim::SimReport b = sim::run(sim_config(sc, 2000, 6, 42), 4);
  EXPECT_EQ(a.mean_sojourn.mean, b.mean_sojourn.mean);
  EXPECT_EQ(a.mean_sojourn.se, b.mean_sojourn.se);
  EXPECT_EQ(a.mean_in_system.mean, b.mean_in_system.mean);
  const sim::SimReport c = sim::run(sim_config(sc, 2000, 6, 43), 1);
  EXPECT_NE(a.mean_sojourn.mean, c.mean_sojourn.mean);
}

TEST(Simulation, SingleStationStrategiesAgree) {
  const sim::SimReport seq = sim::run(sim_config(small(1, Strategy::Sequential, 4)));
  const sim::SimReport par = sim::run(sim_config(small(1, Strategy::Parallel, 4)));
  // Same queue, same streams.
  EXPECT_EQ(seq.mean_sojourn.mean, par.mean_sojourn.mean);
  EXPECT_TRUE(within(seq.mean_wait, *evaluate(small(1, Strategy::Sequential, 4)).wait.mean_wait));
}

TEST(Simulation, StandardErrorShrinksWithRunLength) {
  const Scenario sc = small(7, Strategy::Parallel, 5);
  const sim::SimReport short_run = sim::run(sim_config(sc, 2000, 100, 7));
  const sim::SimReport long_run = sim::run(sim_config(sc, 4000, 100, 8));
  const double ratio = short_run.mean_wait.se / long_run.mean_wait.se;
  EXPECT_GT(ratio, std::sqrt(2.0) * 0.75);
  EXPECT_LT(ratio, std::sqrt(2.0) * 1.25);
}

TEST(Simulation, LeeLongtonCloseForModerateLoad) {
  const Scenario sc = small(3, Strategy::Sequential, 8);
  const sim::SimReport r = sim::run(sim_config(sc, 50'000, 10));
  const double approx = *evaluate(sc).wait.mean_wait;
  EXPECT_LT(std::abs(approx - r.mean_wait.mean) / r.mean_wait.mean, 0.10);
}

TEST(Simulation, WarmupRule) {
  EXPECT_EQ(sim::default_warmup(0.11, 1), 10u);
  EXPECT_EQ(sim::default_warmup(0.5, 3), 30u);
  EXPECT_EQ(sim::default_warmup(0.75, 2), 60u);
  EXPECT_EQ(sim::default_warmup(0.999999, 7), sim::max_default_warmup);
}

TEST(Simulation, RejectsBadConfigs) {
  auto kind = [](const sim::SimConfig& cfg) {
    try {
      sim::run(cfg);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Unsupported;
  };
  EXPECT_EQ(kind(sim_config(small(7, Strategy::Parallel, 5), 999)), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind(sim_config(small(7, Strategy::Parallel, 5), 1000, 4)), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind(sim_config(small(1, Strategy::Sequential, 6))), ErrorKind::Overloaded);
}

TEST(Simulation, SeedDerivation) {
  EXPECT_NE(sim::replication_seed(1, 0, 0), sim::replication_seed(1, 0, 1));
  EXPECT_NE(sim::replication_seed(1, 0, 0), sim::replication_seed(1, 1, 0));
  EXPECT_NE(sim::replication_seed(1, 0, 0), sim::replication_seed(2, 0, 0));
  EXPECT_EQ(sim::replication_seed(1, 3, 1), derive_seed(derive_seed(1, 3), 1));
}
