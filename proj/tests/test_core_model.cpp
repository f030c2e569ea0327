#include <gtest/gtest.h>

#include <json.hpp>

#include "support.hpp"

using namespace qcs;
using qcs::testing::small;

namespace {

NetworkConfig net_of(int users, int stations) {
  return experiments::small_budget(stations, Strategy::Sequential, users).network;
}

RequestModel request(int n, Window w) {
  RequestModel r;
  r.packets = n;
  r.window = w;
  r.lambda0_per_us = 1e-4;
  return r;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::Unsupported;
}

}  // namespace

TEST(Validate, FeasibleWindowAccepted) {
  const Scenario sc = validate(net_of(2, 1), request(7, Window::batches(10)), Strategy::Sequential);
  EXPECT_EQ(sc.batch(), 1);
  EXPECT_EQ(sc.servers(), 1);
}

TEST(Validate, InfeasibleWindowRejected) {
  EXPECT_EQ(kind_of([] { validate(net_of(2, 1), request(2, Window::batches(1)), Strategy::Sequential); }),
            ErrorKind::InfeasibleWindow);
  // Parallel packs k packets per batch, so the same window becomes feasible.
  EXPECT_NO_THROW(validate(net_of(2, 2), request(2, Window::batches(1)), Strategy::Parallel));
}

TEST(Validate, ArrivalRate) {
  EXPECT_DOUBLE_EQ(small(7, Strategy::Parallel, 5).arrival_rate(), 1e-3);
}

TEST(Validate, RateIncreasingInUsersAndLinearInLambda0) {
  double prev = 0.0;
  for (int u = 2; u <= 50; ++u) {
    const double r = aggregate_rate(u, 1e-4);
    EXPECT_GT(r, prev);
    prev = r;
    EXPECT_NEAR(aggregate_rate(u, 3e-4), 3.0 * r, 1e-15);
  }
}

TEST(Validate, StrategyMapping) {
  const Scenario seq = small(7, Strategy::Sequential, 3);
  const Scenario par = small(7, Strategy::Parallel, 3);
  EXPECT_EQ(seq.batch(), 1);
  EXPECT_EQ(seq.servers(), 7);
  EXPECT_EQ(par.batch(), 7);
  EXPECT_EQ(par.servers(), 1);
  EXPECT_EQ(with_strategy(seq, Strategy::Parallel).servers(), 1);
  EXPECT_EQ(with_users(seq, 9).network().users, 9);
}

TEST(Validate, HopAndProbability) {
  const Scenario sc = qcs::testing::large(30.0, 5, Window::infinite(), 2, Strategy::Sequential, 2);
  EXPECT_DOUBLE_EQ(sc.hop_km(), 5.0);
  EXPECT_DOUBLE_EQ(sc.success_probability(), hardware::p_success(30.0, 5));
}

TEST(Validate, RejectsBadParameters) {
  auto bad = [](auto mutate) {
    NetworkConfig net = net_of(3, 2);
    RequestModel req = request(7, Window::batches(10));
    mutate(net, req);
    return kind_of([&] { validate(net, req, Strategy::Sequential); });
  };
  EXPECT_EQ(bad([](NetworkConfig& n, RequestModel&) { n.users = 1; }), ErrorKind::InvalidParameter);
  EXPECT_EQ(bad([](NetworkConfig& n, RequestModel&) { n.arm_km = 0.0; }), ErrorKind::InvalidParameter);
  EXPECT_EQ(bad([](NetworkConfig& n, RequestModel&) { n.repeaters = -1; }), ErrorKind::InvalidParameter);
  EXPECT_EQ(bad([](NetworkConfig& n, RequestModel&) { n.stations = 0; }), ErrorKind::InvalidParameter);
  EXPECT_EQ(bad([](NetworkConfig& n, RequestModel&) { n.t_fwd_us = -5.0; }), ErrorKind::InvalidParameter);
  EXPECT_EQ(bad([](NetworkConfig& n, RequestModel&) { n.c_km_per_us = NAN; }), ErrorKind::InvalidParameter);
  EXPECT_EQ(bad([](NetworkConfig& n, RequestModel&) { n.t_control_us = -1.0; }), ErrorKind::InvalidParameter);
  EXPECT_EQ(bad([](NetworkConfig& n, RequestModel&) { n.success = FixedProbability{0.0}; }),
            ErrorKind::InvalidParameter);
  EXPECT_EQ(bad([](NetworkConfig& n, RequestModel&) { n.success = FixedProbability{1.5}; }),
            ErrorKind::InvalidParameter);
  EXPECT_EQ(bad([](NetworkConfig&, RequestModel& r) { r.packets = 0; }), ErrorKind::InvalidParameter);
  EXPECT_EQ(bad([](NetworkConfig&, RequestModel& r) { r.lambda0_per_us = 0.0; }), ErrorKind::InvalidParameter);
  EXPECT_THROW(Window::batches(0), Error);
}

TEST(MomentPairTest, VarianceAndScv) {
  const MomentPair mp{10.0, 117.0};
  EXPECT_DOUBLE_EQ(mp.variance(), 17.0);
  EXPECT_DOUBLE_EQ(mp.scv(), 0.17);
}

TEST(WindowTest, Str) {
  EXPECT_EQ(Window::infinite().str(), "inf");
  EXPECT_EQ(Window::batches(8).str(), "8");
  EXPECT_TRUE(Window::infinite().is_infinite());
  EXPECT_EQ(Window::batches(8).size(), 8);
}

// ---------------------------------------------------------------------------
// Scenario JSON schema

namespace {

nlohmann::json small_json() {
  return nlohmann::json::parse(R"({"u":5,"L_km":1,"N":0,"k":7,"t_fwd_us":100,"c_km_per_us":0.2,
    "p":{"fixed":1},"n":7,"w":10,"lambda0_per_us":1e-4,"strategy":"parallel"})");
}

}  // namespace

TEST(ScenarioJson, ParsesSmallBudget) {
  const auto in = config::parse_scenario(small_json());
  EXPECT_EQ(in.network.users, 5);
  EXPECT_EQ(in.network.stations, 7);
  EXPECT_EQ(in.request.window.size(), 10);
  EXPECT_EQ(in.strategy, Strategy::Parallel);
  EXPECT_EQ(in.network.t_control_us, 0.0);
  EXPECT_DOUBLE_EQ(std::get<FixedProbability>(in.network.success).p, 1.0);
}

TEST(ScenarioJson, RoundTrip) {
  auto j = small_json();
  j["w"] = "inf";
  j["p"] = {{"all_photonic", true}};
  j["t_control_us"] = 12.5;
  const auto in = config::parse_scenario(j);
  EXPECT_TRUE(in.request.window.is_infinite());
  EXPECT_TRUE(std::holds_alternative<AllPhotonic>(in.network.success));
  EXPECT_EQ(config::to_json(in), j);
}

TEST(ScenarioJson, RejectsSchemaViolations) {
  auto rejects = [](auto mutate) {
    auto j = small_json();
    mutate(j);
    return kind_of([&] { config::parse_scenario(j); });
  };
  using J = nlohmann::json;
  EXPECT_EQ(rejects([](J& j) { j["extra"] = 1; }), ErrorKind::InvalidConfig);
  EXPECT_EQ(rejects([](J& j) { j.erase("k"); }), ErrorKind::InvalidConfig);
  EXPECT_EQ(rejects([](J& j) { j["u"] = 2.5; }), ErrorKind::InvalidConfig);
  EXPECT_EQ(rejects([](J& j) { j["L_km"] = "far"; }), ErrorKind::InvalidConfig);
  EXPECT_EQ(rejects([](J& j) { j["w"] = "forever"; }), ErrorKind::InvalidConfig);
  EXPECT_EQ(rejects([](J& j) { j["w"] = 0; }), ErrorKind::InvalidConfig);
  EXPECT_EQ(rejects([](J& j) { j["strategy"] = "both"; }), ErrorKind::InvalidConfig);
  EXPECT_EQ(rejects([](J& j) { j["p"] = 0.7; }), ErrorKind::InvalidConfig);
  EXPECT_EQ(rejects([](J& j) { j["p"] = {{"all_photonic", false}}; }), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind_of([] { config::parse_scenario(nlohmann::json::array()); }), ErrorKind::InvalidConfig);
}

TEST(ScenarioJson, ValidationErrorsKeepTheirKind) {
  auto j = small_json();
  j["n"] = 80;
  j["w"] = 1;
  EXPECT_EQ(kind_of([&] { config::load_scenario(j); }), ErrorKind::InfeasibleWindow);
}
