#include <gtest/gtest.h>

#include <filesystem>

#include "trafficrisk/config.hpp"

using namespace trafficrisk;
using nlohmann::json;

namespace {

const std::filesystem::path kConfigs = TRAFFICRISK_CONFIG_DIR;

json minimal() {
  return json::parse(R"({
    "schema_version": 1,
    "network": {
      "roads": [{"id": 1, "a": 0, "b": 1, "capacity": 1.0}],
      "sinks": [1]
    },
    "solver": {"dx": 0.1, "dt": 0.05, "horizon": 1.0}
  })");
}

}  // namespace

TEST(Config, ShippedConfigsLoad) {
  for (const char* name : {"diamond_accidents.json", "diamond_risk.json", "reroute_i.json", "reroute_ii.json",
                           "reroute_iii.json", "diamond_sweep.json", "diamond_hourly.json"}) {
    SCOPED_TRACE(name);
    EXPECT_NO_THROW(load_experiment(kConfigs / name));
  }
}

TEST(Config, DiamondContents) {
  const auto ex = load_experiment(kConfigs / "reroute_ii.json");
  const Network& net = ex.model.net;
  EXPECT_EQ(net.road_count(), 7u);
  EXPECT_EQ(net.junction_count(), 4u);
  EXPECT_DOUBLE_EQ(ex.model.controls.split[net.junction_index("B")], 0.65);
  EXPECT_DOUBLE_EQ(ex.model.controls.split[net.junction_index("C")], 0.3);
  ASSERT_TRUE(ex.model.policy.has_value());
  EXPECT_DOUBLE_EQ(ex.model.policy->flex_split, 0.7);
  EXPECT_EQ(ex.model.policy->watched_road, net.road_index(5));
  EXPECT_DOUBLE_EQ(ex.model.risk.gamma, 0.1);
  EXPECT_DOUBLE_EQ(net.junction(net.junction_index("C")).gamma_v, 0.04);
  EXPECT_EQ(ex.runs, 300u);
  EXPECT_DOUBLE_EQ(ex.model.inflow.cutoff(), 75.0);
}

TEST(Config, Defaults) {
  const auto ex = parse_experiment(minimal());
  EXPECT_EQ(ex.runs, 1u);
  EXPECT_TRUE(ex.model.accidents);
  EXPECT_DOUBLE_EQ(ex.model.risk.gamma, 0.5);
  EXPECT_DOUBLE_EQ(ex.model.kernel.alpha(), 0.1);
  EXPECT_DOUBLE_EQ(ex.model.kernel.beta(), 2.0);
}

TEST(Config, Rejections) {
  auto rejects = [](json j) {
    try {
      parse_experiment(j);
    } catch (const ConfigError&) {
      return true;
    }
    return false;
  };
  json j = minimal();
  j["schema_version"] = 2;
  EXPECT_TRUE(rejects(j));
  j = minimal();
  j.erase("schema_version");
  EXPECT_TRUE(rejects(j));
  j = minimal();
  j["bogus"] = 1;
  EXPECT_TRUE(rejects(j));
  j = minimal();
  j["solver"]["dtt"] = 1;
  EXPECT_TRUE(rejects(j));
  j = minimal();
  j["runs"] = 0;
  EXPECT_TRUE(rejects(j));
  j = minimal();
  j["accidents"] = {{"alpha", 3.0}, {"beta", 2.0}};
  EXPECT_TRUE(rejects(j));
  j = minimal();
  j["solver"]["dt"] = 0.2;  // CFL
  EXPECT_THROW(simulate(parse_experiment(j).model, 1), NumericalError);
  j = minimal();
  j["network"]["roads"][0]["capacity"] = -1.0;
  EXPECT_TRUE(rejects(j));
  j = minimal();
  j["junctions"] = {{"Z", {{"alpha", 0.5}}}};
  EXPECT_TRUE(rejects(j));
  j = minimal();
  j["solver"]["inflow"] = {{"type", "hourly"}, {"counts", std::vector<double>(5, 1.0)}};
  EXPECT_TRUE(rejects(j));
  EXPECT_THROW(load_experiment(kConfigs / "does_not_exist.json"), ConfigError);
}

TEST(Config, SweepGrids) {
  const auto ex = load_experiment(kConfigs / "diamond_sweep.json");
  ASSERT_TRUE(ex.sweep.has_value());
  EXPECT_EQ(ex.sweep->alpha1.values.size(), 11u);
  json j = json::parse(R"({
    "schema_version": 1,
    "network": "diamond_network.json",
    "sweep": {"alpha1": {"junction": "B", "values": [1.5]}, "alpha2": {"junction": "C", "values": [0.5]}}
  })");
  EXPECT_THROW(parse_experiment(j, kConfigs), ConfigError);
  j["sweep"]["alpha1"]["values"] = json::array();
  EXPECT_THROW(parse_experiment(j, kConfigs), ConfigError);
  j["sweep"]["alpha1"] = {{"junction", "D"}, {"values", {0.5}}};
  EXPECT_THROW(parse_experiment(j, kConfigs), ConfigError);
}

TEST(Config, AggregateJson) {
  const auto ex = load_experiment(kConfigs / "reroute_i.json");
  Aggregate a;
  a.runs = 2;
  a.ttt = {100.5, 1.25};
  a.per_road.assign(7, {});
  a.per_junction.assign(4, {});
  a.toes_cdf = {{100.0, 0.5}};
  const auto j = aggregate_json(a, ex.model.net);
  EXPECT_EQ(j["runs"], 2);
  EXPECT_DOUBLE_EQ(j["ttt"]["mean"].get<double>(), 100.5);
  EXPECT_TRUE(j["accidents_per_road"].contains("7"));
  EXPECT_TRUE(j["accidents_per_junction"].contains("E"));
  EXPECT_DOUBLE_EQ(j["toes_cdf"][0]["p"].get<double>(), 0.5);
}
