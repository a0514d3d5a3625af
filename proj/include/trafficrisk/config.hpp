#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "trafficrisk/analysis.hpp"
#include "trafficrisk/errors.hpp"
#include "trafficrisk/network.hpp"
#include "trafficrisk/simulation.hpp"

namespace trafficrisk {

inline constexpr int kSchemaVersion = 1;

struct OutputConfig {
  std::string dir = "out";
  std::vector<double> toes_times;
};

struct SweepConfig {
  SweepAxis alpha1;
  SweepAxis alpha2;
};

struct Experiment {
  Model model;
  std::size_t runs = 1;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::optional<SweepConfig> sweep;
  OutputConfig output;
};

namespace detail {

using nlohmann::json;

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

inline void check_keys(const json& j, const char* where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw ConfigError(std::string(where) + ": unknown field '" + k + "'");
  }
}

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

inline CapacityProfile parse_capacity(const json& j) {
  if (j.is_number()) return CapacityProfile(j.get<double>());
  if (!j.is_array()) throw ConfigError("road capacity must be a number or a list of segments");
  std::vector<CapacityProfile::Segment> segs;
  for (const auto& s : j) {
    check_keys(s, "capacity segment", {"from", "to", "value"});
    segs.push_back({s.at("from").get<double>(), s.at("to").get<double>(), s.at("value").get<double>()});
  }
  return CapacityProfile(std::move(segs));
}

}  // namespace detail

// Network document:
// { "schema_version": 1,
//   "roads": [ {"id", "a", "b", "capacity", "cells"?, "initial_density"} ],
//   "junctions": [ {"id", "in", "out", "distribution"?, "rightway"?, "gamma_v"?} ],
//   "sinks": [ids]? }
inline NetworkDescription parse_network(const nlohmann::json& j) {
  using detail::get_or;
  detail::check_keys(j, "network", {"schema_version", "roads", "junctions", "sinks", "name"});
  if (get_or<int>(j, "schema_version", kSchemaVersion) != kSchemaVersion)
    throw ConfigError("unsupported network schema_version");
  NetworkDescription d;
  if (!j.contains("roads")) throw ConfigError("network needs roads");
  try {
    for (const auto& r : j.at("roads")) {
      detail::check_keys(r, "road", {"id", "a", "b", "length", "capacity", "cells", "initial_density"});
      RoadSpec s;
      s.id = r.at("id").get<int>();
      s.a = get_or<double>(r, "a", 0.0);
      s.b = r.contains("b") ? r.at("b").get<double>() : s.a + get_or<double>(r, "length", 1.0);
      if (r.contains("capacity")) s.capacity = detail::parse_capacity(r.at("capacity"));
      if (r.contains("cells")) s.cells = r.at("cells").get<std::size_t>();
      s.initial_density = get_or<double>(r, "initial_density", 0.0);
      d.roads.push_back(s);
    }
    if (j.contains("junctions"))
      for (const auto& v : j.at("junctions")) {
        detail::check_keys(v, "junction", {"id", "in", "out", "distribution", "rightway", "gamma_v"});
        JunctionSpec s;
        s.id = v.at("id").get<std::string>();
        s.in = v.at("in").get<std::vector<int>>();
        s.out = v.at("out").get<std::vector<int>>();
        s.distribution = get_or<std::vector<double>>(v, "distribution", {});
        s.rightway = get_or<double>(v, "rightway", 0.5);
        if (v.contains("gamma_v")) s.gamma_v = v.at("gamma_v").get<double>();
        d.junctions.push_back(s);
      }
    d.sinks = get_or<std::vector<int>>(j, "sinks", {});
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("network: ") + e.what());
  }
  return d;
}

inline InflowProfile parse_inflow(const nlohmann::json& j, const std::filesystem::path& base) {
  using detail::get_or;
  const auto type = get_or<std::string>(j, "type", "sinusoid");
  if (type == "sinusoid") {
    detail::check_keys(j, "inflow", {"type", "base", "amplitude", "frequency", "phase", "cutoff"});
    SinusoidInflow s;
    s.base = get_or(j, "base", s.base);
    s.amplitude = get_or(j, "amplitude", s.amplitude);
    s.frequency = get_or(j, "frequency", s.frequency);
    s.phase = get_or(j, "phase", s.phase);
    s.cutoff = get_or(j, "cutoff", s.cutoff);
    return s;
  }
  if (type == "hourly") {
    detail::check_keys(j, "inflow", {"type", "counts", "counts_file", "scale", "hour"});
    std::vector<double> counts;
    if (j.contains("counts_file")) {
      std::ifstream in(base / j.at("counts_file").get<std::string>());
      if (!in) throw ConfigError("cannot open hourly counts file");
      counts = read_hourly_counts(in);
    } else {
      counts = get_or<std::vector<double>>(j, "counts", {});
    }
    try {
      return build_inflow_profile(counts, get_or(j, "scale", 1.0), get_or(j, "hour", 1.0));
    } catch (const DataError& e) {
      throw ConfigError(std::string("inflow: ") + e.what());
    }
  }
  if (type == "none") return InflowProfile::zero();
  throw ConfigError("unknown inflow type '" + type + "'");
}

// Experiment document, see configs/ for complete examples.
inline Experiment parse_experiment(const nlohmann::json& j, const std::filesystem::path& base = ".") {
  using detail::get_or;
  using nlohmann::json;
  detail::check_keys(j, "config", {"schema_version", "name", "network", "solver", "accidents", "junctions", "policy",
                                   "runs", "seed", "threads", "sweep", "output"});
  if (get_or<int>(j, "schema_version", 0) != kSchemaVersion)
    throw ConfigError("config schema_version must be " + std::to_string(kSchemaVersion));
  if (!j.contains("network")) throw ConfigError("config needs a network");
  const json net_doc =
      j.at("network").is_string() ? detail::read_json(base / j.at("network").get<std::string>()) : j.at("network");
  NetworkDescription desc = parse_network(net_doc);

  Experiment ex;
  Model& m = ex.model;
  const json solver = get_or<json>(j, "solver", json::object());
  detail::check_keys(solver, "solver", {"dx", "dt", "horizon", "inflow", "capacity_scale"});
  m.solver.dx = get_or(solver, "dx", 0.01);
  m.solver.dt = get_or(solver, "dt", 0.01);
  m.solver.horizon = get_or(solver, "horizon", 150.0);
  const double cap_scale = get_or(solver, "capacity_scale", 1.0);
  if (!(cap_scale > 0.0)) throw ConfigError("capacity_scale must be positive");
  if (cap_scale != 1.0)
    for (auto& r : desc.roads) r.capacity = r.capacity.scaled(cap_scale);
  m.inflow = solver.contains("inflow") ? parse_inflow(solver.at("inflow"), base) : InflowProfile(SinusoidInflow{});

  // per-junction control overrides by id
  const json overrides = get_or<json>(j, "junctions", json::object());
  for (const auto& [id, o] : overrides.items()) {
    detail::check_keys(o, "junction override", {"distribution", "alpha", "rightway", "gamma_v"});
    auto it = std::find_if(desc.junctions.begin(), desc.junctions.end(), [&](const auto& s) { return s.id == id; });
    if (it == desc.junctions.end()) throw ConfigError("override for unknown junction '" + id + "'");
    if (o.contains("alpha")) {
      const double a = o.at("alpha").get<double>();
      it->distribution = {a, 1.0 - a};
    }
    if (o.contains("distribution")) it->distribution = o.at("distribution").get<std::vector<double>>();
    if (o.contains("rightway")) it->rightway = o.at("rightway").get<double>();
    if (o.contains("gamma_v")) it->gamma_v = o.at("gamma_v").get<double>();
  }

  const json acc = get_or<json>(j, "accidents", json::object());
  detail::check_keys(acc, "accidents", {"enabled", "gamma", "gamma_v", "alpha", "beta", "beta_tilde", "nu",
                                        "size_rate", "severity_a", "severity_b", "base_duration", "duration_rate"});
  m.accidents = get_or(acc, "enabled", true);
  m.risk.gamma = get_or(acc, "gamma", m.risk.gamma);
  const double gamma_v = get_or(acc, "gamma_v", 0.2);
  m.risk.beta_tilde = get_or(acc, "beta_tilde", m.risk.beta_tilde);
  m.risk.nu = get_or(acc, "nu", m.risk.nu);
  m.risk.size_rate = get_or(acc, "size_rate", m.risk.size_rate);
  m.risk.severity_a = get_or(acc, "severity_a", m.risk.severity_a);
  m.risk.severity_b = get_or(acc, "severity_b", m.risk.severity_b);
  m.risk.base_duration = get_or(acc, "base_duration", m.risk.base_duration);
  m.risk.duration_rate = get_or(acc, "duration_rate", m.risk.duration_rate);
  try {
    m.kernel = ExcitationKernel(get_or(acc, "alpha", 0.1), get_or(acc, "beta", 2.0));
  } catch (const Error& e) {
    throw ConfigError(std::string("accidents: ") + e.what());
  }

  m.net = build_network(desc, m.solver.dx, gamma_v);
  m.controls = JunctionControls::from(m.net);

  if (j.contains("policy")) {
    const json& p = j.at("policy");
    detail::check_keys(p, "policy", {"junction", "watched_road", "alt_roads", "base_split", "flex_split",
                                     "cm_threshold", "serious_threshold", "v_ref"});
    ReroutePolicy pol;
    pol.junction = m.net.junction_index(p.at("junction").get<std::string>());
    pol.watched_road = m.net.road_index(p.at("watched_road").get<int>());
    for (int id : p.at("alt_roads").get<std::vector<int>>()) pol.alt_roads.push_back(m.net.road_index(id));
    pol.base_split = get_or(p, "base_split", m.controls.split[pol.junction]);
    pol.flex_split = get_or(p, "flex_split", pol.flex_split);
    pol.cm_threshold = get_or(p, "cm_threshold", pol.cm_threshold);
    pol.serious_threshold = get_or(p, "serious_threshold", pol.serious_threshold);
    pol.v_ref = get_or(p, "v_ref", pol.v_ref);
    m.policy = pol;
  }

  const long long runs = get_or<long long>(j, "runs", 1);
  if (runs < 1) throw ConfigError("runs must be at least 1");
  ex.runs = static_cast<std::size_t>(runs);
  ex.seed = get_or<std::uint64_t>(j, "seed", 1);
  ex.threads = std::max<std::size_t>(1, get_or<std::size_t>(j, "threads", 1));

  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    detail::check_keys(s, "sweep", {"alpha1", "alpha2"});
    auto axis = [&](const char* key) {
      const json& a = s.at(key);
      detail::check_keys(a, key, {"junction", "values"});
      SweepAxis ax;
      ax.junction = m.net.junction_index(a.at("junction").get<std::string>());
      ax.values = a.at("values").get<std::vector<double>>();
      if (ax.values.empty()) throw ConfigError("sweep grids must be nonempty");
      for (double v : ax.values)
        if (v < 0.0 || v > 1.0) throw ConfigError("sweep values must lie in [0,1]");
      if (m.net.junction(ax.junction).kind() != JunctionKind::one_to_two)
        throw ConfigError("sweep junction must be a 1-2 junction");
      return ax;
    };
    ex.sweep = SweepConfig{axis("alpha1"), axis("alpha2")};
  }

  const json out = get_or<json>(j, "output", json::object());
  detail::check_keys(out, "output", {"dir", "snapshots", "toes_times", "cm_stride"});
  ex.output.dir = get_or<std::string>(out, "dir", "out");
  ex.output.toes_times = get_or<std::vector<double>>(out, "toes_times", {});
  m.snapshot_times = get_or<std::vector<double>>(out, "snapshots", {});
  m.cm_stride = get_or<std::size_t>(out, "cm_stride", 0);
  m.validate();
  return ex;
}

inline Experiment load_experiment(const std::filesystem::path& path) {
  const auto doc = detail::read_json(path);
  try {
    return parse_experiment(doc, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

inline nlohmann::ordered_json aggregate_json(const Aggregate& a, const Network& net) {
  nlohmann::ordered_json j;
  auto est = [](const Estimate& e) { return nlohmann::ordered_json{{"mean", e.mean}, {"stderr", e.stderr_}}; };
  j["runs"] = a.runs;
  j["ttt"] = est(a.ttt);
  j["accidents"] = est(a.accidents);
  nlohmann::ordered_json roads = nlohmann::ordered_json::object(), junctions = nlohmann::ordered_json::object();
  for (std::size_t r = 0; r < a.per_road.size(); ++r) roads[std::to_string(net.road(r).id)] = est(a.per_road[r]);
  for (std::size_t v = 0; v < a.per_junction.size(); ++v) junctions[net.junction(v).id] = est(a.per_junction[v]);
  j["accidents_per_road"] = roads;
  j["accidents_per_junction"] = junctions;
  j["toes_defined"] = a.toes_defined;
  nlohmann::ordered_json cdf = nlohmann::ordered_json::array();
  for (const auto& [t, p] : a.toes_cdf) cdf.push_back({{"t", t}, {"p", p}});
  j["toes_cdf"] = cdf;
  return j;
}

}  // namespace trafficrisk
