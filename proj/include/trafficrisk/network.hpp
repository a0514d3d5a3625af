#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trafficrisk/errors.hpp"

namespace trafficrisk {

// Piecewise-constant road capacity c_road on [a, b]. Segments are given in
// road coordinates and must tile the interval without gaps.
class CapacityProfile {
public:
  struct Segment {
    double from;
    double to;
    double value;
  };

  CapacityProfile() = default;
  explicit CapacityProfile(double constant) : segments_{{0.0, 0.0, constant}}, constant_(true) {}
  explicit CapacityProfile(std::vector<Segment> segments) : segments_(std::move(segments)) {}

  bool is_constant() const noexcept { return constant_; }
  const std::vector<Segment>& segments() const noexcept { return segments_; }

  double at(double x) const {
    if (constant_) return segments_.front().value;
    for (const auto& s : segments_)
      if (x >= s.from && x < s.to) return s.value;
    return segments_.back().value;
  }

  double sup() const {
    double m = 0.0;
    for (const auto& s : segments_) m = std::max(m, s.value);
    return m;
  }

  void validate(double a, double b) const {
    if (segments_.empty()) throw ConfigError("capacity profile is empty");
    for (const auto& s : segments_)
      if (!(s.value > 0.0) || !std::isfinite(s.value))
        throw ConfigError("road capacity must be strictly positive and finite");
    if (constant_) return;
    constexpr double tol = 1e-9;
    if (std::abs(segments_.front().from - a) > tol || std::abs(segments_.back().to - b) > tol)
      throw ConfigError("capacity segments must cover the whole road interval");
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      if (!(segments_[i].to > segments_[i].from))
        throw ConfigError("capacity segment with empty extent");
      if (i > 0 && std::abs(segments_[i].from - segments_[i - 1].to) > tol)
        throw ConfigError("capacity segments must be contiguous");
    }
  }

  CapacityProfile scaled(double factor) const {
    CapacityProfile out = *this;
    for (auto& s : out.segments_) s.value *= factor;
    return out;
  }

private:
  std::vector<Segment> segments_;
  bool constant_ = false;
};

struct Road {
  int id = 0;
  double a = 0.0;
  double b = 1.0;
  CapacityProfile capacity{1.0};
  std::size_t cells = 0;
  double initial_density = 0.0;
  // Indices into Network::junctions(); empty at a free end.
  std::optional<std::size_t> upstream_junction;
  std::optional<std::size_t> downstream_junction;

  double length() const noexcept { return b - a; }
  double dx() const noexcept { return length() / static_cast<double>(cells); }
  double cell_center(std::size_t k) const noexcept { return a + (static_cast<double>(k) + 0.5) * dx(); }
  double cell_lower(std::size_t k) const noexcept { return a + static_cast<double>(k) * dx(); }
  double cell_upper(std::size_t k) const noexcept { return a + static_cast<double>(k + 1) * dx(); }
};

enum class JunctionKind { one_to_one, one_to_two, two_to_one };

struct Junction {
  std::string id;
  std::vector<std::size_t> in_roads;   // road indices, ordered
  std::vector<std::size_t> out_roads;  // road indices, ordered
  // Row of the distribution matrix for 1-2 junctions: share of the ingoing
  // flux sent to out_roads[0] and out_roads[1].
  std::vector<double> distribution;
  // Priority share of the downstream supply for in_roads[0] (2-1 only).
  double rightway = 0.5;
  double gamma_v = 0.0;

  JunctionKind kind() const noexcept {
    if (in_roads.size() == 2) return JunctionKind::two_to_one;
    if (out_roads.size() == 2) return JunctionKind::one_to_two;
    return JunctionKind::one_to_one;
  }
};

// One transitive upstream path ending at `road`. `gap` is the summed length
// of the roads strictly between `road` and the road owning the entry;
// `branching` is the product of equal splits over all junctions passed.
struct UpstreamEntry {
  std::size_t road;
  double gap;
  double branching;
};

// Network description in external ids, as read from a file.
struct RoadSpec {
  int id = 0;
  double a = 0.0;
  double b = 1.0;
  CapacityProfile capacity{1.0};
  std::optional<std::size_t> cells;
  double initial_density = 0.0;
};

struct JunctionSpec {
  std::string id;
  std::vector<int> in;
  std::vector<int> out;
  std::vector<double> distribution;
  double rightway = 0.5;
  std::optional<double> gamma_v;
};

struct NetworkDescription {
  std::vector<RoadSpec> roads;
  std::vector<JunctionSpec> junctions;
  // Declared sink roads; validated against the topology when non-empty.
  std::vector<int> sinks;
};

class Network {
public:
  const std::vector<Road>& roads() const noexcept { return roads_; }
  const std::vector<Junction>& junctions() const noexcept { return junctions_; }
  const Road& road(std::size_t i) const { return roads_.at(i); }
  const Junction& junction(std::size_t i) const { return junctions_.at(i); }
  std::size_t road_count() const noexcept { return roads_.size(); }
  std::size_t junction_count() const noexcept { return junctions_.size(); }

  // Roads without an upstream / downstream junction.
  const std::vector<std::size_t>& sources() const noexcept { return sources_; }
  const std::vector<std::size_t>& sinks() const noexcept { return sinks_; }

  // All upstream paths of road i (see UpstreamEntry).
  const std::vector<UpstreamEntry>& upstream(std::size_t i) const { return upstream_.at(i); }

  double dx() const noexcept { return dx_; }
  std::size_t total_cells() const noexcept {
    std::size_t n = 0;
    for (const auto& r : roads_) n += r.cells;
    return n;
  }
  double total_length() const noexcept {
    double l = 0.0;
    for (const auto& r : roads_) l += r.length();
    return l;
  }

  // c_road evaluated at every cell center.
  const std::vector<std::vector<double>>& road_capacity_cells() const noexcept { return cell_capacity_; }

  std::size_t road_index(int id) const {
    const auto it = road_lookup_.find(id);
    if (it == road_lookup_.end()) throw ConfigError("unknown road id " + std::to_string(id));
    return it->second;
  }
  std::size_t junction_index(const std::string& id) const {
    const auto it = junction_lookup_.find(id);
    if (it == junction_lookup_.end()) throw ConfigError("unknown junction id '" + id + "'");
    return it->second;
  }

  friend Network build_network(const NetworkDescription& desc, double dx, double default_gamma_v);

private:
  std::vector<Road> roads_;
  std::vector<Junction> junctions_;
  std::vector<std::size_t> sources_;
  std::vector<std::size_t> sinks_;
  std::vector<std::vector<UpstreamEntry>> upstream_;
  std::vector<std::vector<double>> cell_capacity_;
  std::map<int, std::size_t> road_lookup_;
  std::map<std::string, std::size_t> junction_lookup_;
  double dx_ = 0.0;
};

namespace detail {

inline void collect_upstream(const std::vector<Road>& roads, const std::vector<Junction>& junctions,
                             std::size_t road, double gap, double branching,
                             std::vector<UpstreamEntry>& out) {
  const auto& j = roads[road].upstream_junction;
  if (!j) return;
  const auto& in = junctions[*j].in_roads;
  const double share = branching / static_cast<double>(in.size());
  for (std::size_t r : in) {
    out.push_back({r, gap, share});
    collect_upstream(roads, junctions, r, gap + roads[r].length(), share, out);
  }
}

}  // namespace detail

// Validates the description and builds the network for the global cell
// width dx. `default_gamma_v` is used for junctions that do not set their own
// accident-risk scale.
inline Network build_network(const NetworkDescription& desc, double dx, double default_gamma_v = 0.0) {
  if (!(dx > 0.0)) throw ConfigError("dx must be positive");
  if (desc.roads.empty()) throw ConfigError("network has no roads");
  Network net;
  net.dx_ = dx;

  for (const auto& spec : desc.roads) {
    if (!(spec.b > spec.a)) throw ConfigError("road " + std::to_string(spec.id) + ": empty interval");
    if (net.road_lookup_.count(spec.id)) throw ConfigError("duplicate road id " + std::to_string(spec.id));
    spec.capacity.validate(spec.a, spec.b);
    if (spec.initial_density < 0.0 || spec.initial_density > 1.0)
      throw ConfigError("road " + std::to_string(spec.id) + ": initial density outside [0,1]");
    const double ratio = (spec.b - spec.a) / dx;
    const auto derived = static_cast<std::size_t>(std::llround(ratio));
    if (derived == 0 || std::abs(ratio - static_cast<double>(derived)) > 1e-6 * ratio)
      throw ConfigError("road " + std::to_string(spec.id) + ": length is not a multiple of dx");
    if (spec.cells && *spec.cells != derived)
      throw ConfigError("road " + std::to_string(spec.id) + ": cell count does not match length/dx");
    Road r;
    r.id = spec.id;
    r.a = spec.a;
    r.b = spec.b;
    r.capacity = spec.capacity;
    r.cells = derived;
    r.initial_density = spec.initial_density;
    net.road_lookup_[spec.id] = net.roads_.size();
    net.roads_.push_back(std::move(r));
  }

  for (const auto& spec : desc.junctions) {
    if (net.junction_lookup_.count(spec.id)) throw ConfigError("duplicate junction id '" + spec.id + "'");
    const std::size_t n = spec.in.size(), m = spec.out.size();
    if (n == 0 || m == 0 || n * m > 2)
      throw ConfigError("junction '" + spec.id + "': only 1-1, 1-2 and 2-1 junctions are supported");
    Junction j;
    j.id = spec.id;
    const std::size_t index = net.junctions_.size();
    for (int id : spec.in) {
      const std::size_t r = net.road_index(id);
      if (net.roads_[r].downstream_junction)
        throw ConfigError("road " + std::to_string(id) + " ends in more than one junction");
      net.roads_[r].downstream_junction = index;
      j.in_roads.push_back(r);
    }
    for (int id : spec.out) {
      const std::size_t r = net.road_index(id);
      if (net.roads_[r].upstream_junction)
        throw ConfigError("road " + std::to_string(id) + " starts in more than one junction");
      net.roads_[r].upstream_junction = index;
      j.out_roads.push_back(r);
    }
    if (m == 2) {
      if (spec.distribution.size() != 2) throw ConfigError("junction '" + spec.id + "': distribution needs two entries");
      if (spec.distribution[0] < 0.0 || spec.distribution[1] < 0.0 ||
          std::abs(spec.distribution[0] + spec.distribution[1] - 1.0) > 1e-12)
        throw ConfigError("junction '" + spec.id + "': distribution row is not stochastic");
      j.distribution = spec.distribution;
    } else if (!spec.distribution.empty() && !(spec.distribution.size() == 1 && spec.distribution[0] == 1.0)) {
      throw ConfigError("junction '" + spec.id + "': distribution only applies to 1-2 junctions");
    }
    if (spec.rightway < 0.0 || spec.rightway > 1.0)
      throw ConfigError("junction '" + spec.id + "': rightway outside [0,1]");
    j.rightway = spec.rightway;
    j.gamma_v = spec.gamma_v.value_or(default_gamma_v);
    if (j.gamma_v < 0.0) throw ConfigError("junction '" + spec.id + "': gamma_v must be nonnegative");
    net.junction_lookup_[spec.id] = index;
    net.junctions_.push_back(std::move(j));
  }

  // Kahn's algorithm over roads; an edge r -> s exists when r ends in the
  // junction where s starts.
  const std::size_t nr = net.roads_.size();
  std::vector<std::size_t> indegree(nr, 0);
  for (std::size_t s = 0; s < nr; ++s)
    if (const auto& j = net.roads_[s].upstream_junction) indegree[s] = net.junctions_[*j].in_roads.size();
  std::vector<std::size_t> ready;
  for (std::size_t s = 0; s < nr; ++s)
    if (indegree[s] == 0) ready.push_back(s);
  std::size_t visited = 0;
  while (!ready.empty()) {
    const std::size_t r = ready.back();
    ready.pop_back();
    ++visited;
    if (const auto& j = net.roads_[r].downstream_junction)
      for (std::size_t s : net.junctions_[*j].out_roads)
        if (--indegree[s] == 0) ready.push_back(s);
  }
  if (visited != nr) throw ConfigError("network contains a cycle");

  for (std::size_t r = 0; r < nr; ++r) {
    if (!net.roads_[r].upstream_junction) net.sources_.push_back(r);
    if (!net.roads_[r].downstream_junction) net.sinks_.push_back(r);
  }
  for (int id : desc.sinks) {
    const std::size_t r = net.road_index(id);
    if (net.roads_[r].downstream_junction)
      throw ConfigError("road " + std::to_string(id) + " is declared a sink but ends in a junction");
  }

  net.upstream_.resize(nr);
  for (std::size_t r = 0; r < nr; ++r) detail::collect_upstream(net.roads_, net.junctions_, r, 0.0, 1.0, net.upstream_[r]);

  net.cell_capacity_.resize(nr);
  for (std::size_t r = 0; r < nr; ++r) {
    const auto& road = net.roads_[r];
    auto& caps = net.cell_capacity_[r];
    caps.resize(road.cells);
    for (std::size_t k = 0; k < road.cells; ++k) caps[k] = road.capacity.at(road.cell_center(k));
  }
  return net;
}

}  // namespace trafficrisk
