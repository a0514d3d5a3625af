#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "trafficrisk/capacity.hpp"
#include "trafficrisk/errors.hpp"
#include "trafficrisk/godunov.hpp"
#include "trafficrisk/network.hpp"

namespace trafficrisk {

// Vehicle count below which the network plus queues counts as empty.
inline constexpr double kEmptyThreshold = 1e-6;

// Rectangle-rule total travel time: dt * sum over steps of (dx * sum rho +
// queue). `densities[l]` and `queues[l]` are the state at step l.
inline double total_travel_time(std::span<const CellField> densities, std::span<const double> queues, double dt,
                                double dx) {
  if (densities.size() != queues.size())
    throw DataError("density and queue histories have different lengths");
  double ttt = 0.0;
  for (std::size_t l = 0; l < densities.size(); ++l) {
    double mass = 0.0;
    for (const auto& row : densities[l])
      for (double rho : row) mass += rho;
    ttt += dt * (dx * mass + queues[l]);
  }
  return ttt;
}

// Streaming form used by the simulation loop.
class TravelTimeAccumulator {
public:
  void add(double network_mass, double queued, double dt) noexcept { ttt_ += dt * (network_mass + queued); }
  double value() const noexcept { return ttt_; }

private:
  double ttt_ = 0.0;
};

// max{ int (rho - F(x, rho) / v_ref) dx, 0 } with F = cap * rho (1 - rho).
inline double congestion_measure(std::span<const double> density, std::span<const double> caps, double dx,
                                 double v_ref = 0.5) {
  double s = 0.0;
  for (std::size_t k = 0; k < density.size(); ++k) s += density[k] - caps[k] * flux(density[k]) / v_ref;
  return std::max(s * dx, 0.0);
}

// First time at or after the inflow cutoff at which the network and queue
// hold fewer than kEmptyThreshold vehicles.
class EmptySystemTracker {
public:
  explicit EmptySystemTracker(double cutoff, double threshold = kEmptyThreshold)
      : cutoff_(cutoff), threshold_(threshold) {}

  void observe(double t, double vehicles) noexcept {
    if (!toes_ && t >= cutoff_ && vehicles < threshold_) toes_ = t;
  }
  std::optional<double> value() const noexcept { return toes_; }

private:
  double cutoff_;
  double threshold_;
  std::optional<double> toes_;
};

struct TrajectoryPoint {
  double t;
  double vehicles;  // network mass plus queue
};

inline std::optional<double> time_of_empty_system(std::span<const TrajectoryPoint> trajectory, double cutoff = 0.0,
                                                  double threshold = kEmptyThreshold) {
  EmptySystemTracker tracker(cutoff, threshold);
  for (const auto& p : trajectory) tracker.observe(p.t, p.vehicles);
  return tracker.value();
}

// Detour recommendation at one 1-2 junction: switch the split from
// base_split to flex_split while the watched road is congested or carries a
// serious accident and the alternative roads are clear.
struct ReroutePolicy {
  std::size_t junction = 0;
  std::size_t watched_road = 0;
  std::vector<std::size_t> alt_roads;
  double base_split = 0.3;
  double flex_split = 0.7;
  double cm_threshold = 0.25;
  double serious_threshold = 0.8;
  double v_ref = 0.5;

  void validate() const {
    if (!(cm_threshold > 0.0 && cm_threshold < 1.0)) throw ConfigError("policy cm_threshold must lie in (0,1)");
    if (!(serious_threshold > 0.0 && serious_threshold < 1.0))
      throw ConfigError("policy serious_threshold must lie in (0,1)");
    if (base_split < 0.0 || base_split > 1.0 || flex_split < 0.0 || flex_split > 1.0)
      throw ConfigError("policy splits must lie in [0,1]");
  }
};

inline bool has_serious_accident(std::span<const Accident> active, std::size_t road, double threshold) {
  return std::any_of(active.begin(), active.end(), [&](const Accident& a) {
    return !a.at_junction() && a.site == road && a.reduction > threshold;
  });
}

// `cm` holds the congestion measure of every road.
inline double apply_reroute(const ReroutePolicy& policy, std::span<const double> cm, std::span<const Accident> active) {
  const bool trigger = cm[policy.watched_road] > policy.cm_threshold ||
                       has_serious_accident(active, policy.watched_road, policy.serious_threshold);
  if (!trigger) return policy.base_split;
  for (std::size_t r : policy.alt_roads)
    if (cm[r] > policy.cm_threshold || has_serious_accident(active, r, policy.serious_threshold))
      return policy.base_split;
  return policy.flex_split;
}

struct AccidentCounts {
  std::vector<std::size_t> per_road;
  std::vector<std::size_t> per_junction;
  std::size_t total = 0;
};

inline AccidentCounts count_accidents(std::span<const Accident> log, std::size_t roads, std::size_t junctions) {
  AccidentCounts c;
  c.per_road.assign(roads, 0);
  c.per_junction.assign(junctions, 0);
  for (const auto& a : log) {
    if (a.at_junction())
      ++c.per_junction.at(a.site);
    else
      ++c.per_road.at(a.site);
    ++c.total;
  }
  return c;
}

// Outcome of one simulated run.
struct RiskReport {
  double ttt = 0.0;
  AccidentCounts accidents;
  std::optional<double> toes;
  // Congestion measure per road, sampled every `cm_stride` steps when recorded.
  std::vector<std::vector<double>> cm_traces;
  std::size_t cm_stride = 0;
};

}  // namespace trafficrisk
