#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "trafficrisk/errors.hpp"
#include "trafficrisk/network.hpp"

namespace trafficrisk {

// Fundamental diagram f(rho) = rho (1 - rho), maximized at rho* = 1/2.
inline constexpr double kCriticalDensity = 0.5;

constexpr double flux(double rho) noexcept { return rho * (1.0 - rho); }

// Maximal flux a cell can send: cap * f(min(rho*, rho)).
constexpr double demand(double rho, double cap) noexcept { return cap * flux(std::min(kCriticalDensity, rho)); }

// Maximal flux a cell can receive: cap * f(max(rho*, rho)).
constexpr double supply(double rho, double cap) noexcept { return cap * flux(std::max(kCriticalDensity, rho)); }

// Godunov interface flux between a left and a right cell, each evaluated
// with its own capacity.
constexpr double numerical_flux(double rho_right, double rho_left, double cap_right, double cap_left) noexcept {
  return std::min(supply(rho_right, cap_right), demand(rho_left, cap_left));
}

// Densities below this are set to zero after each step. Draining roads
// otherwise decay into subnormal numbers, which are very slow to compute with.
inline constexpr double kDensityFloor = 1e-200;

// The other density carrying the same flux; 1 - rho for rho (1 - rho).
constexpr double tau_density(double rho) noexcept { return 1.0 - rho; }

struct Flux12 {
  double inflow;
  std::array<double, 2> outflow;
};

// 1-2 junction: largest ingoing flux compatible with the demand, the two
// supplies and the split A. A zero split leaves that branch unconstrained.
inline Flux12 junction_flux_12(double demand_in, std::array<double, 2> supplies, std::array<double, 2> split) noexcept {
  double f = demand_in;
  for (std::size_t j = 0; j < 2; ++j)
    if (split[j] > 0.0) f = std::min(f, supplies[j] / split[j]);
  f = std::max(f, 0.0);
  const double first = std::min(split[0] * f, f), second = f - first;
  // report the sum so in and out agree bit for bit
  return {first + second, {first, second}};
}

struct Flux21 {
  std::array<double, 2> inflow;
  double outflow;
};

// 2-1 junction with rightway parameter q: road 0 is granted q * S and road 1
// (1 - q) * S when both demands exceed their share; unused share passes to
// the other road.
inline Flux21 junction_flux_21(std::array<double, 2> demands, double supply_out, double q) noexcept {
  const double d1 = demands[0], d2 = demands[1], s = supply_out;
  std::array<double, 2> in{d1, d2};
  if (d1 + d2 > s) {
    const double share1 = q * s, share2 = (1.0 - q) * s;
    if (d1 > share1 && d2 > share2) {
      in = {share1, s - share1};
    } else if (d1 > share1) {
      in = {s - d2, d2};
    } else {
      in = {d1, s - d1};
    }
  }
  return {in, in[0] + in[1]};
}

struct QueueUpdate {
  double queue;
  double inflow;
};

// Source queue in front of a road: the road takes what its first cell can
// receive, up to the arriving flow plus the whole queue; the remainder waits.
inline QueueUpdate queue_update(double queue, double arriving, double first_cell_supply, double dt) noexcept {
  const double inflow = std::min(first_cell_supply, arriving + queue / dt);
  return {std::max(0.0, queue + dt * (arriving - inflow)), inflow};
}

struct SolverConfig {
  double dx = 0.01;
  double dt = 0.01;
  double horizon = 1.0;

  std::size_t steps() const noexcept { return static_cast<std::size_t>(std::llround(horizon / dt)); }
};

// Time-varying junction parameters (the distribution may be switched by a
// routing policy during a run).
struct JunctionControls {
  std::vector<double> split;     // share to out_roads[0] (1-2 junctions)
  std::vector<double> rightway;  // q (2-1 junctions)

  static JunctionControls from(const Network& net) {
    JunctionControls c;
    for (const auto& j : net.junctions()) {
      c.split.push_back(j.distribution.empty() ? 1.0 : j.distribution[0]);
      c.rightway.push_back(j.rightway);
    }
    return c;
  }
};

// Fluxes across one junction: per ingoing and outgoing road (in junction
// order) and the total throughput F_v.
struct JunctionFlux {
  std::array<double, 2> in{};
  std::array<double, 2> out{};
  double total = 0.0;
};

using CellField = std::vector<std::vector<double>>;

inline std::vector<JunctionFlux> junction_fluxes(const Network& net, const CellField& density, const CellField& caps,
                                                 const JunctionControls& controls) {
  std::vector<JunctionFlux> result(net.junction_count());
  for (std::size_t v = 0; v < net.junction_count(); ++v) {
    const Junction& j = net.junction(v);
    auto dem = [&](std::size_t road) {
      const std::size_t last = net.road(road).cells - 1;
      return demand(density[road][last], caps[road][last]);
    };
    auto sup = [&](std::size_t road) { return supply(density[road][0], caps[road][0]); };
    JunctionFlux& jf = result[v];
    switch (j.kind()) {
      case JunctionKind::one_to_one: {
        const double f = std::min(dem(j.in_roads[0]), sup(j.out_roads[0]));
        jf.in[0] = jf.out[0] = jf.total = f;
        break;
      }
      case JunctionKind::one_to_two: {
        const double a = controls.split[v];
        const auto r = junction_flux_12(dem(j.in_roads[0]), {sup(j.out_roads[0]), sup(j.out_roads[1])}, {a, 1.0 - a});
        jf.in[0] = jf.total = r.inflow;
        jf.out = r.outflow;
        break;
      }
      case JunctionKind::two_to_one: {
        const auto r = junction_flux_21({dem(j.in_roads[0]), dem(j.in_roads[1])}, sup(j.out_roads[0]), controls.rightway[v]);
        jf.in = r.inflow;
        jf.out[0] = jf.total = r.outflow;
        break;
      }
    }
  }
  return result;
}

struct TrafficState {
  CellField density;
  std::vector<double> queues;  // one per source road, in Network::sources() order
  double t = 0.0;

  static TrafficState initial(const Network& net) {
    TrafficState s;
    for (const auto& r : net.roads()) s.density.emplace_back(r.cells, r.initial_density);
    s.queues.assign(net.sources().size(), 0.0);
    return s;
  }

  double network_mass(const Network& net) const noexcept {
    double m = 0.0;
    for (std::size_t r = 0; r < density.size(); ++r) {
      double row = 0.0;
      for (double v : density[r]) row += v;
      m += row * net.road(r).dx();
    }
    return m;
  }

  double queued() const noexcept {
    double q = 0.0;
    for (double v : queues) q += v;
    return q;
  }
};

// Boundary fluxes of one step, for mass accounting.
struct StepFlows {
  double arriving = 0.0;  // profile inflow into the queues
  double accepted = 0.0;  // flow from queues into the network
  double outflow = 0.0;   // flow leaving through sinks
};

inline void check_cfl(const Network& net, const CellField& caps, double dt) {
  double cmax = 0.0;
  for (const auto& row : caps)
    for (double c : row) cmax = std::max(cmax, c);
  // sup |dF/drho| = cap * sup |f'| = cap for f = rho (1 - rho).
  if (cmax > 0.0 && dt > net.dx() / cmax * (1.0 + 1e-12))
    throw NumericalError("cfl", "CFL violated: dt = " + std::to_string(dt) + " > dx / max capacity = " +
                                    std::to_string(net.dx() / cmax));
}

// One conservative Godunov step of all roads. `junctions` must be the
// junction fluxes for (in.density, caps, controls); `arriving` holds the
// profile inflow of each source road at time in.t.
inline StepFlows step_into(const TrafficState& in, TrafficState& out, const Network& net, const CellField& caps,
                           const std::vector<JunctionFlux>& junctions, std::span<const double> arriving, double dt,
                           bool cfl_checked = false) {
  if (!cfl_checked) check_cfl(net, caps, dt);
  StepFlows flows;
  out.density.resize(in.density.size());
  out.queues.resize(in.queues.size());

  std::vector<double> left_flux(net.road_count(), 0.0), right_flux(net.road_count(), 0.0);
  for (std::size_t v = 0; v < net.junction_count(); ++v) {
    const Junction& j = net.junction(v);
    for (std::size_t i = 0; i < j.in_roads.size(); ++i) right_flux[j.in_roads[i]] = junctions[v].in[i];
    for (std::size_t i = 0; i < j.out_roads.size(); ++i) left_flux[j.out_roads[i]] = junctions[v].out[i];
  }
  for (std::size_t i = 0; i < net.sources().size(); ++i) {
    const std::size_t r = net.sources()[i];
    const auto q = queue_update(in.queues[i], arriving[i], supply(in.density[r][0], caps[r][0]), dt);
    out.queues[i] = q.queue < kDensityFloor ? 0.0 : q.queue;
    left_flux[r] = q.inflow;
    flows.arriving += arriving[i];
    flows.accepted += q.inflow;
  }
  for (std::size_t r : net.sinks()) {
    const std::size_t last = net.road(r).cells - 1;
    right_flux[r] = demand(in.density[r][last], caps[r][last]);
    flows.outflow += right_flux[r];
  }

  for (std::size_t r = 0; r < net.road_count(); ++r) {
    const auto& rho = in.density[r];
    const auto& cap = caps[r];
    auto& next = out.density[r];
    const std::size_t K = rho.size();
    next.resize(K);
    const double ratio = dt / net.road(r).dx();
    double incoming = left_flux[r];
    for (std::size_t k = 0; k < K; ++k) {
      const double outgoing = (k + 1 < K) ? numerical_flux(rho[k + 1], rho[k], cap[k + 1], cap[k]) : right_flux[r];
      const double v = rho[k] - ratio * (outgoing - incoming);
      next[k] = std::abs(v) < kDensityFloor ? 0.0 : v;
      incoming = outgoing;
    }
  }
  out.t = in.t + dt;
  return flows;
}

inline TrafficState step(const TrafficState& in, const Network& net, const CellField& caps,
                         const JunctionControls& controls, std::span<const double> arriving, double dt) {
  TrafficState out;
  step_into(in, out, net, caps, junction_fluxes(net, in.density, caps, controls), arriving, dt);
  return out;
}

}  // namespace trafficrisk
