#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "trafficrisk/accident_sampler.hpp"
#include "trafficrisk/capacity.hpp"
#include "trafficrisk/errors.hpp"
#include "trafficrisk/godunov.hpp"
#include "trafficrisk/hawkes.hpp"
#include "trafficrisk/inflow.hpp"
#include "trafficrisk/network.hpp"
#include "trafficrisk/risk.hpp"
#include "trafficrisk/rng.hpp"

namespace trafficrisk {

// Everything one run needs.
struct Model {
  Network net;
  SolverConfig solver;
  InflowProfile inflow;
  JunctionControls controls;  // initial splits and rightways
  bool accidents = true;
  AccidentRiskConfig risk;
  ExcitationKernel kernel{0.1, 2.0};
  std::optional<ReroutePolicy> policy;
  std::vector<double> snapshot_times;
  std::size_t cm_stride = 0;  // record congestion measures every n steps; 0 = off

  void validate() const {
    if (!(solver.dt > 0.0) || !(solver.horizon > 0.0)) throw ConfigError("dt and horizon must be positive");
    if (std::abs(solver.dx - net.dx()) > 1e-15) throw ConfigError("solver dx differs from the network dx");
    risk.validate();
    if (policy) {
      policy->validate();
      if (policy->junction >= net.junction_count() ||
          net.junction(policy->junction).kind() != JunctionKind::one_to_two)
        throw ConfigError("policy junction must be a 1-2 junction");
    }
  }
};

struct Snapshot {
  double t = 0.0;
  CellField density;
};

struct RunResult {
  RiskReport report;
  std::vector<Accident> accidents;
  std::vector<Snapshot> snapshots;
  std::size_t steps = 0;
};

namespace detail {

// Past accidents older than this many kernel decay times carry less than
// exp(-34.5) ~ 1e-15 of their initial excitation and are dropped from the
// location measures.
inline constexpr double kFootprintHorizon = 34.5;

inline CellField capacities(const Network& net, std::span<const Accident> active) {
  return cell_capacities(net, effective_capacity(net, active));
}

}  // namespace detail

// One run. Hawkes uniforms come from substream 2 i, accident marks from
// substream 2 i + 1 of `seed`, so scenarios that share (seed, i) share their
// jump uniforms.
inline RunResult simulate(const Model& model, std::uint64_t seed, std::uint64_t run_index = 0) {
  model.validate();
  const Network& net = model.net;
  const double dt = model.solver.dt;
  const std::size_t steps = model.solver.steps();
  RandomStream jump_rng(seed, 2 * run_index);
  RandomStream mark_rng(seed, 2 * run_index + 1);

  const double gamma = model.accidents ? model.risk.gamma : 0.0;
  const ExcitationKernel kernel = model.accidents ? model.kernel : ExcitationKernel(0.0, model.kernel.beta());
  HawkesState hawkes(kernel, 0.0);
  std::vector<ExcitationFootprint> footprints;
  std::size_t live = 0;  // first footprint still inside the horizon

  RunResult result;
  result.steps = steps;
  std::vector<Accident> active;
  TrafficState state = TrafficState::initial(net), next;
  CellField caps = detail::capacities(net, active);
  check_cfl(net, caps, dt);
  JunctionControls controls = model.controls;
  if (model.policy) controls.split[model.policy->junction] = model.policy->base_split;

  TravelTimeAccumulator ttt;
  EmptySystemTracker toes(model.inflow.cutoff());
  std::vector<std::size_t> snapshot_steps;
  for (double ts : model.snapshot_times) {
    if (ts < 0.0 || ts > model.solver.horizon + 0.5 * dt) throw ConfigError("snapshot time outside the horizon");
    snapshot_steps.push_back(static_cast<std::size_t>(std::llround(ts / dt)));
  }
  auto record = [&](std::size_t l) {
    for (std::size_t s : snapshot_steps)
      if (s == l) result.snapshots.push_back({static_cast<double>(l) * dt, state.density});
  };
  if (model.cm_stride) {
    result.report.cm_traces.assign(net.road_count(), {});
    result.report.cm_stride = model.cm_stride;
  }
  std::vector<double> cm(net.road_count(), 0.0);
  std::vector<double> arriving(net.sources().size(), 0.0);
  const bool no_junction_risk = std::all_of(net.junctions().begin(), net.junctions().end(),
                                            [](const Junction& j) { return j.gamma_v == 0.0; });
  const bool risk_free = !model.accidents || (gamma == 0.0 && no_junction_risk && kernel.alpha() == 0.0);

  for (std::size_t l = 0; l < steps; ++l) {
    const double t = static_cast<double>(l) * dt;
    state.t = t;
    const double mass = state.network_mass(net);
    const double queued = state.queued();
    toes.observe(t, mass + queued);
    record(l);

    // (1) fluxes, background risk and policy inputs on the current state
    auto fluxes = junction_fluxes(net, state.density, caps, controls);
    const bool need_cm = model.policy || (model.cm_stride && l % model.cm_stride == 0);
    if (need_cm)
      for (std::size_t r = 0; r < net.road_count(); ++r)
        cm[r] = congestion_measure(state.density[r], caps[r], net.road(r).dx(),
                                   model.policy ? model.policy->v_ref : 0.5);
    if (model.cm_stride && l % model.cm_stride == 0)
      for (std::size_t r = 0; r < net.road_count(); ++r) result.report.cm_traces[r].push_back(cm[r]);
    std::optional<double> split;
    if (model.policy) split = apply_reroute(*model.policy, cm, active);

    bool field_changed = false;
    if (!risk_free) {
      const BackgroundRisk bg = background_rate(net, state.density, caps, fluxes, model.accidents ? gamma : 0.0);
      // (2) one Bernoulli trial of the global Hawkes process
      const double intensity = hawkes.conditional_intensity(bg.total);
      const bool jump = hawkes.step_sample(intensity, dt, jump_rng.uniform());
      hawkes.advance(dt);

      // (3) accident birth
      if (jump) {
        while (live < footprints.size() && kernel.beta() * (t - footprints[live].start()) > detail::kFootprintHorizon)
          ++live;
        const std::span<const ExcitationFootprint> past(footprints.data() + live, footprints.size() - live);
        const SiteMeasure sites = road_index_measure(net, bg, past, kernel, t);
        Accident acc;
        acc.start = t;
        const std::size_t site =
            sites.total > 0.0 ? sample_discrete(sites.weight, sites.total, mark_rng.uniform())
                              : static_cast<std::size_t>(mark_rng.uniform() * static_cast<double>(net.road_count()));
        if (site < net.road_count()) {
          const PositionDraw draw =
              position_on_road(net, site, state.density[site], caps[site], gamma, past, kernel, t, mark_rng);
          acc.site = site;
          acc.origin = draw.origin;
          const Road& road = net.road(site);
          acc.position = std::clamp(draw.position, road.a, road.b);
          if (draw.primary) acc.primary = *draw.primary + live;
        } else {
          acc.origin = AccidentOrigin::junction;
          acc.site = site - net.road_count();
          acc.position = net.road(net.junction(acc.site).out_roads.front()).a;
        }
        acc.size = sample_size(mark_rng, model.risk.size_rate);
        acc.reduction = sample_severity(mark_rng, model.risk.severity_a, model.risk.severity_b);
        acc.duration = sample_duration(mark_rng, model.risk.base_duration, model.risk.duration_rate);
        footprints.emplace_back(net, acc, model.risk.beta_tilde, model.risk.nu);
        result.accidents.push_back(acc);
        active.push_back(acc);
        field_changed = true;
      }
    }
    // accident death
    const auto expired = std::remove_if(active.begin(), active.end(), [&](const Accident& a) { return !a.active_at(t); });
    if (expired != active.end()) {
      active.erase(expired, active.end());
      field_changed = true;
    }
    // (4) capacity field
    if (field_changed) {
      caps = detail::capacities(net, active);
      check_cfl(net, caps, dt);
    }
    // (5) routing policy
    bool controls_changed = false;
    if (split && controls.split[model.policy->junction] != *split) {
      controls.split[model.policy->junction] = *split;
      controls_changed = true;
    }
    if (field_changed || controls_changed) fluxes = junction_fluxes(net, state.density, caps, controls);

    // (6) PDE and queues
    for (std::size_t i = 0; i < arriving.size(); ++i) arriving[i] = model.inflow(t);
    ttt.add(mass, queued, dt);
    step_into(state, next, net, caps, fluxes, arriving, dt, true);
    std::swap(state, next);
  }
  state.t = static_cast<double>(steps) * dt;
  toes.observe(state.t, state.network_mass(net) + state.queued());
  record(steps);

  result.report.ttt = ttt.value();
  result.report.toes = toes.value();
  result.report.accidents = count_accidents(result.accidents, net.road_count(), net.junction_count());
  return result;
}

// ---------------------------------------------------------------------------
// Monte Carlo

struct Estimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

inline Estimate estimate(std::span<const double> x) {
  Estimate e;
  if (x.empty()) return e;
  double s = 0.0;
  for (double v : x) s += v;
  e.mean = s / static_cast<double>(x.size());
  if (x.size() > 1) {
    double ss = 0.0;
    for (double v : x) ss += (v - e.mean) * (v - e.mean);
    e.stderr_ = std::sqrt(ss / static_cast<double>(x.size() - 1) / static_cast<double>(x.size()));
  }
  return e;
}

struct Aggregate {
  std::size_t runs = 0;
  Estimate ttt;
  Estimate accidents;
  std::vector<Estimate> per_road;
  std::vector<Estimate> per_junction;
  double toes_defined = 0.0;                // fraction of runs that emptied
  std::vector<std::pair<double, double>> toes_cdf;  // (t, P(ToES <= t))
};

inline Aggregate aggregate(std::span<const RiskReport> reports, std::span<const double> toes_times) {
  if (reports.empty()) throw ConfigError("runs must be at least 1");
  Aggregate a;
  a.runs = reports.size();
  std::vector<double> buf(reports.size());
  auto fill = [&](auto&& f) {
    for (std::size_t i = 0; i < reports.size(); ++i) buf[i] = f(reports[i]);
    return estimate(buf);
  };
  a.ttt = fill([](const RiskReport& r) { return r.ttt; });
  a.accidents = fill([](const RiskReport& r) { return static_cast<double>(r.accidents.total); });
  for (std::size_t k = 0; k < reports.front().accidents.per_road.size(); ++k)
    a.per_road.push_back(fill([k](const RiskReport& r) { return static_cast<double>(r.accidents.per_road[k]); }));
  for (std::size_t k = 0; k < reports.front().accidents.per_junction.size(); ++k)
    a.per_junction.push_back(
        fill([k](const RiskReport& r) { return static_cast<double>(r.accidents.per_junction[k]); }));
  a.toes_defined = fill([](const RiskReport& r) { return r.toes ? 1.0 : 0.0; }).mean;
  for (double t : toes_times)
    a.toes_cdf.emplace_back(t, fill([t](const RiskReport& r) { return r.toes && *r.toes <= t ? 1.0 : 0.0; }).mean);
  return a;
}

struct MonteCarloResult {
  std::vector<RiskReport> reports;  // in run-index order
  Aggregate summary;
};

// Runs 0..runs-1 on up to `threads` workers; reduction is in run order.
inline MonteCarloResult run_monte_carlo(const Model& model, std::uint64_t seed, std::size_t runs,
                                        std::span<const double> toes_times = {}, std::size_t threads = 1) {
  if (runs == 0) throw ConfigError("runs must be at least 1");
  model.validate();
  MonteCarloResult mc;
  mc.reports.resize(runs);
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(runs);
  auto worker = [&] {
    for (std::size_t i = next++; i < runs; i = next++) {
      try {
        mc.reports[i] = simulate(model, seed, i).report;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  threads = std::clamp<std::size_t>(threads, 1, runs);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  mc.summary = aggregate(mc.reports, toes_times);
  return mc;
}

struct SweepAxis {
  std::size_t junction = 0;
  std::vector<double> values;
};

struct SweepCell {
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  Aggregate summary;
};

// Sets the split of a 1-2 junction (also the policy base when it controls
// the same junction).
inline void set_split(Model& model, std::size_t junction, double value) {
  if (value < 0.0 || value > 1.0) throw ConfigError("distribution parameters must lie in [0,1]");
  if (model.net.junction(junction).kind() != JunctionKind::one_to_two)
    throw ConfigError("sweep junction must be a 1-2 junction");
  model.controls.split[junction] = value;
  if (model.policy && model.policy->junction == junction) model.policy->base_split = value;
}

inline std::vector<SweepCell> sweep(const Model& model, const SweepAxis& a1, const SweepAxis& a2, std::uint64_t seed,
                                    std::size_t runs, std::span<const double> toes_times = {},
                                    std::size_t threads = 1) {
  if (a1.values.empty() || a2.values.empty()) throw ConfigError("sweep grids must be nonempty");
  std::vector<SweepCell> cells;
  for (double v1 : a1.values)
    for (double v2 : a2.values) {
      Model m = model;
      set_split(m, a1.junction, v1);
      set_split(m, a2.junction, v2);
      cells.push_back({v1, v2, run_monte_carlo(m, seed, runs, toes_times, threads).summary});
    }
  return cells;
}

// ---------------------------------------------------------------------------
// Output. Numbers are printed with 17 significant digits so reruns compare
// byte for byte.

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_run_header(std::ostream& os, const Network& net) {
  os << "run,ttt,toes,accidents";
  for (const auto& r : net.roads()) os << ",road_" << r.id;
  for (const auto& j : net.junctions()) os << ",junction_" << j.id;
  os << '\n';
}

inline void write_run_row(std::ostream& os, std::size_t run, const RiskReport& r) {
  os << run << ',' << fmt(r.ttt) << ',' << (r.toes ? fmt(*r.toes) : std::string{}) << ',' << r.accidents.total;
  for (auto c : r.accidents.per_road) os << ',' << c;
  for (auto c : r.accidents.per_junction) os << ',' << c;
  os << '\n';
}

inline void write_accident_log(std::ostream& os, const Network& net, std::span<const Accident> log) {
  os << "index,origin,site,position,size,reduction,start,duration,primary\n";
  for (std::size_t i = 0; i < log.size(); ++i) {
    const Accident& a = log[i];
    const std::string site = a.at_junction() ? "junction_" + net.junction(a.site).id
                                             : "road_" + std::to_string(net.road(a.site).id);
    os << i << ',' << to_string(a.origin) << ',' << site << ',' << fmt(a.position) << ',' << fmt(a.size) << ','
       << fmt(a.reduction) << ',' << fmt(a.start) << ',' << fmt(a.duration) << ','
       << (a.primary ? std::to_string(*a.primary) : std::string{}) << '\n';
  }
}

inline void write_snapshots(std::ostream& os, const Network& net, std::span<const Snapshot> snaps) {
  os << "t,road,cell_center,density\n";
  for (const auto& s : snaps)
    for (std::size_t r = 0; r < net.road_count(); ++r)
      for (std::size_t k = 0; k < s.density[r].size(); ++k)
        os << fmt(s.t) << ',' << net.road(r).id << ',' << fmt(net.road(r).cell_center(k)) << ','
           << fmt(s.density[r][k]) << '\n';
}

inline void write_cm_traces(std::ostream& os, const Network& net, const RiskReport& r, double dt) {
  os << "t";
  for (const auto& road : net.roads()) os << ",cm_" << road.id;
  os << '\n';
  if (r.cm_traces.empty()) return;
  for (std::size_t i = 0; i < r.cm_traces.front().size(); ++i) {
    os << fmt(static_cast<double>(i * r.cm_stride) * dt);
    for (const auto& trace : r.cm_traces) os << ',' << fmt(trace[i]);
    os << '\n';
  }
}

inline void write_sweep(std::ostream& os, std::span<const SweepCell> cells) {
  os << "alpha1,alpha2,runs,ttt_mean,ttt_stderr,accidents_mean,accidents_stderr,toes_defined";
  if (!cells.empty())
    for (const auto& [t, p] : cells.front().summary.toes_cdf) os << ",p_toes_" << fmt(t);
  os << '\n';
  for (const auto& c : cells) {
    const Aggregate& a = c.summary;
    os << fmt(c.alpha1) << ',' << fmt(c.alpha2) << ',' << a.runs << ',' << fmt(a.ttt.mean) << ','
       << fmt(a.ttt.stderr_) << ',' << fmt(a.accidents.mean) << ',' << fmt(a.accidents.stderr_) << ','
       << fmt(a.toes_defined);
    for (const auto& [t, p] : a.toes_cdf) os << ',' << fmt(p);
    os << '\n';
  }
}

}  // namespace trafficrisk
