#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "oracles.hpp"
#include "trafficrisk/capacity.hpp"
#include "trafficrisk/godunov.hpp"
#include "trafficrisk/rng.hpp"

using namespace trafficrisk;

TEST(DemandSupply, Branches) {
  EXPECT_NEAR(demand(0.3, 1.0), 0.21, 1e-15);
  EXPECT_DOUBLE_EQ(demand(0.7, 1.0), 0.25);
  EXPECT_DOUBLE_EQ(supply(0.3, 1.0), 0.25);
  EXPECT_NEAR(supply(0.7, 1.0), 0.21, 1e-15);
  EXPECT_EQ(demand(0.0, 1.0), 0.0);
  EXPECT_EQ(supply(1.0, 1.0), 0.0);
}

TEST(NumericalFlux, Examples) {
  EXPECT_DOUBLE_EQ(numerical_flux(0.5, 0.5, 1.0, 1.0), 0.25);
  EXPECT_NEAR(numerical_flux(0.3, 0.3, 0.4, 1.0), 0.10, 1e-15);
  EXPECT_EQ(numerical_flux(0.7, 0.0, 1.0, 1.0), 0.0);
}

TEST(NumericalFlux, IsGodunovMinMax) {
  // Godunov flux for concave f: min over [rl, rr] if rl <= rr, max over [rr, rl] otherwise.
  RandomStream rng(31, 0);
  for (int i = 0; i < 2000; ++i) {
    const double rl = rng.uniform(), rr = rng.uniform();
    double ref;
    if (rl <= rr) {
      ref = std::min(flux(rl), flux(rr));
    } else {
      ref = (rr <= 0.5 && 0.5 <= rl) ? 0.25 : std::max(flux(rl), flux(rr));
    }
    EXPECT_NEAR(numerical_flux(rr, rl, 1.0, 1.0), ref, 1e-15);
  }
}

TEST(Tau, Mapping) {
  EXPECT_DOUBLE_EQ(tau_density(0.3), 0.7);
  EXPECT_DOUBLE_EQ(tau_density(0.5), 0.5);
  RandomStream rng(1, 1);
  for (int i = 0; i < 100; ++i) {
    const double r = rng.uniform();
    EXPECT_NEAR(flux(tau_density(r)) - flux(r), 0.0, 1e-15);
  }
}

TEST(Junction12, Examples) {
  auto r = junction_flux_12(0.25, {0.2, 0.2}, {0.5, 0.5});
  EXPECT_DOUBLE_EQ(r.inflow, 0.25);
  EXPECT_DOUBLE_EQ(r.outflow[0], 0.125);
  EXPECT_DOUBLE_EQ(r.outflow[1], 0.125);
  r = junction_flux_12(0.1, {1.0, 1.0}, {0.3, 0.7});
  EXPECT_DOUBLE_EQ(r.inflow, 0.1);
  r = junction_flux_12(0.25, {0.05, 0.2}, {0.5, 0.5});
  EXPECT_DOUBLE_EQ(r.inflow, 0.1);
  EXPECT_DOUBLE_EQ(r.outflow[0], 0.05);
  EXPECT_DOUBLE_EQ(r.outflow[1], 0.05);
}

TEST(Junction12, ZeroShareBranchUnconstrained) {
  const auto r = junction_flux_12(0.2, {0.0, 0.25}, {0.0, 1.0});
  EXPECT_DOUBLE_EQ(r.inflow, 0.2);
  EXPECT_EQ(r.outflow[0], 0.0);
  EXPECT_DOUBLE_EQ(r.outflow[1], 0.2);
}

TEST(Junction21, Examples) {
  auto r = junction_flux_21({0.2, 0.2}, 0.25, 0.5);
  EXPECT_DOUBLE_EQ(r.inflow[0], 0.125);
  EXPECT_DOUBLE_EQ(r.inflow[1], 0.125);
  r = junction_flux_21({0.2, 0.1}, 0.25, 0.5);
  EXPECT_DOUBLE_EQ(r.inflow[0], 0.15);
  EXPECT_DOUBLE_EQ(r.inflow[1], 0.1);
  r = junction_flux_21({0.1, 0.1}, 0.25, 0.5);
  EXPECT_DOUBLE_EQ(r.inflow[0], 0.1);
  EXPECT_DOUBLE_EQ(r.inflow[1], 0.1);
  EXPECT_DOUBLE_EQ(r.outflow, 0.2);
}

TEST(JunctionOracle, RandomInstances) {
  RandomStream rng(41, 0);
  for (int i = 0; i < 200; ++i) {
    const double d = 0.25 * rng.uniform();
    const std::array<double, 2> s{0.25 * rng.uniform(), 0.25 * rng.uniform()};
    const double a = rng.uniform();
    const auto got = junction_flux_12(d, s, {a, 1.0 - a});
    const auto ref = oracle::junction_12(d, s, {a, 1.0 - a});
    EXPECT_NEAR(got.inflow, ref.in, 1e-9);
    EXPECT_NEAR(got.outflow[0], ref.out[0], 1e-9);
    EXPECT_NEAR(got.outflow[1], ref.out[1], 1e-9);
    EXPECT_EQ(got.outflow[0] + got.outflow[1], got.inflow);

    const std::array<double, 2> dd{0.25 * rng.uniform(), 0.25 * rng.uniform()};
    const double sup = 0.25 * rng.uniform(), q = rng.uniform();
    const auto g2 = junction_flux_21(dd, sup, q);
    const auto r2 = oracle::junction_21(dd, sup, q);
    EXPECT_NEAR(g2.inflow[0], r2.in[0], 1e-9);
    EXPECT_NEAR(g2.inflow[1], r2.in[1], 1e-9);
    EXPECT_EQ(g2.inflow[0] + g2.inflow[1], g2.outflow);
  }
}

TEST(Queue, Examples) {
  auto r = queue_update(0.0, 0.13, 0.25, 0.01);
  EXPECT_DOUBLE_EQ(r.inflow, 0.13);
  EXPECT_DOUBLE_EQ(r.queue, 0.0);
  r = queue_update(1.0, 0.0, 0.25, 0.01);
  EXPECT_DOUBLE_EQ(r.inflow, 0.25);
  EXPECT_NEAR(r.queue, 0.9975, 1e-15);
  r = queue_update(0.0, 0.0, 0.25, 0.01);
  EXPECT_EQ(r.inflow, 0.0);
}

TEST(Queue, DrainsExactly) {
  const auto r = queue_update(0.001, 0.0, 0.25, 0.01);
  EXPECT_DOUBLE_EQ(r.inflow, 0.1);
  EXPECT_EQ(r.queue, 0.0);
}

TEST(Step, ConstantIsSteadyState) {
  const Network net = th::single_road(0.0, 1.0, 1.0, 0.01, 0.4);
  TrafficState s = TrafficState::initial(net);
  const auto caps = net.road_capacity_cells();
  const JunctionControls c = JunctionControls::from(net);
  const std::vector<double> arriving{flux(0.4)};
  for (int i = 0; i < 100; ++i) s = step(s, net, caps, c, arriving, 0.01);
  for (double r : s.density[0]) EXPECT_NEAR(r, 0.4, 1e-14);
  EXPECT_EQ(s.queues[0], 0.0);
}

TEST(Step, CflViolation) {
  const Network net = th::single_road(0.0, 1.0, 1.0, 0.01, 0.4);
  TrafficState s = TrafficState::initial(net);
  const std::vector<double> arriving{0.0};
  try {
    step(s, net, net.road_capacity_cells(), JunctionControls::from(net), arriving, 0.02);
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_EQ(e.kind(), "cfl");
  }
}

namespace {

// Single long road with a Riemann initial state (or its exact solution at
// t0 > 0); boundary inflow matches the left state so only the interior wave
// evolves.
std::vector<double> riemann_run(double rho_l, double rho_r, double length, double x0, double dx, double dt,
                                std::size_t steps, double t0 = 0.0) {
  NetworkDescription d;
  RoadSpec r;
  r.id = 1;
  r.b = length;
  d.roads.push_back(r);
  const Network net = build_network(d, dx);
  TrafficState s = TrafficState::initial(net);
  for (std::size_t k = 0; k < net.road(0).cells; ++k)
    s.density[0][k] =
        t0 > 0.0 ? th::integrate([&](double x) { return oracle::riemann(rho_l, rho_r, x0, x, t0); }, k * dx,
                                 (k + 1) * dx, 8) / dx
                 : (net.road(0).cell_center(k) < x0 ? rho_l : rho_r);
  const auto caps = net.road_capacity_cells();
  const auto c = JunctionControls::from(net);
  const std::vector<double> arriving{flux(rho_l)};
  for (std::size_t i = 0; i < steps; ++i) s = step(s, net, caps, c, arriving, dt);
  return s.density[0];
}

}  // namespace

TEST(Step, StationaryShock) {
  const double dx = 0.01, dt = 0.005;
  const auto rho = riemann_run(0.2, 0.8, 10.0, 5.0, dx, dt, 1000);
  // first crossing of 1/2, linearly interpolated
  double x = -1.0;
  for (std::size_t k = 0; k + 1 < rho.size(); ++k)
    if (rho[k] < 0.5 && rho[k + 1] >= 0.5) {
      x = (k + 0.5) * dx + dx * (0.5 - rho[k]) / (rho[k + 1] - rho[k]);
      break;
    }
  EXPECT_LT(std::abs(x - 5.0), 2.0 * dx);
}

namespace {

std::vector<double> rarefaction_errors(double t0) {
  std::vector<double> err;
  for (double dx : {1.0 / 50, 1.0 / 100, 1.0 / 200}) {
    const double t = 0.5;
    const auto steps = static_cast<std::size_t>(std::llround((t - t0) / dx));
    const auto rho = riemann_run(0.8, 0.2, 1.0, 0.5, dx, dx, steps, t0);
    double e = 0.0;
    for (std::size_t k = 0; k < rho.size(); ++k) {
      const double lo = k * dx, hi = lo + dx;
      const double avg = th::integrate([&](double x) { return oracle::riemann(0.8, 0.2, 0.5, x, t); }, lo, hi, 8) / dx;
      e += std::abs(rho[k] - avg) * dx;
    }
    err.push_back(e);
  }
  return err;
}

}  // namespace

// Fan already open at t0 = 0.1, measured at t = 0.5.
TEST(Step, RarefactionConverges) {
  const auto err = rarefaction_errors(0.1);
  EXPECT_GE(std::log2(err[0] / err[1]), 0.8);
  EXPECT_GE(std::log2(err[1] / err[2]), 0.8);
}

// Started from the jump itself the corner layers keep the observed rate near
// 0.7 at these resolutions. Frozen L1 errors from an independent numpy
// Godunov implementation.
TEST(Step, RarefactionFromJumpMatchesReference) {
  const auto err = rarefaction_errors(0.0);
  const double ref[] = {0.011131699399484545, 0.006963990466031199, 0.004223680005647822};
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(err[i], ref[i], 1e-6 * ref[i]);
}

TEST(Step, MassBalanceAndInvariantRegion) {
  const Network net = th::diamond();
  RandomStream rng(77, 0);
  TrafficState s = TrafficState::initial(net), next;
  std::vector<Accident> acc;
  for (int i = 0; i < 6; ++i) {
    Accident a;
    a.site = static_cast<std::size_t>(rng.uniform() * 7);
    a.position = rng.uniform();
    a.size = rng.exponential(10.0);
    a.reduction = 0.95 * rng.uniform();
    a.duration = 1.0;
    acc.push_back(a);
  }
  const auto caps = cell_capacities(net, effective_capacity(net, acc));
  JunctionControls c = JunctionControls::from(net);
  const double dt = 0.01;
  for (int l = 0; l < 2000; ++l) {
    c.split[0] = rng.uniform();
    c.split[1] = rng.uniform();
    const std::vector<double> arriving{0.13 + 0.052 * std::sin(l * dt)};
    const double before = s.network_mass(net) + s.queued();
    const auto flows = step_into(s, next, net, caps, junction_fluxes(net, s.density, caps, c), arriving, dt);
    const double after = next.network_mass(net) + next.queued();
    ASSERT_LT(std::abs(after - before - dt * (flows.arriving - flows.outflow)), 1e-12) << l;
    for (const auto& row : next.density)
      for (double r : row) {
        ASSERT_GE(r, 0.0);
        ASSERT_LE(r, 1.0);
      }
    std::swap(s, next);
  }
}

TEST(JunctionFluxes, ConservedOnDiamond) {
  const Network net = th::diamond();
  RandomStream rng(5, 5);
  CellField rho = TrafficState::initial(net).density;
  for (int i = 0; i < 200; ++i) {
    for (auto& row : rho)
      for (double& r : row) r = rng.uniform();
    const auto caps = net.road_capacity_cells();
    const auto jf = junction_fluxes(net, rho, caps, JunctionControls::from(net));
    for (std::size_t v = 0; v < net.junction_count(); ++v) {
      const auto& j = net.junction(v);
      double in = 0.0, out = 0.0;
      for (std::size_t k = 0; k < j.in_roads.size(); ++k) {
        in += jf[v].in[k];
        const auto r = j.in_roads[k];
        EXPECT_LE(jf[v].in[k], demand(rho[r].back(), caps[r].back()) + 1e-15);
      }
      for (std::size_t k = 0; k < j.out_roads.size(); ++k) {
        out += jf[v].out[k];
        const auto r = j.out_roads[k];
        EXPECT_LE(jf[v].out[k], supply(rho[r].front(), caps[r].front()) + 1e-15);
      }
      EXPECT_NEAR(in, out, 1e-14);
      EXPECT_NEAR(jf[v].total, in, 1e-14);
    }
  }
}
