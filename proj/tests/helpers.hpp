#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "trafficrisk/network.hpp"

namespace th {

using namespace trafficrisk;

// Diamond network capacities and densities, built in code so tests do not
// depend on the configs/ directory.
inline NetworkDescription diamond_description(double alpha1 = 0.6, double alpha2 = 0.5, double q1 = 0.5,
                                              double q2 = 0.4) {
  NetworkDescription d;
  const double cap[] = {0.7, 0.8, 0.4, 0.5, 0.3, 0.8, 1.0};
  const double rho[] = {0.4, 0.4, 0.4, 0.8, 0.4, 0.8, 0.2};
  for (int i = 0; i < 7; ++i) {
    RoadSpec r;
    r.id = i + 1;
    r.a = 0.0;
    r.b = 1.0;
    r.capacity = CapacityProfile(cap[i]);
    r.initial_density = rho[i];
    d.roads.push_back(r);
  }
  d.junctions.push_back({"B", {1}, {2, 3}, {alpha1, 1.0 - alpha1}, 0.5, std::nullopt});
  d.junctions.push_back({"C", {2}, {4, 5}, {alpha2, 1.0 - alpha2}, 0.5, std::nullopt});
  d.junctions.push_back({"D", {3, 4}, {6}, {}, q1, std::nullopt});
  d.junctions.push_back({"E", {5, 6}, {7}, {}, q2, std::nullopt});
  d.sinks = {7};
  return d;
}

inline Network diamond(double dx = 0.01, double gamma_v = 0.2) {
  return build_network(diamond_description(), dx, gamma_v);
}

inline Network single_road(double a = 0.0, double b = 1.0, double cap = 1.0, double dx = 0.01, double rho0 = 0.0) {
  NetworkDescription d;
  RoadSpec r;
  r.id = 1;
  r.a = a;
  r.b = b;
  r.capacity = CapacityProfile(cap);
  r.initial_density = rho0;
  d.roads.push_back(r);
  return build_network(d, dx);
}

// Chain of unit roads 1 -> 2 -> ... -> n joined by 1-1 junctions.
inline Network chain(int n, double dx = 0.01) {
  NetworkDescription d;
  for (int i = 1; i <= n; ++i) {
    RoadSpec r;
    r.id = i;
    d.roads.push_back(r);
    if (i > 1) d.junctions.push_back({"J" + std::to_string(i), {i - 1}, {i}, {1.0}, 0.5, std::nullopt});
  }
  return build_network(d, dx);
}

// Composite Gauss-Legendre (5 point) on [a, b] split into n panels.
inline double integrate(const std::function<double(double)>& f, double a, double b, int n = 64) {
  static const double x[] = {0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640, 0.9061798459386640};
  static const double w[] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665, 0.2369268850561891,
                             0.2369268850561891};
  if (!(b > a)) return 0.0;
  const double h = (b - a) / n;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double m = a + (i + 0.5) * h;
    for (int k = 0; k < 5; ++k) s += w[k] * f(m + 0.5 * h * x[k]) * 0.5 * h;
  }
  return s;
}

}  // namespace th
