#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "trafficrisk/capacity.hpp"
#include "trafficrisk/errors.hpp"
#include "trafficrisk/godunov.hpp"
#include "trafficrisk/hawkes.hpp"
#include "trafficrisk/network.hpp"
#include "trafficrisk/rng.hpp"

namespace trafficrisk {

struct AccidentRiskConfig {
  double gamma = 0.5;          // road background risk scale
  double beta_tilde = 24.0;    // spatial decay of self-excitation behind an accident
  double nu = 0.0;             // plateau length behind an accident
  double size_rate = 20.0;     // s ~ Exp(size_rate)
  double severity_a = 2.66;    // c ~ Beta(a, b)
  double severity_b = 3.53;
  double base_duration = 1.0;  // d = base + Exp(duration_rate)
  double duration_rate = 0.5;

  void validate() const {
    if (!(gamma >= 0.0)) throw ConfigError("gamma must be nonnegative");
    if (!(beta_tilde > 0.0)) throw ConfigError("beta_tilde must be positive");
    if (!(nu >= 0.0)) throw ConfigError("nu must be nonnegative");
    if (!(size_rate > 0.0)) throw ConfigError("size_rate must be positive");
    if (!(severity_a > 0.0) || !(severity_b > 0.0)) throw ConfigError("severity Beta shapes must be positive");
    if (!(base_duration >= 0.0)) throw ConfigError("base_duration must be nonnegative");
    if (!(duration_rate > 0.0)) throw ConfigError("duration_rate must be positive");
  }
};

inline double sample_size(RandomStream& rng, double rate) { return rng.exponential(rate); }

// Capacity reduction in (0, 1); kept strictly below one.
inline double sample_severity(RandomStream& rng, double a, double b) {
  return std::min(rng.beta(a, b), 1.0 - 1e-12);
}

inline double sample_duration(RandomStream& rng, double base, double rate) { return base + rng.exponential(rate); }

// Flux-driven accident risk split by site: gamma * int F_e dx per road and
// gamma_v * F_v per junction.
struct BackgroundRisk {
  std::vector<double> road;
  std::vector<double> junction;
  double total = 0.0;
};

inline double road_flux_integral(std::span<const double> density, std::span<const double> caps, double dx) noexcept {
  double s = 0.0;
  for (std::size_t k = 0; k < density.size(); ++k) s += caps[k] * flux(density[k]);
  return s * dx;
}

inline BackgroundRisk background_rate(const Network& net, const CellField& density, const CellField& caps,
                                      const std::vector<JunctionFlux>& junctions, double gamma) {
  BackgroundRisk risk;
  risk.road.resize(net.road_count());
  risk.junction.resize(net.junction_count());
  for (std::size_t r = 0; r < net.road_count(); ++r) {
    risk.road[r] = gamma * road_flux_integral(density[r], caps[r], net.road(r).dx());
    risk.total += risk.road[r];
  }
  for (std::size_t v = 0; v < net.junction_count(); ++v) {
    risk.junction[v] = net.junction(v).gamma_v * junctions[v].total;
    risk.total += risk.junction[v];
  }
  return risk;
}

enum class Normalization {
  raw,      // equal-split branching factors, no rescaling
  network,  // rescaled so that the whole network carries nu + 1/beta_tilde
};

// Spatial likelihood of secondary accidents behind one past accident: a
// plateau of length nu directly behind the accident, then exponential decay
// with rate beta_tilde, continued onto upstream roads across junctions
// (scaled by branching factors). Nothing is placed downstream.
class ExcitationFootprint {
public:
  struct Piece {
    std::size_t road;
    double lo;
    double hi;
    double weight;  // density at `ref` (decaying) or constant density (plateau)
    bool decays;
    double ref;
    bool upstream;  // lies on a road behind the accident's own road
  };

  ExcitationFootprint(const Network& net, const Accident& acc, double beta_tilde, double nu,
                      double truncation = 1e-12)
      : beta_tilde_(beta_tilde), nu_(nu), start_(acc.start) {
    // A junction accident sits at the start of its first outgoing road.
    const std::size_t r = acc.at_junction() ? net.junction(acc.site).out_roads.front() : acc.site;
    const Road& road = net.road(r);
    const double p = acc.at_junction() ? road.a : acc.position;
    const double m = std::max(p - nu, road.a);
    add({r, m, p, 1.0, false, 0.0, false});
    add({r, road.a, m, 1.0, true, m, false});
    const double lead = m - road.a;
    for (const auto& up : net.upstream(r)) {
      const Road& s = net.road(up.road);
      const double rest = std::max(0.0, road.a - (p - nu) - up.gap);
      const double split = std::max(s.b - rest, s.a);
      add({up.road, split, s.b, up.branching, false, 0.0, true});
      const double factor = std::exp(-beta_tilde * (lead + up.gap));
      if (factor < truncation) continue;
      add({up.road, s.a, split, up.branching * factor, true, s.b, true});
    }

    double own = 0.0, upstream = 0.0;
    for (const auto& pc : pieces_) (pc.upstream ? upstream : own) += integral(pc, pc.lo, pc.hi);
    raw_total_ = own + upstream;
    const double target = nu + 1.0 / beta_tilde;
    if (upstream > 0.0) {
      upstream_scale_ = std::max(0.0, target - own) / upstream;
    } else if (own > 0.0) {
      own_scale_ = target / own;
    }
  }

  double start() const noexcept { return start_; }
  const std::vector<Piece>& pieces() const noexcept { return pieces_; }

  // Mass of the footprint on road `road` restricted to [lo, hi].
  double weight(std::size_t road, double lo, double hi, Normalization n = Normalization::network) const {
    double w = 0.0;
    for (const auto& pc : pieces_) {
      if (pc.road != road) continue;
      const double u = std::max(lo, pc.lo), v = std::min(hi, pc.hi);
      if (v > u) w += integral(pc, u, v) * scale(pc, n);
    }
    return w;
  }

  double road_mass(std::size_t road, Normalization n = Normalization::network) const {
    double w = 0.0;
    for (const auto& pc : pieces_)
      if (pc.road == road) w += integral(pc, pc.lo, pc.hi) * scale(pc, n);
    return w;
  }

  double total(Normalization n = Normalization::network) const {
    if (n == Normalization::raw) return raw_total_;
    double w = 0.0;
    for (const auto& pc : pieces_) w += integral(pc, pc.lo, pc.hi) * scale(pc, n);
    return w;
  }

  // Draws a position inside [lo, hi] on `road` from the footprint density
  // restricted to that window (inverse transform within each piece).
  double sample_within(std::size_t road, double lo, double hi, RandomStream& rng) const {
    std::vector<std::pair<const Piece*, double>> parts;
    double mass = 0.0;
    for (const auto& pc : pieces_) {
      if (pc.road != road) continue;
      const double u = std::max(lo, pc.lo), v = std::min(hi, pc.hi);
      if (!(v > u)) continue;
      const double w = integral(pc, u, v) * scale(pc, Normalization::network);
      if (w > 0.0) {
        parts.emplace_back(&pc, w);
        mass += w;
      }
    }
    if (parts.empty()) return lo + rng.uniform() * (hi - lo);
    double pick = rng.uniform() * mass;
    const Piece* chosen = parts.back().first;
    for (const auto& [pc, w] : parts) {
      if (pick < w) {
        chosen = pc;
        break;
      }
      pick -= w;
    }
    const double u = std::max(lo, chosen->lo), v = std::min(hi, chosen->hi);
    const double x = rng.uniform();
    if (!chosen->decays) return u + x * (v - u);
    // density ~ exp(beta_tilde * y) on [u, v]
    return u + std::log1p(x * std::expm1(beta_tilde_ * (v - u))) / beta_tilde_;
  }

private:
  void add(const Piece& pc) {
    if (pc.hi > pc.lo && pc.weight > 0.0) pieces_.push_back(pc);
  }

  double integral(const Piece& pc, double u, double v) const noexcept {
    if (!pc.decays) return pc.weight * (v - u);
    return pc.weight * (std::exp(-beta_tilde_ * (pc.ref - v)) - std::exp(-beta_tilde_ * (pc.ref - u))) / beta_tilde_;
  }

  double scale(const Piece& pc, Normalization n) const noexcept {
    if (n == Normalization::raw) return 1.0;
    return pc.upstream ? upstream_scale_ : own_scale_;
  }

  double beta_tilde_;
  double nu_;
  double start_;
  std::vector<Piece> pieces_;
  double raw_total_ = 0.0;
  double own_scale_ = 1.0;
  double upstream_scale_ = 1.0;
};

// Weight of past accident `acc` on `target` over the window [lo, hi].
inline double self_excitation_weight(const Network& net, const Accident& acc, std::size_t target, double lo, double hi,
                                     double beta_tilde, double nu, Normalization n = Normalization::network) {
  return ExcitationFootprint(net, acc, beta_tilde, nu).weight(target, lo, hi, n);
}

// Unnormalized site weights: roads first (indices 0..R-1), then junctions.
// Each past accident contributes alpha exp(-beta (t - t_j)) in total, spread
// over roads in proportion to its footprint.
struct SiteMeasure {
  std::vector<double> weight;
  double total = 0.0;

  std::vector<double> probabilities() const {
    std::vector<double> p(weight.size(), 0.0);
    if (total > 0.0)
      for (std::size_t i = 0; i < p.size(); ++i) p[i] = weight[i] / total;
    return p;
  }
};

inline double excitation_level(const ExcitationKernel& kernel, double t, double start) noexcept {
  return kernel(t - start);
}

inline SiteMeasure road_index_measure(const Network& net, const BackgroundRisk& background,
                                      std::span<const ExcitationFootprint> past, const ExcitationKernel& kernel,
                                      double t) {
  SiteMeasure m;
  m.weight.assign(net.road_count() + net.junction_count(), 0.0);
  for (std::size_t r = 0; r < net.road_count(); ++r) m.weight[r] = background.road[r];
  for (std::size_t v = 0; v < net.junction_count(); ++v) m.weight[net.road_count() + v] = background.junction[v];
  for (const auto& fp : past) {
    const double level = excitation_level(kernel, t, fp.start());
    const double total = fp.total();
    if (!(level > 0.0) || !(total > 0.0)) continue;
    for (std::size_t r = 0; r < net.road_count(); ++r) m.weight[r] += level * fp.road_mass(r) / total;
  }
  for (double w : m.weight) m.total += w;
  return m;
}

// Discrete inverse transform on nonnegative weights; u in (0, 1).
inline std::size_t sample_discrete(std::span<const double> weights, double total, double u) {
  double acc = 0.0;
  const double target = u * total;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last_positive = i;
    acc += weights[i];
    if (target < acc) return i;
  }
  return last_positive;
}

// Per-cell position weights on one road: gamma * dx * cap * f(rho) from the
// background plus each past accident's footprint mass in the cell.
inline std::vector<double> position_cell_weights(const Network& net, std::size_t road, std::span<const double> density,
                                                 std::span<const double> caps, double gamma,
                                                 std::span<const ExcitationFootprint> past,
                                                 const ExcitationKernel& kernel, double t) {
  const Road& r = net.road(road);
  std::vector<double> w(r.cells);
  for (std::size_t k = 0; k < r.cells; ++k) w[k] = gamma * r.dx() * caps[k] * flux(density[k]);
  for (const auto& fp : past) {
    const double level = excitation_level(kernel, t, fp.start());
    const double total = fp.total();
    if (!(level > 0.0) || !(total > 0.0) || fp.road_mass(road) <= 0.0) continue;
    for (std::size_t k = 0; k < r.cells; ++k)
      w[k] += level * fp.weight(road, r.cell_lower(k), r.cell_upper(k)) / total;
  }
  return w;
}

// Normalized cell probabilities of the position measure; uniform when the
// road carries no mass at all.
inline std::vector<double> position_distribution(const Network& net, std::size_t road, std::span<const double> density,
                                                 std::span<const double> caps, double gamma,
                                                 std::span<const ExcitationFootprint> past,
                                                 const ExcitationKernel& kernel, double t) {
  auto w = position_cell_weights(net, road, density, caps, gamma, past, kernel, t);
  double total = 0.0;
  for (double v : w) total += v;
  if (!(total > 0.0)) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(w.size()));
    return w;
  }
  for (double& v : w) v /= total;
  return w;
}

struct PositionDraw {
  double position = 0.0;
  std::size_t cell = 0;
  AccidentOrigin origin = AccidentOrigin::background;
  std::optional<std::size_t> primary;  // index into `past`
};

// Samples an accident position on `road`: a cell by discrete inverse
// transform, then the component (background or one past accident) that
// produced it in proportion to its mass in the cell, then the position from
// that component's density within the cell.
inline PositionDraw position_on_road(const Network& net, std::size_t road, std::span<const double> density,
                                     std::span<const double> caps, double gamma,
                                     std::span<const ExcitationFootprint> past, const ExcitationKernel& kernel,
                                     double t, RandomStream& rng) {
  const Road& r = net.road(road);
  const auto w = position_cell_weights(net, road, density, caps, gamma, past, kernel, t);
  double total = 0.0;
  for (double v : w) total += v;
  PositionDraw draw;
  if (!(total > 0.0)) {
    draw.position = r.a + rng.uniform() * r.length();
    draw.cell = std::min(static_cast<std::size_t>((draw.position - r.a) / r.dx()), r.cells - 1);
    return draw;
  }
  draw.cell = sample_discrete(w, total, rng.uniform());
  const std::size_t k = draw.cell;
  const double lo = r.cell_lower(k), hi = r.cell_upper(k);

  double pick = rng.uniform() * w[k];
  const double bg = gamma * r.dx() * caps[k] * flux(density[k]);
  if (pick < bg) {
    draw.position = lo + rng.uniform() * (hi - lo);
    return draw;
  }
  pick -= bg;
  std::optional<std::size_t> chosen;
  for (std::size_t j = 0; j < past.size(); ++j) {
    const auto& fp = past[j];
    const double level = excitation_level(kernel, t, fp.start());
    const double ftotal = fp.total();
    if (!(level > 0.0) || !(ftotal > 0.0)) continue;
    const double wj = level * fp.weight(road, lo, hi) / ftotal;
    if (wj <= 0.0) continue;
    chosen = j;
    if (pick < wj) break;
    pick -= wj;
  }
  if (!chosen) {
    draw.position = lo + rng.uniform() * (hi - lo);
    return draw;
  }
  draw.origin = AccidentOrigin::self_excitation;
  draw.primary = chosen;
  draw.position = past[*chosen].sample_within(road, lo, hi, rng);
  return draw;
}

}  // namespace trafficrisk
