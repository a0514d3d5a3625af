#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "trafficrisk/network.hpp"

namespace trafficrisk {

enum class AccidentOrigin { background, self_excitation, junction };

inline std::string_view to_string(AccidentOrigin o) noexcept {
  switch (o) {
    case AccidentOrigin::background: return "background";
    case AccidentOrigin::self_excitation: return "self_excitation";
    case AccidentOrigin::junction: return "junction";
  }
  return "unknown";
}

// Accident quintuple (position, size, reduction, start, duration) plus its
// location and origin. Junction accidents have no on-road position.
struct Accident {
  AccidentOrigin origin = AccidentOrigin::background;
  std::size_t site = 0;  // road index, or junction index when at_junction()
  double position = 0.0;
  double size = 0.0;
  double reduction = 0.0;
  double start = 0.0;
  double duration = 0.0;
  // Log index of the accident that triggered a self-excitation accident.
  std::optional<std::size_t> primary;

  bool at_junction() const noexcept { return origin == AccidentOrigin::junction; }
  double end() const noexcept { return start + duration; }
  bool active_at(double t) const noexcept { return start <= t && t < end(); }
};

// Per-road, per-cell accident multipliers c_a in (0, 1].
struct CapacityField {
  std::vector<std::vector<double>> multipliers;

  static CapacityField ones(const Network& net) {
    CapacityField f;
    f.multipliers.reserve(net.road_count());
    for (const auto& r : net.roads()) f.multipliers.emplace_back(r.cells, 1.0);
    return f;
  }
};

// Contiguous run of covered cells [first, last] on one road.
struct CellSpan {
  std::size_t road;
  std::size_t first;
  std::size_t last;
};

namespace detail {

struct Interval {
  std::size_t road;
  double lo;
  double hi;
};

inline void spill_upstream(const Network& net, std::size_t road, double length, std::vector<Interval>& out) {
  const Road& r = net.road(road);
  out.push_back({road, std::max(r.a, r.b - length), r.b});
  const double rest = length - r.length();
  if (rest > 0.0 && r.upstream_junction)
    for (std::size_t in : net.junction(*r.upstream_junction).in_roads) spill_upstream(net, in, rest, out);
}

inline void spill_downstream(const Network& net, std::size_t road, double length, std::vector<Interval>& out) {
  const Road& r = net.road(road);
  out.push_back({road, r.a, std::min(r.b, r.a + length)});
  const double rest = length - r.length();
  if (rest > 0.0 && r.downstream_junction)
    for (std::size_t o : net.junction(*r.downstream_junction).out_roads) spill_downstream(net, o, rest, out);
}

}  // namespace detail

// Cells covered by one accident. A road accident covers [p - s/2, p + s/2]
// clipped to its road; any excess continues onto every ingoing (outgoing)
// road and further across junctions until the size is used up. A junction
// accident covers the last s/2 of every ingoing road and the first s/2 of
// every outgoing road. Interior cells are covered when their center lies in
// the interval; a cell adjacent to a junction is covered as soon as the
// interval overlaps it, so capacity jumps never fall inside such a cell.
inline std::vector<CellSpan> accident_coverage(const Network& net, const Accident& acc) {
  std::vector<detail::Interval> pieces;
  const double half = 0.5 * acc.size;
  if (acc.at_junction()) {
    const Junction& j = net.junction(acc.site);
    for (std::size_t in : j.in_roads) detail::spill_upstream(net, in, half, pieces);
    for (std::size_t o : j.out_roads) detail::spill_downstream(net, o, half, pieces);
  } else {
    const Road& r = net.road(acc.site);
    pieces.push_back({acc.site, std::max(r.a, acc.position - half), std::min(r.b, acc.position + half)});
    const double up = r.a - (acc.position - half);
    if (up > 0.0 && r.upstream_junction)
      for (std::size_t in : net.junction(*r.upstream_junction).in_roads) detail::spill_upstream(net, in, up, pieces);
    const double down = acc.position + half - r.b;
    if (down > 0.0 && r.downstream_junction)
      for (std::size_t o : net.junction(*r.downstream_junction).out_roads) detail::spill_downstream(net, o, down, pieces);
  }

  constexpr double overlap_tol = 1e-12;
  std::vector<CellSpan> spans;
  for (const auto& piece : pieces) {
    const Road& r = net.road(piece.road);
    if (!(piece.hi > piece.lo)) continue;
    std::optional<std::size_t> first, last;
    for (std::size_t k = 0; k < r.cells; ++k) {
      bool covered = false;
      const bool junction_adjacent = (k == 0 && r.upstream_junction) || (k + 1 == r.cells && r.downstream_junction);
      if (junction_adjacent) {
        covered = std::min(piece.hi, r.cell_upper(k)) - std::max(piece.lo, r.cell_lower(k)) > overlap_tol;
      } else {
        const double c = r.cell_center(k);
        covered = piece.lo <= c && c <= piece.hi;
      }
      if (covered) {
        if (!first) first = k;
        last = k;
      }
    }
    if (first) spans.push_back({piece.road, *first, *last});
  }
  return spans;
}

// Multiplicative accident capacity field for the given accidents, all of
// which the caller has already filtered to be active.
inline CapacityField effective_capacity(const Network& net, std::span<const Accident> active) {
  CapacityField field = CapacityField::ones(net);
  std::vector<std::vector<char>> mark(net.road_count());
  for (std::size_t r = 0; r < net.road_count(); ++r) mark[r].assign(net.road(r).cells, 0);
  for (const auto& acc : active) {
    const auto spans = accident_coverage(net, acc);
    // Several spill paths may reach the same cell; the accident applies once.
    for (const auto& s : spans)
      for (std::size_t k = s.first; k <= s.last; ++k) mark[s.road][k] = 1;
    const double keep = 1.0 - acc.reduction;
    for (const auto& s : spans)
      for (std::size_t k = s.first; k <= s.last; ++k)
        if (mark[s.road][k]) {
          field.multipliers[s.road][k] *= keep;
          mark[s.road][k] = 0;
        }
  }
  return field;
}

// Convenience overload: filters `accidents` to those active at time t.
inline CapacityField effective_capacity(const Network& net, std::span<const Accident> accidents, double t) {
  std::vector<Accident> active;
  for (const auto& a : accidents)
    if (a.active_at(t)) active.push_back(a);
  return effective_capacity(net, active);
}

// Effective flux capacity per cell: c_road * c_a.
inline std::vector<std::vector<double>> cell_capacities(const Network& net, const CapacityField& field) {
  auto caps = net.road_capacity_cells();
  for (std::size_t r = 0; r < caps.size(); ++r)
    for (std::size_t k = 0; k < caps[r].size(); ++k) caps[r][k] *= field.multipliers[r][k];
  return caps;
}

}  // namespace trafficrisk
