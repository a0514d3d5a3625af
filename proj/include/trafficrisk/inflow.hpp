#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <variant>
#include <vector>

#include "trafficrisk/errors.hpp"

namespace trafficrisk {

// (base + amplitude * sin(frequency * t + phase)) on [0, cutoff], zero after.
struct SinusoidInflow {
  double base = 0.13;
  double amplitude = 0.052;
  double frequency = 1.0;
  double phase = 0.0;
  double cutoff = std::numeric_limits<double>::infinity();
};

// Piecewise-constant rates on consecutive bins of equal width, repeated
// with period bins.size() * bin_width when `repeat` is set.
struct TableInflow {
  std::vector<double> rates;
  double bin_width = 1.0;
  bool repeat = false;
};

class InflowProfile {
public:
  InflowProfile() : def_(TableInflow{}) {}
  InflowProfile(SinusoidInflow s) : def_(s) {}  // NOLINT
  InflowProfile(TableInflow t) : def_(std::move(t)) {  // NOLINT
    const auto& tb = std::get<TableInflow>(def_);
    if (!(tb.bin_width > 0.0)) throw ConfigError("inflow table bin width must be positive");
    for (double r : tb.rates)
      if (!(r >= 0.0)) throw ConfigError("inflow table rates must be nonnegative");
  }

  static InflowProfile zero() { return InflowProfile{}; }

  double operator()(double t) const {
    if (const auto* s = std::get_if<SinusoidInflow>(&def_)) {
      if (t < 0.0 || t > s->cutoff) return 0.0;
      return std::max(0.0, s->base + s->amplitude * std::sin(s->frequency * t + s->phase));
    }
    const auto& tb = std::get<TableInflow>(def_);
    if (tb.rates.empty() || t < 0.0) return 0.0;
    auto bin = static_cast<std::size_t>(std::floor(t / tb.bin_width));
    if (tb.repeat) bin %= tb.rates.size();
    return bin < tb.rates.size() ? tb.rates[bin] : 0.0;
  }

  // Time after which no more vehicles arrive (infinity if never).
  double cutoff() const {
    if (const auto* s = std::get_if<SinusoidInflow>(&def_)) return s->cutoff;
    const auto& tb = std::get<TableInflow>(def_);
    if (tb.repeat && std::any_of(tb.rates.begin(), tb.rates.end(), [](double r) { return r > 0.0; }))
      return std::numeric_limits<double>::infinity();
    for (std::size_t i = tb.rates.size(); i-- > 0;)
      if (tb.rates[i] > 0.0) return static_cast<double>(i + 1) * tb.bin_width;
    return 0.0;
  }

  const std::variant<SinusoidInflow, TableInflow>& definition() const noexcept { return def_; }

private:
  std::variant<SinusoidInflow, TableInflow> def_;
};

}  // namespace trafficrisk
