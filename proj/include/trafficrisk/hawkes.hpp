#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "trafficrisk/errors.hpp"

namespace trafficrisk {

// Exponential excitation kernel mu(t) = alpha * exp(-beta * t).
class ExcitationKernel {
public:
  ExcitationKernel(double alpha, double beta) : alpha_(alpha), beta_(beta) {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("excitation decay beta must be positive");
    if (!(alpha >= 0.0)) throw ConfigError("excitation amplitude alpha must be nonnegative");
    if (!(alpha < beta)) throw ConfigError("branching ratio alpha/beta must be below one (alpha < beta)");
  }

  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }
  double operator()(double t) const noexcept { return alpha_ * std::exp(-beta_ * t); }

private:
  double alpha_;
  double beta_;
};

// Expected number of direct offspring per jump, n* = alpha / beta.
inline double branching_ratio(const ExcitationKernel& k) noexcept { return k.alpha() / k.beta(); }

// Long-run mean of the conditional intensity for a background rate that
// settles at lambda_inf.
inline double stationary_mean(double lambda_inf, const ExcitationKernel& k) noexcept {
  return lambda_inf / (1.0 - branching_ratio(k));
}

// Jump history plus the recursively maintained excitation
// sum_j alpha * exp(-beta (t_now - t_j)).
class HawkesState {
public:
  explicit HawkesState(ExcitationKernel kernel, double t0 = 0.0) : kernel_(kernel), t_now_(t0) {}

  const ExcitationKernel& kernel() const noexcept { return kernel_; }
  const std::vector<double>& jump_times() const noexcept { return jumps_; }
  double accumulator() const noexcept { return accumulator_; }
  double now() const noexcept { return t_now_; }

  double conditional_intensity(double background) const noexcept { return background + accumulator_; }

  void advance(double dt) noexcept {
    accumulator_ *= std::exp(-kernel_.beta() * dt);
    t_now_ += dt;
  }

  // One Bernoulli trial of the per-step jump rule u <= dt * intensity. At
  // most one jump is recorded per step.
  bool step_sample(double intensity, double dt, double u) {
    const double p = dt * intensity;
    if (p >= 1.0)
      throw NumericalError("step_too_coarse", "dt * intensity = " + std::to_string(p) +
                                                  " >= 1; reduce the time step");
    if (u > p) return false;
    jumps_.push_back(t_now_);
    accumulator_ += kernel_.alpha();
    return true;
  }

  // Reference value of the excitation sum at t_now from the full history.
  double direct_sum() const noexcept {
    double s = 0.0;
    for (double tj : jumps_) s += kernel_(t_now_ - tj);
    return s;
  }

private:
  ExcitationKernel kernel_;
  std::vector<double> jumps_;
  double accumulator_ = 0.0;
  double t_now_ = 0.0;
};

// Free-function forms of the state operations.
inline double conditional_intensity(const HawkesState& s, double background) noexcept {
  return s.conditional_intensity(background);
}

inline HawkesState advance(HawkesState s, double dt) noexcept {
  s.advance(dt);
  return s;
}

}  // namespace trafficrisk
