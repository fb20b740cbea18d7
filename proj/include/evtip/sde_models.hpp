#pragma once

// Stochastic toy models with bistability, integrated by Euler-Maruyama
// (Ito interpretation).
//
// Coupled shear model, multiplicative noise on the X damping:
//   dX = (-mu X + Y^2) dt - u X dW,   dY = (-nu Y + X - X Y) dt
// observable E = (X^2 + Y^2) / 2, reset to the stable nontrivial fixed point
// whenever E drops below the laminar threshold.
//
// Double-well Langevin model:
//   dX = -V'(X) dt + eps dW,   V(X) = X^4 / 4 - a X^2 + lambda X
// observable X, started at the right-hand minimum.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "evtip/error.hpp"
#include "evtip/random.hpp"
#include "evtip/time_series.hpp"

namespace evtip {

inline constexpr double kOverflowGuard = 1e6;
inline constexpr double kDefaultLaminarThreshold = 1e-4;

struct ShearState {
  double x = 0.0;
  double y = 0.0;
};

struct CoupledShearSpec {
  double mu = 1.0;
  double nu = 0.2475;
  double noise_u = 0.0;
  double dt = 0.01;
  std::uint64_t seed = 1;
  double laminar_threshold = kDefaultLaminarThreshold;
};

struct DoubleWellSpec {
  double a = 1.0;
  double lambda = 0.0;
  double epsilon = 0.3;
  double dt = 0.01;
  std::uint64_t seed = 1;
};

struct RunResult {
  TimeSeries series;
  std::size_t n_transitions = 0;
  std::vector<double> escape_times;
};

// ----------------------------------------------------------------------------
// Coupled shear model

struct ShearFixedPoints {
  ShearState stable;
  ShearState unstable;
  ShearState trivial;
};

/// Nontrivial steady states: Y solves Y^2 - Y + mu nu = 0, X = Y^2 / mu.
/// The larger root is the stable (turbulent-like) branch.
inline ShearFixedPoints shear_fixed_points(double mu, double nu) {
  if (!(mu > 0.0) || !(nu > 0.0))
    throw Error(ErrorCode::InvalidArgument, "mu and nu must be positive");
  const double product = mu * nu;
  if (!(product < 0.25))
    throw Error(ErrorCode::NoNontrivialFixedPoints,
                "mu*nu = " + std::to_string(product) + " >= 1/4: no nontrivial fixed points");
  const double y_plus = 0.5 * (1.0 + std::sqrt(1.0 - 4.0 * product));
  const double y_minus = product / y_plus;
  return ShearFixedPoints{{y_plus * y_plus / mu, y_plus},
                          {y_minus * y_minus / mu, y_minus},
                          {0.0, 0.0}};
}

inline double shear_energy(const ShearState& s) noexcept { return 0.5 * (s.x * s.x + s.y * s.y); }

/// Deterministic right-hand side split into its linear and quadratic parts.
/// The quadratic part is energy-neutral: x * nonlinear_x + y * nonlinear_y = 0.
struct ShearDrift {
  double linear_x = 0.0;
  double linear_y = 0.0;
  double nonlinear_x = 0.0;
  double nonlinear_y = 0.0;

  double dx() const noexcept { return linear_x + nonlinear_x; }
  double dy() const noexcept { return linear_y + nonlinear_y; }
};

inline ShearDrift shear_drift(const ShearState& s, double mu, double nu) noexcept {
  return ShearDrift{-mu * s.x, -nu * s.y + s.x, s.y * s.y, -s.x * s.y};
}

inline void validate(const CoupledShearSpec& spec) {
  (void)shear_fixed_points(spec.mu, spec.nu);
  if (!(spec.noise_u >= 0.0) || !std::isfinite(spec.noise_u))
    throw Error(ErrorCode::InvalidArgument, "noise amplitude u must be >= 0");
  if (!(spec.dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  if (!(spec.dt * std::max(spec.mu, spec.nu) < 0.1))
    throw Error(ErrorCode::InvalidArgument, "dt*max(mu, nu) must be below 0.1");
  if (!(spec.laminar_threshold > 0.0))
    throw Error(ErrorCode::InvalidArgument, "laminar threshold must be positive");
}

struct ShearRunStats {
  std::size_t n_transitions = 0;
  ShearState final_state;
};

/// Integrates n_steps and hands E to `observe` after every step (the value
/// below threshold is reported before the reset). Starts at the stable
/// fixed point unless `start` is given.
template <class Observer>
ShearRunStats integrate_shear(const CoupledShearSpec& spec, std::size_t n_steps,
                              Observer&& observe, std::optional<ShearState> start = {}) {
  validate(spec);
  const ShearState reset = shear_fixed_points(spec.mu, spec.nu).stable;
  ShearState s = start.value_or(reset);
  Rng rng(spec.seed);
  const double sqrt_dt = std::sqrt(spec.dt);
  const double noise = spec.noise_u;

  ShearRunStats stats;
  for (std::size_t step = 0; step < n_steps; ++step) {
    const ShearDrift f = shear_drift(s, spec.mu, spec.nu);
    const double dw = noise > 0.0 ? sqrt_dt * rng.normal() : 0.0;
    s.x += spec.dt * f.dx() - noise * s.x * dw;
    s.y += spec.dt * f.dy();
    if (!(std::abs(s.x) <= kOverflowGuard && std::abs(s.y) <= kOverflowGuard))
      throw BlowUpError(step, "coupled shear model diverged at step " + std::to_string(step));
    const double e = shear_energy(s);
    observe(e);
    if (e < spec.laminar_threshold) {
      ++stats.n_transitions;
      s = reset;
    }
  }
  stats.final_state = s;
  return stats;
}

inline RunResult simulate_shear(const CoupledShearSpec& spec, std::size_t n_steps) {
  RunResult out;
  out.series.dt = spec.dt;
  out.series.label = "E";
  out.series.values.reserve(n_steps);
  out.n_transitions =
      integrate_shear(spec, n_steps, [&](double e) { out.series.values.push_back(e); })
          .n_transitions;
  return out;
}

// ----------------------------------------------------------------------------
// Double-well model

inline double doublewell_potential(double x, double a, double lambda) noexcept {
  const double x2 = x * x;
  return 0.25 * x2 * x2 - a * x2 + lambda * x;
}

inline double doublewell_force(double x, double a, double lambda) noexcept {
  return -(x * x * x - 2.0 * a * x + lambda);
}

struct DoubleWellCriticalPoints {
  double x1 = 0.0;
  double x_saddle = 0.0;
  double x2 = 0.0;
};

/// Roots of V'(x) = x^3 - 2 a x + lambda, ascending. Requires the
/// discriminant 32 a^3 - 27 lambda^2 to be positive (bistable regime).
inline DoubleWellCriticalPoints doublewell_critical_points(double a, double lambda) {
  if (!(a > 0.0)) throw Error(ErrorCode::InvalidArgument, "a must be positive");
  const double discriminant = 32.0 * a * a * a - 27.0 * lambda * lambda;
  if (!(discriminant > 0.0))
    throw Error(ErrorCode::Monostable, "lambda = " + std::to_string(lambda) +
                                           " leaves fewer than three critical points");
  // Trigonometric form of the three real roots of t^3 + p t + q, p = -2a.
  const double p = -2.0 * a;
  const double amp = 2.0 * std::sqrt(-p / 3.0);
  const double phi =
      std::acos(std::clamp(1.5 * lambda / p * std::sqrt(-3.0 / p), -1.0, 1.0)) / 3.0;
  std::array<double, 3> r;
  for (std::size_t k = 0; k < 3; ++k) {
    double x = amp * std::cos(phi - 2.0 * std::numbers::pi * static_cast<double>(k) / 3.0);
    for (int it = 0; it < 3; ++it) {
      const double slope = 3.0 * x * x - 2.0 * a;
      if (slope == 0.0) break;
      x -= (x * x * x - 2.0 * a * x + lambda) / slope;
    }
    r[k] = x;
  }
  std::sort(r.begin(), r.end());
  return {r[0], r[1], r[2]};
}

enum class Well { Left, Right };

inline double barrier_height(double a, double lambda, Well from) {
  const auto cp = doublewell_critical_points(a, lambda);
  const double well = from == Well::Left ? cp.x1 : cp.x2;
  return doublewell_potential(cp.x_saddle, a, lambda) - doublewell_potential(well, a, lambda);
}

inline void validate(const DoubleWellSpec& spec) {
  (void)doublewell_critical_points(spec.a, spec.lambda);
  if (!(spec.epsilon >= 0.0) || !std::isfinite(spec.epsilon))
    throw Error(ErrorCode::InvalidArgument, "epsilon must be >= 0");
  if (!(spec.dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
}

struct DoubleWellRunStats {
  std::size_t n_transitions = 0;
  std::vector<double> escape_times;
  double final_x = 0.0;
};

/// Integrates n_steps, reporting X after each step. With `record_escapes`, a
/// step landing below the saddle counts as an escape: the time since the last
/// reset is logged and X returns to the right-hand minimum.
template <class Observer>
DoubleWellRunStats integrate_doublewell(const DoubleWellSpec& spec, std::size_t n_steps,
                                        bool record_escapes, Observer&& observe,
                                        std::optional<double> start = {}) {
  validate(spec);
  const auto cp = doublewell_critical_points(spec.a, spec.lambda);
  double x = start.value_or(cp.x2);
  Rng rng(spec.seed);
  const double dt = spec.dt;
  const double noise = spec.epsilon * std::sqrt(dt);
  const double a = spec.a;
  const double lambda = spec.lambda;

  DoubleWellRunStats stats;
  std::size_t last_reset = 0;
  for (std::size_t step = 0; step < n_steps; ++step) {
    x += dt * doublewell_force(x, a, lambda);
    if (noise > 0.0) x += noise * rng.normal();
    if (!(std::abs(x) <= kOverflowGuard))
      throw BlowUpError(step, "double-well model diverged at step " + std::to_string(step));
    observe(x);
    if (record_escapes && x < cp.x_saddle) {
      ++stats.n_transitions;
      stats.escape_times.push_back(static_cast<double>(step + 1 - last_reset) * dt);
      last_reset = step + 1;
      x = cp.x2;
    }
  }
  stats.final_x = x;
  return stats;
}

inline RunResult simulate_doublewell(const DoubleWellSpec& spec, std::size_t n_steps,
                                     bool record_escapes) {
  RunResult out;
  out.series.dt = spec.dt;
  out.series.label = "X";
  out.series.values.reserve(n_steps);
  auto stats = integrate_doublewell(spec, n_steps, record_escapes,
                                    [&](double x) { out.series.values.push_back(x); });
  out.n_transitions = stats.n_transitions;
  out.escape_times = std::move(stats.escape_times);
  return out;
}

}  // namespace evtip
