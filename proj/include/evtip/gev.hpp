#pragma once

// Generalized Extreme Value distribution: CDF, density, sampling and
// maximum-likelihood fitting with observed-information standard errors.
//
// Parameterization: F(x) = exp(-[1 + shape (x - location) / scale]^(-1/shape))
// on the support 1 + shape (x - location) / scale > 0. shape > 0 is the
// Frechet type (heavy upper tail), shape < 0 the (reversed) Weibull type with
// upper endpoint location - scale / shape, shape = 0 the Gumbel limit.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "evtip/error.hpp"
#include "evtip/optimize.hpp"
#include "evtip/random.hpp"

namespace evtip {

/// Below this |shape| the reduced exponent is evaluated by its series in
/// shape instead of log1p(shape z) / shape.
inline constexpr double kGumbelSwitch = 1e-6;

struct GevParams {
  double location = 0.0;
  double scale = 1.0;
  double shape = 0.0;
};

inline void validate(const GevParams& p) {
  if (!std::isfinite(p.location) || !std::isfinite(p.shape))
    throw Error(ErrorCode::InvalidArgument, "GEV location and shape must be finite");
  if (!(p.scale > 0.0) || !std::isfinite(p.scale))
    throw Error(ErrorCode::InvalidArgument, "GEV scale must be positive and finite");
}

/// Upper endpoint of the support; +inf unless shape < 0.
inline double gev_upper_endpoint(const GevParams& p) noexcept {
  return p.shape < 0.0 ? p.location - p.scale / p.shape
                       : std::numeric_limits<double>::infinity();
}

/// True when 1 + shape (x - location) / scale > 0.
inline bool gev_in_support(double x, const GevParams& p) noexcept {
  return 1.0 + p.shape * ((x - p.location) / p.scale) > 0.0;
}

namespace detail {

// log(1 + k z) / k, continuous through k = 0 where it equals z.
inline double reduced_exponent(double z, double k) noexcept {
  if (k == 0.0) return z;
  const double w = k * z;
  if (std::abs(k) < kGumbelSwitch && std::abs(w) < 1e-4)
    return z * (1.0 - w * (0.5 - w * (1.0 / 3.0 - w * 0.25)));
  return std::log1p(w) / k;
}

}  // namespace detail

inline double gev_cdf(double x, const GevParams& p) noexcept {
  const double z = (x - p.location) / p.scale;
  if (1.0 + p.shape * z <= 0.0) return p.shape > 0.0 ? 0.0 : 1.0;
  return std::exp(-std::exp(-detail::reduced_exponent(z, p.shape)));
}

/// Log density; -inf outside the support.
inline double gev_log_density(double x, const GevParams& p) noexcept {
  const double z = (x - p.location) / p.scale;
  const double w = p.shape * z;
  if (1.0 + w <= 0.0) return -std::numeric_limits<double>::infinity();
  const double y = detail::reduced_exponent(z, p.shape);
  return -std::log(p.scale) - std::log1p(w) - y - std::exp(-y);
}

/// Sum of log densities. Returns -inf as soon as one point violates the
/// support (or the scale is not positive), which the optimizer reads as
/// an infeasible parameter triple.
inline double gev_log_likelihood(std::span<const double> sample, const GevParams& p) noexcept {
  if (!(p.scale > 0.0)) return -std::numeric_limits<double>::infinity();
  const double inv_scale = 1.0 / p.scale;
  const double log_scale = std::log(p.scale);
  double total = 0.0;
  for (double x : sample) {
    const double z = (x - p.location) * inv_scale;
    const double w = p.shape * z;
    if (1.0 + w <= 0.0) return -std::numeric_limits<double>::infinity();
    const double y = detail::reduced_exponent(z, p.shape);
    total -= log_scale + std::log1p(w) + y + std::exp(-y);
  }
  return total;
}

/// Inverse-CDF draws. Deterministic for a fixed seed.
inline std::vector<double> gev_sample(const GevParams& p, std::size_t count, std::uint64_t seed) {
  validate(p);
  Rng rng(seed);
  std::vector<double> out;
  out.reserve(count);
  const double endpoint = gev_upper_endpoint(p);
  for (std::size_t i = 0; i < count; ++i) {
    // x = location + scale * ((-log U)^(-shape) - 1) / shape
    const double log_e = std::log(-std::log(rng.uniform_open()));
    const double reduced = p.shape == 0.0 ? -log_e : std::expm1(-p.shape * log_e) / p.shape;
    out.push_back(std::min(p.location + p.scale * reduced, endpoint));
  }
  return out;
}

/// Probability-weighted-moment estimator (Hosking, Wallis & Wood 1985).
/// Closed form, always returns a finite triple for samples with spread.
inline GevParams gev_pwm_estimate(std::span<const double> sample) {
  const std::size_t n = sample.size();
  if (n < 3) throw Error(ErrorCode::TooFewPoints, "PWM estimate needs at least 3 points");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());

  const double nd = static_cast<double>(n);
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = static_cast<double>(i);
    b0 += sorted[i];
    b1 += sorted[i] * r / (nd - 1.0);
    b2 += sorted[i] * r * (r - 1.0) / ((nd - 1.0) * (nd - 2.0));
  }
  b0 /= nd;
  b1 /= nd;
  b2 /= nd;

  const double l2 = 2.0 * b1 - b0;
  if (!(l2 > 0.0)) throw Error(ErrorCode::DegenerateInput, "sample has no spread");
  const double c = l2 / (3.0 * b2 - b0) - std::numbers::ln2 / std::log(3.0);
  // Hosking's k is the negated shape.
  double k = 7.8590 * c + 2.9554 * c * c;
  k = std::clamp(k, -0.9, 0.9);

  GevParams p;
  if (std::abs(k) < 1e-8) {
    p.scale = l2 / std::numbers::ln2;
    p.location = b0 - std::numbers::egamma * p.scale;
  } else {
    const double g = std::tgamma(1.0 + k);
    p.scale = l2 * k / (g * (1.0 - std::pow(2.0, -k)));
    p.location = b0 + p.scale * (g - 1.0) / k;
  }
  p.shape = -k;
  return p;
}

struct Interval {
  double low = 0.0;
  double high = 0.0;

  bool contains(double x) const noexcept { return low <= x && x <= high; }
};

struct GevFit {
  GevParams params;
  /// Order: location, scale, shape. +inf when the information matrix is
  /// not positive definite.
  std::array<double, 3> std_errors{};
  std::array<Interval, 3> ci95{};
  double log_likelihood = -std::numeric_limits<double>::infinity();
  std::size_t n_extremes = 0;
  bool converged = false;
  int iterations = 0;
};

struct FitOptions {
  std::size_t min_points = 30;
  int max_iterations = 10'000;
  double relative_tolerance = 1e-8;
  /// The likelihood is unbounded for shape < -1; the search is confined
  /// above this value.
  double min_shape = -1.0;
};

inline constexpr double kZ95 = 1.96;

namespace detail {

inline bool feasible(std::span<const double> sample, const GevParams& p) {
  return std::isfinite(gev_log_likelihood(sample, p));
}

// Observed information (negative Hessian of the log-likelihood) by central
// differences in (location, scale, shape).
inline Eigen::Matrix3d observed_information(std::span<const double> sample, const GevParams& p,
                                            bool& finite) {
  const std::array<double, 3> theta{p.location, p.scale, p.shape};
  const std::array<double, 3> h{1e-4 * p.scale, 1e-4 * p.scale, 1e-4};
  auto ll = [&](std::array<double, 3> t) {
    return gev_log_likelihood(sample, GevParams{t[0], t[1], t[2]});
  };
  finite = true;
  const double f0 = ll(theta);
  Eigen::Matrix3d info;
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) {
      double d2 = 0.0;
      if (i == j) {
        auto tp = theta, tm = theta;
        tp[i] += h[i];
        tm[i] -= h[i];
        d2 = (ll(tp) - 2.0 * f0 + ll(tm)) / (h[i] * h[i]);
      } else {
        auto tpp = theta, tpm = theta, tmp = theta, tmm = theta;
        tpp[i] += h[i]; tpp[j] += h[j];
        tpm[i] += h[i]; tpm[j] -= h[j];
        tmp[i] -= h[i]; tmp[j] += h[j];
        tmm[i] -= h[i]; tmm[j] -= h[j];
        d2 = (ll(tpp) - ll(tpm) - ll(tmp) + ll(tmm)) / (4.0 * h[i] * h[j]);
      }
      if (!std::isfinite(d2)) finite = false;
      info(i, j) = -d2;
      info(j, i) = -d2;
    }
  }
  return info;
}

}  // namespace detail

/// Maximum-likelihood GEV fit. Starts from the PWM estimate (or a Gumbel
/// moment match when that start is infeasible), minimizes the negative
/// log-likelihood over (location, log scale, shape) with Nelder-Mead plus one
/// restart, and derives standard errors from the inverse observed
/// information. Throws for too few or constant points; `converged` is false
/// if the optimizer hit its cap or the information is not positive definite.
inline GevFit gev_fit_mle(std::span<const double> extremes, const FitOptions& options = {}) {
  const std::size_t n = extremes.size();
  if (n < std::max<std::size_t>(options.min_points, 3))
    throw Error(ErrorCode::TooFewPoints, "GEV fit needs at least " +
                                             std::to_string(options.min_points) +
                                             " extremes, got " + std::to_string(n));
  for (double x : extremes)
    if (!std::isfinite(x)) throw Error(ErrorCode::NonFiniteValue, "non-finite extreme value");
  const auto [lo, hi] = std::minmax_element(extremes.begin(), extremes.end());
  if (!(*hi > *lo)) throw Error(ErrorCode::DegenerateInput, "all extremes are equal");

  GevParams start = gev_pwm_estimate(extremes);
  if (start.shape < options.min_shape || !detail::feasible(extremes, start)) {
    double mean = 0.0, m2 = 0.0;
    for (double x : extremes) mean += x;
    mean /= static_cast<double>(n);
    for (double x : extremes) m2 += (x - mean) * (x - mean);
    const double sd = std::sqrt(m2 / static_cast<double>(n - 1));
    start.scale = sd * std::sqrt(6.0) / std::numbers::pi;
    start.location = mean - std::numbers::egamma * start.scale;
    start.shape = 0.0;
  }

  const double min_shape = options.min_shape;
  auto objective = [&](const std::array<double, 3>& t) {
    if (t[2] < min_shape) return std::numeric_limits<double>::infinity();
    return -gev_log_likelihood(extremes, GevParams{t[0], std::exp(t[1]), t[2]});
  };

  optimize::NelderMeadOptions nm;
  nm.max_iterations = options.max_iterations;
  nm.relative_tolerance = options.relative_tolerance;
  const std::array<double, 3> step{0.1 * start.scale, 0.1, 0.1};
  auto run = optimize::nelder_mead(objective, {start.location, std::log(start.scale), start.shape},
                                   step, nm);
  auto restart = optimize::nelder_mead(objective, run.x, step, nm);
  const int iterations = run.iterations + restart.iterations;
  const bool nm_converged = run.converged && restart.converged;
  if (restart.value <= run.value) run = restart;

  GevFit fit;
  fit.params = GevParams{run.x[0], std::exp(run.x[1]), run.x[2]};
  fit.log_likelihood = -run.value;
  fit.n_extremes = n;
  fit.iterations = iterations;

  bool finite = false;
  const Eigen::Matrix3d info = detail::observed_information(extremes, fit.params, finite);
  const Eigen::LLT<Eigen::Matrix3d> llt(info);
  const bool positive_definite = finite && llt.info() == Eigen::Success;

  const std::array<double, 3> estimate{fit.params.location, fit.params.scale, fit.params.shape};
  if (positive_definite) {
    const Eigen::Matrix3d cov = llt.solve(Eigen::Matrix3d::Identity());
    for (int i = 0; i < 3; ++i) fit.std_errors[i] = std::sqrt(std::max(cov(i, i), 0.0));
  } else {
    fit.std_errors.fill(std::numeric_limits<double>::infinity());
  }
  for (int i = 0; i < 3; ++i) {
    const double half = kZ95 * fit.std_errors[i];
    fit.ci95[i] = Interval{estimate[i] - half, estimate[i] + half};
  }
  fit.converged = nm_converged && positive_definite && std::isfinite(fit.log_likelihood) &&
                  run.x[2] > min_shape;
  return fit;
}

}  // namespace evtip
