#pragma once

// Control-parameter scans: ensembles of seeded realizations per grid point,
// GEV fits of block maxima and (negated) minima, aggregation of the shape
// parameter, and location of the zero crossing of the minima shape.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "evtip/error.hpp"
#include "evtip/extremes.hpp"
#include "evtip/gev.hpp"
#include "evtip/indicators.hpp"
#include "evtip/parallel.hpp"
#include "evtip/random.hpp"
#include "evtip/sde_models.hpp"
#include "evtip/time_series.hpp"

namespace evtip {

using ModelSpec = std::variant<CoupledShearSpec, DoubleWellSpec>;

/// Model field a scan varies.
enum class Control { NoiseU, Mu, Nu, Lambda, Epsilon };

inline ModelSpec with_control(ModelSpec model, Control control, double value) {
  std::visit(
      [&](auto& spec) {
        using Spec = std::decay_t<decltype(spec)>;
        if constexpr (std::is_same_v<Spec, CoupledShearSpec>) {
          switch (control) {
            case Control::NoiseU: spec.noise_u = value; return;
            case Control::Mu: spec.mu = value; return;
            case Control::Nu: spec.nu = value; return;
            default: break;
          }
        } else {
          switch (control) {
            case Control::Lambda: spec.lambda = value; return;
            case Control::Epsilon: spec.epsilon = value; return;
            default: break;
          }
        }
        throw Error(ErrorCode::InvalidArgument, "control parameter does not apply to this model");
      },
      model);
  return model;
}

struct ScanPoint {
  double control_value = 0.0;
  double kappa_max_mean = std::numeric_limits<double>::quiet_NaN();
  double kappa_max_std = std::numeric_limits<double>::quiet_NaN();
  double kappa_min_mean = std::numeric_limits<double>::quiet_NaN();
  double kappa_min_std = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_transitions_total = 0;
  double variance_mean = std::numeric_limits<double>::quiet_NaN();
  double skewness_mean = std::numeric_limits<double>::quiet_NaN();
  double lag1_autocorr_mean = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_realizations = 0;
  /// Realizations with at least one failed tail fit.
  std::size_t fits_failed = 0;
  std::size_t maxima_fits_ok = 0;
  std::size_t minima_fits_ok = 0;

  bool minima_failed() const noexcept { return minima_fits_ok == 0; }
  bool maxima_failed() const noexcept { return maxima_fits_ok == 0; }
  /// False when fewer than two fits back a tail's spread; the std is then
  /// 0 (single fit) or taken from the fit's standard error (external data).
  bool spread_from_ensemble() const noexcept {
    return maxima_fits_ok >= 2 && minima_fits_ok >= 2;
  }
};

struct ScanOptions {
  std::size_t n_realizations = 10;
  /// Bin length and burn-in; the tail field is ignored (both are fitted).
  BlockSpec block;
  std::size_t n_bins = 100;
  std::uint64_t master_seed = 1;
  /// Realization r uses the same seed at every grid point.
  bool common_random_numbers = true;
  /// Double-well only: reset to the right-hand minimum whenever the saddle is
  /// crossed, counting each reset as a transition.
  bool reset_on_escape = false;
  FitOptions fit;
};

/// Outcome of one realization: per-tail shape (empty on failed fit), the
/// transition count and bulk statistics of the post-burn-in series.
struct RealizationSummary {
  std::optional<double> kappa_max;
  std::optional<double> kappa_min;
  std::size_t n_transitions = 0;
  BulkStats bulk;
};

inline std::uint64_t realization_seed(const ScanOptions& options, std::size_t point,
                                      std::size_t realization) {
  return options.common_random_numbers
             ? derive_seed(options.master_seed, {realization})
             : derive_seed(options.master_seed, {point, realization});
}

/// Total steps to simulate so that n_bins complete bins remain after burn-in.
inline std::size_t steps_for_bins(const BlockSpec& block, std::size_t n_bins) {
  const double kept = static_cast<double>(block.bin_length_m * n_bins);
  auto total = static_cast<std::size_t>(std::ceil(kept / (1.0 - block.burn_in_fraction)));
  while (complete_bins(total, block) < n_bins) ++total;
  return total;
}

namespace detail {

inline std::optional<double> try_fit_shape(std::span<const double> extremes,
                                           const FitOptions& fit) {
  try {
    const GevFit f = gev_fit_mle(extremes, fit);
    if (f.converged) return f.params.shape;
  } catch (const Error&) {
  }
  return std::nullopt;
}

struct Spread {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double stddev = std::numeric_limits<double>::quiet_NaN();
  std::size_t count = 0;
};

// Order-independent: values are sorted before summation.
inline Spread spread(std::vector<double> values) {
  Spread s;
  s.count = values.size();
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) {
    s.stddev = 0.0;
    return s;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return s;
}

inline double sorted_mean(std::vector<double> values) { return spread(std::move(values)).mean; }

inline ScanPoint aggregate(double control_value, std::span<const RealizationSummary> runs) {
  ScanPoint p;
  p.control_value = control_value;
  p.n_realizations = runs.size();
  std::vector<double> kmax, kmin, var, skew, lag1;
  for (const auto& r : runs) {
    if (r.kappa_max) kmax.push_back(*r.kappa_max);
    if (r.kappa_min) kmin.push_back(*r.kappa_min);
    if (!r.kappa_max || !r.kappa_min) ++p.fits_failed;
    p.n_transitions_total += r.n_transitions;
    var.push_back(r.bulk.variance);
    skew.push_back(r.bulk.skewness);
    lag1.push_back(r.bulk.lag1_autocorr);
  }
  const Spread smax = spread(std::move(kmax));
  const Spread smin = spread(std::move(kmin));
  p.kappa_max_mean = smax.mean;
  p.kappa_max_std = smax.stddev;
  p.maxima_fits_ok = smax.count;
  p.kappa_min_mean = smin.mean;
  p.kappa_min_std = smin.stddev;
  p.minima_fits_ok = smin.count;
  p.variance_mean = sorted_mean(std::move(var));
  p.skewness_mean = sorted_mean(std::move(skew));
  p.lag1_autocorr_mean = sorted_mean(std::move(lag1));
  return p;
}

}  // namespace detail

/// Simulates one realization and reduces it on the fly (block extremes of
/// both tails, bulk moments), so memory does not grow with the run length.
inline RealizationSummary run_realization(const ModelSpec& model, const ScanOptions& options) {
  const std::size_t total = steps_for_bins(options.block, options.n_bins);
  const std::size_t skip = burn_in_count(total, options.block.burn_in_fraction);
  BlockExtremaAccumulator blocks(options.block.bin_length_m, skip);
  MomentAccumulator moments;
  std::size_t seen = 0;
  auto observe = [&](double v) {
    blocks.push(v);
    if (seen++ >= skip) moments.push(v);
  };

  RealizationSummary out;
  if (const auto* shear = std::get_if<CoupledShearSpec>(&model)) {
    out.n_transitions = integrate_shear(*shear, total, observe).n_transitions;
  } else {
    const auto& dw = std::get<DoubleWellSpec>(model);
    out.n_transitions = integrate_doublewell(dw, total, options.reset_on_escape, observe).n_transitions;
  }
  const auto n = options.n_bins;
  auto maxima = std::span<const double>(blocks.maxima()).first(n);
  auto minima = std::span<const double>(blocks.negated_minima()).first(n);
  out.kappa_max = detail::try_fit_shape(maxima, options.fit);
  out.kappa_min = detail::try_fit_shape(minima, options.fit);
  out.bulk = moments.stats();
  return out;
}

/// Ensemble scan over a strictly monotone control grid. Work units
/// (grid point x realization) run in parallel; aggregation is deterministic.
inline std::vector<ScanPoint> run_scan(const ModelSpec& model, Control control,
                                       std::span<const double> grid, const ScanOptions& options) {
  if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "control grid is empty");
  if (options.n_realizations == 0)
    throw Error(ErrorCode::InvalidArgument, "n_realizations must be positive");
  if (options.n_bins == 0) throw Error(ErrorCode::InvalidArgument, "n_bins must be positive");
  if (grid.size() > 1) {
    const bool up = grid[1] > grid[0];
    for (std::size_t i = 1; i < grid.size(); ++i)
      if (!(up ? grid[i] > grid[i - 1] : grid[i] < grid[i - 1]))
        throw Error(ErrorCode::InvalidArgument, "control grid must be strictly monotone");
  }

  std::vector<ModelSpec> specs;
  specs.reserve(grid.size());
  for (double v : grid) {
    specs.push_back(with_control(model, control, v));
    std::visit([](const auto& s) { validate(s); }, specs.back());
  }

  const std::size_t n_real = options.n_realizations;
  std::vector<RealizationSummary> runs(grid.size() * n_real);
  parallel_for(runs.size(), [&](std::size_t unit) {
    const std::size_t point = unit / n_real;
    const std::size_t r = unit % n_real;
    ModelSpec spec = specs[point];
    const std::uint64_t seed = realization_seed(options, point, r);
    std::visit([&](auto& s) { s.seed = seed; }, spec);
    runs[unit] = run_realization(spec, options);
  });

  std::vector<ScanPoint> points;
  points.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    points.push_back(
        detail::aggregate(grid[i], std::span<const RealizationSummary>(runs).subspan(i * n_real, n_real)));
  return points;
}

// ----------------------------------------------------------------------------
// Threshold detection

struct ThresholdEstimate {
  double control_critical = 0.0;
  /// Largest distance from control_critical to the ends of `swept`.
  double uncertainty = 0.0;
  Interval swept;
  std::pair<ScanPoint, ScanPoint> bracketing_points;
  /// Every sign change of kappa_min_mean, in scan order; the first is primary.
  std::vector<double> all_crossings;
  /// Direction of the primary crossing along the scan.
  bool negative_to_positive = true;
};

namespace detail {

inline double linear_root(double xa, double ka, double xb, double kb) {
  return xa + (xb - xa) * (-ka) / (kb - ka);
}

inline bool crosses(double ka, double kb, bool upward) noexcept {
  return upward ? (ka < 0.0 && kb >= 0.0) : (ka > 0.0 && kb <= 0.0);
}

// Root of the curve shifted by `shift` stds, in the primary's direction and
// nearest to `center`; a root pushed off the scan is clipped to its end.
inline double shifted_root(std::span<const ScanPoint* const> pts, std::size_t bracket,
                           bool upward, double shift, double center) {
  auto value = [&](std::size_t j) {
    const double sd = std::isfinite(pts[j]->kappa_min_std) ? pts[j]->kappa_min_std : 0.0;
    return pts[j]->kappa_min_mean + shift * sd;
  };
  std::optional<double> best;
  for (std::size_t j = 0; j + 1 < pts.size(); ++j) {
    const double ka = value(j), kb = value(j + 1);
    if (!crosses(ka, kb, upward)) continue;
    const double r = linear_root(pts[j]->control_value, ka, pts[j + 1]->control_value, kb);
    if (!best || std::abs(r - center) < std::abs(*best - center)) best = r;
  }
  if (best) return *best;
  const bool past = upward ? value(bracket + 1) >= 0.0 : value(bracket + 1) <= 0.0;
  return past ? pts.front()->control_value : pts.back()->control_value;
}

}  // namespace detail

/// Locates sign changes of the minima shape between consecutive scan points
/// with successful minima fits and linearly interpolates the zero. The swept
/// interval spans the roots of the curve with every mean moved by -1 and +1
/// std; roots pushed off the scan are clipped to its ends.
/// Throws NoCrossingError (with the observed kappa range) when there is no
/// sign change or fewer than two usable points.
inline ThresholdEstimate detect_threshold(std::span<const ScanPoint> scan) {
  std::vector<const ScanPoint*> usable;
  for (const auto& p : scan)
    if (!p.minima_failed() && std::isfinite(p.kappa_min_mean)) usable.push_back(&p);

  double k_lo = std::numeric_limits<double>::infinity();
  double k_hi = -std::numeric_limits<double>::infinity();
  for (const auto* p : usable) {
    k_lo = std::min(k_lo, p->kappa_min_mean);
    k_hi = std::max(k_hi, p->kappa_min_mean);
  }
  if (usable.size() < 2)
    throw NoCrossingError(k_lo, k_hi, "threshold detection needs two scan points with minima fits");

  ThresholdEstimate est;
  std::optional<std::size_t> primary;
  for (std::size_t i = 0; i + 1 < usable.size(); ++i) {
    const double ka = usable[i]->kappa_min_mean;
    const double kb = usable[i + 1]->kappa_min_mean;
    const bool up = detail::crosses(ka, kb, true);
    if (!up && !detail::crosses(ka, kb, false)) continue;
    est.all_crossings.push_back(
        detail::linear_root(usable[i]->control_value, ka, usable[i + 1]->control_value, kb));
    if (!primary) {
      primary = i;
      est.negative_to_positive = up;
    }
  }
  if (!primary) throw NoCrossingError(k_lo, k_hi, "kappa_min does not change sign over the scan");

  est.control_critical = est.all_crossings.front();
  est.bracketing_points = {*usable[*primary], *usable[*primary + 1]};

  double lo = est.control_critical, hi = est.control_critical;
  for (double shift : {-1.0, 1.0}) {
    const double r = detail::shifted_root(usable, *primary, est.negative_to_positive, shift,
                                          est.control_critical);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  est.swept = Interval{lo, hi};
  est.uncertainty = std::max(est.control_critical - lo, hi - est.control_critical);
  return est;
}

// ----------------------------------------------------------------------------
// Bin-length / noise rescaling of the double-well scan

struct RescalePair {
  std::size_t bin_length_m = 1000;
  double epsilon = 0.3;
};

struct RescaledCurve {
  RescalePair pair;
  std::vector<ScanPoint> points;
  std::optional<ThresholdEstimate> threshold;
  /// Set when the curve failed outright or has no zero crossing.
  std::string error;
};

struct RescaleOptions {
  std::size_t n_realizations = 10;
  std::size_t n_bins = 100;
  double dt = 0.01;
  double burn_in_fraction = kDefaultBurnIn;
  std::uint64_t master_seed = 1;
  /// Return to the right-hand minimum after each saddle crossing (see
  /// ScanOptions::reset_on_escape); without it an escape is absorbing.
  bool reset_on_escape = true;
  FitOptions fit;
};

/// One minima-shape curve per (m, epsilon) pair over the lambda grid. With
/// epsilon^2 log m held fixed the zero crossings should coincide.
inline std::vector<RescaledCurve> rescaled_scan(double a, std::span<const double> lambda_grid,
                                                std::span<const RescalePair> pairs,
                                                const RescaleOptions& options) {
  std::vector<RescaledCurve> curves;
  curves.reserve(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    RescaledCurve curve;
    curve.pair = pairs[k];
    try {
      DoubleWellSpec spec;
      spec.a = a;
      spec.epsilon = pairs[k].epsilon;
      spec.dt = options.dt;
      ScanOptions so;
      so.n_realizations = options.n_realizations;
      so.n_bins = options.n_bins;
      so.block = BlockSpec{pairs[k].bin_length_m, Tail::Minima, options.burn_in_fraction};
      so.master_seed = derive_seed(options.master_seed, {k});
      so.reset_on_escape = options.reset_on_escape;
      so.fit = options.fit;
      curve.points = run_scan(spec, Control::Lambda, lambda_grid, so);
      curve.threshold = detect_threshold(curve.points);
    } catch (const Error& e) {
      curve.error = e.what();
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

// ----------------------------------------------------------------------------
// Ingested series

struct ExternalOptions {
  /// Fit the concatenated extremes of all series sharing a control value
  /// instead of averaging per-series fits.
  bool pooled = false;
  FitOptions fit;
};

struct ExternalAnalysis {
  std::vector<ScanPoint> points;
  std::optional<ThresholdEstimate> threshold;
  /// Observed kappa_min range when no crossing was found.
  std::optional<Interval> kappa_range;
  std::string no_crossing_reason;
};

/// Scan pipeline on externally produced series (e.g. DNS output). Series are
/// grouped by control value; a group of one (or pooled mode) takes its
/// spread from the fit's standard error on the shape.
inline ExternalAnalysis analyze_external(std::span<const TimeSeries> series,
                                         const BlockSpec& block,
                                         const ExternalOptions& options = {}) {
  std::map<double, std::vector<const TimeSeries*>> groups;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (!series[i].control_value)
      throw Error(ErrorCode::InvalidArgument,
                  "series " + std::to_string(i) + " (" + series[i].label + ") has no control_value");
    validate(series[i]);
    groups[*series[i].control_value].push_back(&series[i]);
  }

  ExternalAnalysis out;
  for (const auto& [control, members] : groups) {
    BlockSpec bmax = block, bmin = block;
    bmax.tail = Tail::Maxima;
    bmin.tail = Tail::Minima;

    std::vector<RealizationSummary> runs;
    std::vector<double> pooled_max, pooled_min;
    std::vector<GevFit> fits_max, fits_min;
    for (const auto* ts : members) {
      RealizationSummary r;
      r.bulk = bulk_stats(*ts, block.burn_in_fraction);
      const auto mx = block_extremes(*ts, bmax);
      const auto mn = block_extremes(*ts, bmin);
      if (options.pooled) {
        pooled_max.insert(pooled_max.end(), mx.begin(), mx.end());
        pooled_min.insert(pooled_min.end(), mn.begin(), mn.end());
      } else {
        auto fit_tail = [&](std::span<const double> xs, std::vector<GevFit>& sink) {
          try {
            const GevFit f = gev_fit_mle(xs, options.fit);
            if (f.converged) {
              sink.push_back(f);
              return std::optional<double>(f.params.shape);
            }
          } catch (const Error&) {
          }
          return std::optional<double>{};
        };
        r.kappa_max = fit_tail(mx, fits_max);
        r.kappa_min = fit_tail(mn, fits_min);
      }
      runs.push_back(r);
    }

    ScanPoint p = detail::aggregate(control, runs);
    auto from_single_fit = [](std::span<const double> xs, const FitOptions& fo, double& mean,
                              double& sd, std::size_t& ok) {
      try {
        const GevFit f = gev_fit_mle(xs, fo);
        if (f.converged) {
          mean = f.params.shape;
          sd = f.std_errors[2];
          ok = 1;
        }
      } catch (const Error&) {
      }
    };
    if (options.pooled) {
      p.fits_failed = 0;
      from_single_fit(pooled_max, options.fit, p.kappa_max_mean, p.kappa_max_std, p.maxima_fits_ok);
      from_single_fit(pooled_min, options.fit, p.kappa_min_mean, p.kappa_min_std, p.minima_fits_ok);
      if (p.maxima_failed() || p.minima_failed()) p.fits_failed = members.size();
    } else {
      if (fits_max.size() == 1) p.kappa_max_std = fits_max.front().std_errors[2];
      if (fits_min.size() == 1) p.kappa_min_std = fits_min.front().std_errors[2];
    }
    out.points.push_back(p);
  }

  try {
    out.threshold = detect_threshold(out.points);
  } catch (const NoCrossingError& e) {
    out.kappa_range = Interval{e.kappa_lo(), e.kappa_hi()};
    out.no_crossing_reason = e.what();
  }
  return out;
}

}  // namespace evtip
