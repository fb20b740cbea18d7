#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

#include "evtip/error.hpp"
#include "evtip/time_series.hpp"

namespace evtip {

/// Bulk early-warning statistics. Lag-1 autocorrelation is reported next to
/// variance and skewness as the customary third indicator.
struct BulkStats {
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double lag1_autocorr = 0.0;
  std::size_t n_samples = 0;
};

/// Single-pass central moments (Welford/Pebay updates) plus the lag-1
/// cross product, accumulated in coordinates shifted by the first sample.
class MomentAccumulator {
 public:
  void push(double x) noexcept {
    if (n_ == 0) shift_ = x;
    const double y = x - shift_;
    if (n_ > 0) lag_sum_ += prev_ * y;
    prev_ = y;

    const double n1 = static_cast<double>(n_);
    ++n_;
    const double nn = static_cast<double>(n_);
    const double delta = y - mean_;
    const double delta_n = delta / nn;
    const double term1 = delta * delta_n * n1;
    mean_ += delta_n;
    m3_ += term1 * delta_n * (nn - 2.0) - 3.0 * delta_n * m2_;
    m2_ += term1;
    sum_ += y;
  }

  std::size_t count() const noexcept { return n_; }

  BulkStats stats() const {
    if (n_ < 2) throw Error(ErrorCode::TooFewPoints, "bulk statistics need at least 2 samples");
    BulkStats s;
    const double nn = static_cast<double>(n_);
    s.n_samples = n_;
    s.mean = mean_ + shift_;
    s.variance = m2_ / (nn - 1.0);
    if (m2_ > 0.0) {
      s.skewness = (m3_ / nn) / std::pow(m2_ / nn, 1.5);
      // sum_{i<n} (y_i - ybar)(y_{i+1} - ybar), with y_1 = 0 in shifted units.
      const double head = sum_ - prev_;
      const double tail = sum_;
      const double cross = lag_sum_ - mean_ * (head + tail) + (nn - 1.0) * mean_ * mean_;
      s.lag1_autocorr = std::clamp(cross / m2_, -1.0, 1.0);
    }
    return s;
  }

 private:
  std::size_t n_ = 0;
  double shift_ = 0.0;
  double prev_ = 0.0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double m3_ = 0.0;
  double sum_ = 0.0;
  double lag_sum_ = 0.0;
};

inline BulkStats bulk_stats(std::span<const double> values, double burn_in_fraction) {
  MomentAccumulator acc;
  for (double x : values.subspan(burn_in_count(values.size(), burn_in_fraction))) {
    if (!std::isfinite(x)) throw Error(ErrorCode::NonFiniteValue, "non-finite sample");
    acc.push(x);
  }
  return acc.stats();
}

/// Unbiased variance, bias-uncorrected skewness g1, sample lag-1 ACF.
/// A constant series reports zero skewness and autocorrelation.
inline BulkStats bulk_stats(const TimeSeries& ts, double burn_in_fraction) {
  return bulk_stats(std::span<const double>(ts.values), burn_in_fraction);
}

}  // namespace evtip
