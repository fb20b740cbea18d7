#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evtip/error.hpp"
#include "evtip/gev.hpp"
#include "evtip/time_series.hpp"

namespace evtip {

enum class Tail { Maxima, Minima };

inline constexpr double kDefaultBurnIn = 0.1;

/// Block selection: bins of `bin_length_m` samples after dropping the
/// burn-in. Minima are negated on extraction so fits always see maxima.
struct BlockSpec {
  std::size_t bin_length_m = 1000;
  Tail tail = Tail::Maxima;
  double burn_in_fraction = kDefaultBurnIn;
};

/// Number of complete bins the spec yields on a series of length n.
inline std::size_t complete_bins(std::size_t n, const BlockSpec& spec) {
  if (spec.bin_length_m == 0) throw Error(ErrorCode::InvalidArgument, "bin length must be >= 1");
  return (n - burn_in_count(n, spec.burn_in_fraction)) / spec.bin_length_m;
}

/// One extreme per complete bin, in bin order. The trailing partial bin is
/// discarded. For Tail::Minima the returned values are -min(bin).
inline std::vector<double> block_extremes(std::span<const double> values, const BlockSpec& spec) {
  const std::size_t n_bins = complete_bins(values.size(), spec);
  if (n_bins == 0)
    throw Error(ErrorCode::NoCompleteBins,
                "no complete bin of length " + std::to_string(spec.bin_length_m) +
                    " in a series of " + std::to_string(values.size()) + " samples");
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!std::isfinite(values[i]))
      throw Error(ErrorCode::NonFiniteValue, "non-finite value at sample " + std::to_string(i));

  const std::size_t m = spec.bin_length_m;
  const auto body = values.subspan(burn_in_count(values.size(), spec.burn_in_fraction));
  std::vector<double> out;
  out.reserve(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    const auto bin = body.subspan(b * m, m);
    if (spec.tail == Tail::Maxima)
      out.push_back(*std::max_element(bin.begin(), bin.end()));
    else
      out.push_back(-*std::min_element(bin.begin(), bin.end()));
  }
  return out;
}

inline std::vector<double> block_extremes(const TimeSeries& ts, const BlockSpec& spec) {
  return block_extremes(std::span<const double>(ts.values), spec);
}

/// Streaming counterpart of block_extremes for both tails at once, for runs
/// too long to keep in memory. Feed every sample (burn-in included); the
/// first `skip` samples are ignored.
class BlockExtremaAccumulator {
 public:
  BlockExtremaAccumulator(std::size_t bin_length, std::size_t skip)
      : bin_length_(bin_length), skip_(skip) {
    if (bin_length_ == 0) throw Error(ErrorCode::InvalidArgument, "bin length must be >= 1");
  }

  void push(double x) noexcept {
    if (skip_ > 0) {
      --skip_;
      return;
    }
    if (fill_ == 0) {
      cur_max_ = x;
      cur_min_ = x;
    } else {
      cur_max_ = std::max(cur_max_, x);
      cur_min_ = std::min(cur_min_, x);
    }
    if (++fill_ == bin_length_) {
      maxima_.push_back(cur_max_);
      neg_minima_.push_back(-cur_min_);
      fill_ = 0;
    }
  }

  const std::vector<double>& maxima() const noexcept { return maxima_; }
  /// Negated bin minima.
  const std::vector<double>& negated_minima() const noexcept { return neg_minima_; }

 private:
  std::size_t bin_length_;
  std::size_t skip_;
  std::size_t fill_ = 0;
  double cur_max_ = 0.0;
  double cur_min_ = 0.0;
  std::vector<double> maxima_;
  std::vector<double> neg_minima_;
};

struct SensitivityRow {
  std::size_t bin_length_m = 0;
  std::optional<GevFit> fit;
  std::string error;
};

/// Fits the selected tail once per bin length. Rows that cannot be fitted
/// carry the error message; throws only if every row fails.
inline std::vector<SensitivityRow> bin_length_sensitivity(const TimeSeries& ts,
                                                          const BlockSpec& spec,
                                                          std::span<const std::size_t> m_grid,
                                                          const FitOptions& options = {}) {
  std::vector<SensitivityRow> rows;
  rows.reserve(m_grid.size());
  bool any_ok = false;
  for (std::size_t m : m_grid) {
    SensitivityRow row;
    row.bin_length_m = m;
    try {
      BlockSpec s = spec;
      s.bin_length_m = m;
      row.fit = gev_fit_mle(block_extremes(ts, s), options);
      any_ok = true;
    } catch (const Error& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  if (!rows.empty() && !any_ok)
    throw Error(ErrorCode::TooFewPoints, "no bin length in the grid produced a fit");
  return rows;
}

}  // namespace evtip
