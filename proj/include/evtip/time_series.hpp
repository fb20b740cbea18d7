#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "evtip/error.hpp"

namespace evtip {

/// Uniformly sampled observable. `dt` converts sample counts (e.g. the
/// block length) into time units; everything downstream counts samples.
struct TimeSeries {
  std::vector<double> values;
  double dt = 1.0;
  std::string label;
  std::optional<double> control_value;

  std::size_t size() const noexcept { return values.size(); }
};

/// Throws unless the series is non-empty, finite, and has positive dt.
inline void validate(const TimeSeries& ts) {
  if (ts.values.empty()) throw Error(ErrorCode::EmptySeries, "time series is empty");
  if (!(ts.dt > 0.0) || !std::isfinite(ts.dt))
    throw Error(ErrorCode::InvalidArgument, "time series dt must be positive and finite");
  for (std::size_t i = 0; i < ts.values.size(); ++i) {
    if (!std::isfinite(ts.values[i]))
      throw Error(ErrorCode::NonFiniteValue,
                  "non-finite value at sample " + std::to_string(i));
  }
}

/// Number of leading samples dropped for a burn-in fraction. Chosen so the
/// retained length is floor((1 - fraction) * n).
inline std::size_t burn_in_count(std::size_t n, double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0))
    throw Error(ErrorCode::InvalidArgument, "burn_in_fraction must lie in [0, 1)");
  const double kept = std::floor((1.0 - fraction) * static_cast<double>(n) + 1e-9);
  const auto kept_n = static_cast<std::size_t>(kept);
  return kept_n >= n ? 0 : n - kept_n;
}

}  // namespace evtip
