#pragma once

// CSV ingestion and emission of series, extremes and scan tables; JSON
// summaries of fits and thresholds.

#include <json.hpp>

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "evtip/ensemble.hpp"
#include "evtip/error.hpp"
#include "evtip/extremes.hpp"
#include "evtip/gev.hpp"
#include "evtip/time_series.hpp"

namespace evtip {

using json = nlohmann::json;

/// Round-trip exact formatting of a double (17 significant digits).
inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ----------------------------------------------------------------------------
// Series CSV

struct ColumnSpec {
  /// Zero-based value column; the last column when unset.
  std::optional<std::size_t> value_column;
  char delimiter = ',';
  /// Explicit values take precedence over '#' metadata in the file.
  std::optional<double> dt;
  std::optional<double> control_value;
  std::optional<std::string> label;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Accepts everything strtod accepts, including nan/inf spellings, so that
// non-finite cells are reported as such rather than as parse failures.
inline std::optional<double> parse_real(std::string_view field) {
  if (field.empty()) return std::nullopt;
  const std::string s(field);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return std::nullopt;
  if (errno == ERANGE && std::isfinite(v) && v != 0.0) return std::nullopt;
  return v;
}

inline double metadata_real(std::string_view value, std::size_t line, std::string_view key) {
  const auto v = parse_real(value);
  if (!v || !std::isfinite(*v))
    throw ParseError(ErrorCode::ParseError, line,
                     "line " + std::to_string(line) + ": metadata " + std::string(key) +
                         " is not a finite number");
  return *v;
}

}  // namespace detail

/// Reads one series from CSV text. `source` names the input in messages.
inline TimeSeries parse_series_csv(std::istream& in, const ColumnSpec& columns = {},
                                   const std::string& source = "<stream>") {
  TimeSeries ts;
  std::optional<double> meta_dt, meta_control;
  std::optional<std::string> meta_label;
  bool seen_data_row = false;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = detail::trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      const std::string_view body = detail::trim(line.substr(1));
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) continue;
      const auto key = detail::trim(body.substr(0, eq));
      const auto value = detail::trim(body.substr(eq + 1));
      if (key == "dt") meta_dt = detail::metadata_real(value, line_no, key);
      else if (key == "control_value") meta_control = detail::metadata_real(value, line_no, key);
      else if (key == "label") meta_label = std::string(value);
      continue;
    }
    const auto fields = detail::split(line, columns.delimiter);
    const std::size_t col = columns.value_column.value_or(fields.size() - 1);
    if (col >= fields.size())
      throw ParseError(ErrorCode::ParseError, line_no,
                       source + ":" + std::to_string(line_no) + ": expected at least " +
                           std::to_string(col + 1) + " columns");
    const auto value = detail::parse_real(fields[col]);
    if (!value) {
      if (!seen_data_row && ts.values.empty()) {
        // Header row: remember the column name as a label fallback.
        seen_data_row = true;
        if (!meta_label) meta_label = std::string(fields[col]);
        continue;
      }
      throw ParseError(ErrorCode::ParseError, line_no,
                       source + ":" + std::to_string(line_no) + ": cannot parse '" +
                           std::string(fields[col]) + "' as a number");
    }
    if (!std::isfinite(*value))
      throw ParseError(ErrorCode::NonFiniteValue, line_no,
                       source + ":" + std::to_string(line_no) + ": non-finite value '" +
                           std::string(fields[col]) + "'");
    seen_data_row = true;
    ts.values.push_back(*value);
  }
  if (ts.values.empty()) throw Error(ErrorCode::EmptySeries, source + ": no data rows");
  ts.dt = columns.dt.value_or(meta_dt.value_or(1.0));
  ts.control_value = columns.control_value ? columns.control_value : meta_control;
  ts.label = columns.label.value_or(meta_label.value_or(""));
  validate(ts);
  return ts;
}

inline TimeSeries ingest_csv(const std::filesystem::path& path, const ColumnSpec& columns = {}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
  return parse_series_csv(in, columns, path.string());
}

/// Metadata comments, a "t,<label>" header and one row per sample.
inline void write_series_csv(std::ostream& out, const TimeSeries& ts) {
  out << "# dt=" << format_real(ts.dt) << '\n';
  if (ts.control_value) out << "# control_value=" << format_real(*ts.control_value) << '\n';
  const std::string label = ts.label.empty() ? "value" : ts.label;
  out << "# label=" << label << '\n';
  out << "t," << label << '\n';
  for (std::size_t i = 0; i < ts.values.size(); ++i)
    out << format_real(static_cast<double>(i + 1) * ts.dt) << ',' << format_real(ts.values[i])
        << '\n';
}

inline void write_extremes_csv(std::ostream& out, std::span<const double> extremes, Tail tail) {
  out << "bin," << (tail == Tail::Maxima ? "maximum" : "negated_minimum") << '\n';
  for (std::size_t i = 0; i < extremes.size(); ++i)
    out << i << ',' << format_real(extremes[i]) << '\n';
}

// ----------------------------------------------------------------------------
// Scan tables

inline void write_scan_csv(std::ostream& out, std::span<const ScanPoint> points) {
  out << "control_value,kappa_max_mean,kappa_max_std,kappa_min_mean,kappa_min_std,"
         "n_transitions,variance_mean,skewness_mean,fits_failed,n_realizations,"
         "lag1_autocorr_mean\n";
  for (const auto& p : points)
    out << format_real(p.control_value) << ',' << format_real(p.kappa_max_mean) << ','
        << format_real(p.kappa_max_std) << ',' << format_real(p.kappa_min_mean) << ','
        << format_real(p.kappa_min_std) << ',' << p.n_transitions_total << ','
        << format_real(p.variance_mean) << ',' << format_real(p.skewness_mean) << ','
        << p.fits_failed << ',' << p.n_realizations << ','
        << format_real(p.lag1_autocorr_mean) << '\n';
}

/// Long-format overlay table, one row per (pair, lambda).
inline void write_rescale_csv(std::ostream& out, std::span<const RescaledCurve> curves) {
  out << "bin_length_m,epsilon,eps2_log_m,control_value,kappa_min_mean,kappa_min_std,"
         "kappa_max_mean,kappa_max_std,n_transitions,fits_failed\n";
  for (const auto& c : curves) {
    const double scaling =
        c.pair.epsilon * c.pair.epsilon * std::log(static_cast<double>(c.pair.bin_length_m));
    for (const auto& p : c.points)
      out << c.pair.bin_length_m << ',' << format_real(c.pair.epsilon) << ','
          << format_real(scaling) << ',' << format_real(p.control_value) << ','
          << format_real(p.kappa_min_mean) << ',' << format_real(p.kappa_min_std) << ','
          << format_real(p.kappa_max_mean) << ',' << format_real(p.kappa_max_std) << ','
          << p.n_transitions_total << ',' << p.fits_failed << '\n';
  }
}

inline void write_sensitivity_csv(std::ostream& out, std::span<const SensitivityRow> rows) {
  out << "bin_length_m,n_extremes,location,scale,shape,shape_se,shape_ci_low,shape_ci_high,"
         "converged,error\n";
  for (const auto& r : rows) {
    out << r.bin_length_m << ',';
    if (r.fit) {
      const auto& f = *r.fit;
      out << f.n_extremes << ',' << format_real(f.params.location) << ','
          << format_real(f.params.scale) << ',' << format_real(f.params.shape) << ','
          << format_real(f.std_errors[2]) << ',' << format_real(f.ci95[2].low) << ','
          << format_real(f.ci95[2].high) << ',' << (f.converged ? 1 : 0) << ",\n";
    } else {
      std::string msg = r.error;
      for (char& ch : msg)
        if (ch == ',' || ch == '\n') ch = ' ';
      out << ",,,,,,,0," << msg << '\n';
    }
  }
}

// ----------------------------------------------------------------------------
// JSON summaries. Non-finite reals become null.

inline json real_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const GevFit& f) {
  static constexpr const char* names[3] = {"location", "scale", "shape"};
  const std::array<double, 3> est{f.params.location, f.params.scale, f.params.shape};
  json params = json::object();
  for (std::size_t i = 0; i < 3; ++i)
    params[names[i]] = {{"estimate", real_json(est[i])},
                        {"std_error", real_json(f.std_errors[i])},
                        {"ci95", {real_json(f.ci95[i].low), real_json(f.ci95[i].high)}}};
  return {{"params", params},
          {"log_likelihood", real_json(f.log_likelihood)},
          {"n_extremes", f.n_extremes},
          {"converged", f.converged},
          {"iterations", f.iterations}};
}

inline json to_json(const ScanPoint& p) {
  return {{"control_value", real_json(p.control_value)},
          {"kappa_max_mean", real_json(p.kappa_max_mean)},
          {"kappa_max_std", real_json(p.kappa_max_std)},
          {"kappa_min_mean", real_json(p.kappa_min_mean)},
          {"kappa_min_std", real_json(p.kappa_min_std)},
          {"n_transitions", p.n_transitions_total},
          {"fits_failed", p.fits_failed},
          {"n_realizations", p.n_realizations}};
}

inline json to_json(const ThresholdEstimate& t) {
  json crossings = json::array();
  for (double c : t.all_crossings) crossings.push_back(real_json(c));
  return {{"control_critical", real_json(t.control_critical)},
          {"uncertainty", real_json(t.uncertainty)},
          {"swept", {real_json(t.swept.low), real_json(t.swept.high)}},
          {"crossings", crossings},
          {"direction", t.negative_to_positive ? "negative-to-positive" : "positive-to-negative"},
          {"bracketing_points", {to_json(t.bracketing_points.first), to_json(t.bracketing_points.second)}},
          {"method", "linear-interp-kappa-min"}};
}

/// The no-crossing form: {"crossing": null, "kappa_range": [lo, hi]}.
inline json no_crossing_json(double kappa_lo, double kappa_hi, const std::string& reason) {
  return {{"crossing", nullptr},
          {"kappa_range", {real_json(kappa_lo), real_json(kappa_hi)}},
          {"reason", reason},
          {"method", "linear-interp-kappa-min"}};
}

/// Threshold JSON for a scan, falling back to the no-crossing form.
inline json threshold_json(std::span<const ScanPoint> points) {
  try {
    return to_json(detect_threshold(points));
  } catch (const NoCrossingError& e) {
    return no_crossing_json(e.kappa_lo(), e.kappa_hi(), e.what());
  }
}

inline json error_json(const std::exception& e) {
  json err = {{"message", e.what()}};
  if (const auto* ev = dynamic_cast<const Error*>(&e)) {
    err["code"] = to_string(ev->code());
    if (const auto* pe = dynamic_cast<const ParseError*>(&e)) err["line"] = pe->line();
    if (const auto* be = dynamic_cast<const BlowUpError*>(&e)) err["step"] = be->step();
  } else {
    err["code"] = "internal";
  }
  return {{"error", err}};
}

}  // namespace evtip
