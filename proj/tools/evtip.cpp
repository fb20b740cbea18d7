// evtip command-line interface: fit | scan-model | scan-data | rescale | simulate.
//
// Every key of a subcommand's config section is also a flag (underscores
// become dashes); flags override values read with --config. Outputs and the
// resolved config.json go to output_dir; the main JSON result is printed to
// stdout. Failures print {"error": {...}} to stderr and exit nonzero.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "evtip/evtip.hpp"

namespace fs = std::filesystem;
using evtip::json;

namespace {

constexpr int kExitFailure = 2;
constexpr int kExitUsage = 64;

std::string flag_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

json parse_flag_value(const json& default_value, const std::string& text) {
  if (default_value.is_string()) return text;
  std::string doc = text;
  if (default_value.is_array() && (doc.empty() || doc.front() != '[')) doc = "[" + doc + "]";
  try {
    return json::parse(doc);
  } catch (const json::parse_error&) {
    if (default_value.is_array() && text.front() != '[') {
      // Bare comma lists of paths or labels.
      json items = json::array();
      std::stringstream in(text);
      for (std::string item; std::getline(in, item, ',');) items.push_back(item);
      return items;
    }
    throw evtip::Error(evtip::ErrorCode::InvalidConfig, "cannot parse flag value '" + text + "'");
  }
}

std::size_t get_count(const json& s, const std::string& key, bool allow_zero = false) {
  const json& v = s.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < (allow_zero ? 0 : 1))
    throw evtip::Error(evtip::ErrorCode::InvalidConfig,
                       key + " must be a " + (allow_zero ? "non-negative" : "positive") +
                           " integer");
  return v.get<std::size_t>();
}

std::uint64_t get_seed(const json& s, const std::string& key) {
  const json& v = s.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
  throw evtip::Error(evtip::ErrorCode::InvalidConfig, key + " must be a non-negative integer");
}

std::vector<double> get_reals(const json& s, const std::string& key) {
  std::vector<double> out;
  for (const auto& v : s.at(key)) {
    if (!v.is_number())
      throw evtip::Error(evtip::ErrorCode::InvalidConfig, key + " must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

evtip::ColumnSpec column_spec(const json& s) {
  evtip::ColumnSpec c;
  const auto col = s.at("value_column").get<std::int64_t>();
  if (col >= 0) c.value_column = static_cast<std::size_t>(col);
  return c;
}

evtip::Tail parse_tail(const std::string& name) {
  if (name == "maxima") return evtip::Tail::Maxima;
  if (name == "minima") return evtip::Tail::Minima;
  throw evtip::Error(evtip::ErrorCode::InvalidConfig, "tail must be 'maxima' or 'minima'");
}

evtip::ModelSpec model_spec(const json& s, std::uint64_t seed) {
  const auto name = s.at("model").get<std::string>();
  if (name == "shear") {
    evtip::CoupledShearSpec m;
    m.mu = s.at("mu").get<double>();
    m.nu = s.at("nu").get<double>();
    m.noise_u = s.at("noise_u").get<double>();
    m.dt = s.at("dt").get<double>();
    m.laminar_threshold = s.at("laminar_threshold").get<double>();
    m.seed = seed;
    return m;
  }
  if (name == "doublewell") {
    evtip::DoubleWellSpec m;
    m.a = s.at("a").get<double>();
    m.lambda = s.at("lambda").get<double>();
    m.epsilon = s.at("epsilon").get<double>();
    m.dt = s.at("dt").get<double>();
    m.seed = seed;
    return m;
  }
  throw evtip::Error(evtip::ErrorCode::InvalidConfig, "model must be 'shear' or 'doublewell'");
}

evtip::Control parse_control(const std::string& name) {
  static const std::map<std::string, evtip::Control> names{{"noise_u", evtip::Control::NoiseU},
                                                           {"mu", evtip::Control::Mu},
                                                           {"nu", evtip::Control::Nu},
                                                           {"lambda", evtip::Control::Lambda},
                                                           {"epsilon", evtip::Control::Epsilon}};
  const auto it = names.find(name);
  if (it == names.end())
    throw evtip::Error(evtip::ErrorCode::InvalidConfig,
                       "control must be one of noise_u, mu, nu, lambda, epsilon");
  return it->second;
}

class Output {
 public:
  explicit Output(const json& section) : dir_(section.at("output_dir").get<std::string>()) {
    fs::create_directories(dir_);
  }

  std::ofstream open(const std::string& name) const {
    std::ofstream out(dir_ / name);
    if (!out)
      throw evtip::Error(evtip::ErrorCode::MissingFile, "cannot write " + (dir_ / name).string());
    return out;
  }

  void write_json(const std::string& name, const json& doc) const { open(name) << doc.dump(2) << '\n'; }

 private:
  fs::path dir_;
};

json run_fit(const json& s) {
  const auto path = s.at("input").get<std::string>();
  if (path.empty()) throw evtip::Error(evtip::ErrorCode::InvalidConfig, "fit needs an input CSV");
  const evtip::TimeSeries ts = evtip::ingest_csv(path, column_spec(s));
  const evtip::BlockSpec block{get_count(s, "bin_length_m"), parse_tail(s.at("tail").get<std::string>()),
                               s.at("burn_in_fraction").get<double>()};
  const std::vector<double> extremes =
      s.at("pre_blocked").get<bool>() ? ts.values : evtip::block_extremes(ts, block);

  const Output out(s);
  const evtip::GevFit fit = evtip::gev_fit_mle(extremes);
  auto ex = out.open("extremes.csv");
  evtip::write_extremes_csv(ex, extremes, s.at("pre_blocked").get<bool>() ? evtip::Tail::Maxima : block.tail);

  std::vector<std::size_t> grid;
  for (const auto& v : s.at("sensitivity_grid")) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 1)
      throw evtip::Error(evtip::ErrorCode::InvalidConfig, "sensitivity_grid holds positive integers");
    grid.push_back(v.get<std::size_t>());
  }
  if (!grid.empty()) {
    if (s.at("pre_blocked").get<bool>())
      throw evtip::Error(evtip::ErrorCode::InvalidConfig, "sensitivity_grid needs a raw series");
    auto sens = out.open("sensitivity.csv");
    evtip::write_sensitivity_csv(sens, evtip::bin_length_sensitivity(ts, block, grid));
  }

  json doc = evtip::to_json(fit);
  doc["input"] = path;
  out.write_json("fit.json", doc);
  return doc;
}

json run_scan_model(const json& s) {
  const std::vector<double> grid = get_reals(s, "grid");
  evtip::ScanOptions o;
  o.n_realizations = get_count(s, "n_realizations");
  o.n_bins = get_count(s, "n_bins");
  o.block = evtip::BlockSpec{get_count(s, "bin_length_m"), evtip::Tail::Minima,
                             s.at("burn_in_fraction").get<double>()};
  o.master_seed = get_seed(s, "master_seed");
  o.common_random_numbers = s.at("common_random_numbers").get<bool>();
  o.reset_on_escape = s.at("reset_on_escape").get<bool>();
  const auto points = evtip::run_scan(model_spec(s, o.master_seed),
                                      parse_control(s.at("control").get<std::string>()), grid, o);
  const Output out(s);
  auto csv = out.open("scan.csv");
  evtip::write_scan_csv(csv, points);
  const json threshold = evtip::threshold_json(points);
  out.write_json("threshold.json", threshold);
  return threshold;
}

json run_scan_data(const json& s) {
  std::vector<fs::path> paths;
  for (const auto& v : s.at("inputs")) {
    if (!v.is_string()) throw evtip::Error(evtip::ErrorCode::InvalidConfig, "inputs holds paths");
    const fs::path p = v.get<std::string>();
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p))
        if (e.path().extension() == ".csv") found.push_back(e.path());
      std::sort(found.begin(), found.end());
      paths.insert(paths.end(), found.begin(), found.end());
    } else {
      paths.push_back(p);
    }
  }
  if (paths.empty()) throw evtip::Error(evtip::ErrorCode::InvalidConfig, "scan-data needs inputs");
  std::vector<evtip::TimeSeries> series;
  for (const auto& p : paths) series.push_back(evtip::ingest_csv(p, column_spec(s)));

  const evtip::BlockSpec block{get_count(s, "bin_length_m"), evtip::Tail::Minima,
                               s.at("burn_in_fraction").get<double>()};
  evtip::ExternalOptions eo;
  eo.pooled = s.at("pooled").get<bool>();
  const auto analysis = evtip::analyze_external(series, block, eo);

  const Output out(s);
  auto csv = out.open("scan.csv");
  evtip::write_scan_csv(csv, analysis.points);
  const json threshold =
      analysis.threshold
          ? evtip::to_json(*analysis.threshold)
          : evtip::no_crossing_json(analysis.kappa_range->low, analysis.kappa_range->high,
                                    analysis.no_crossing_reason);
  out.write_json("threshold.json", threshold);
  return threshold;
}

json run_rescale(const json& s) {
  const std::vector<double> grid = get_reals(s, "lambda_grid");
  std::vector<evtip::RescalePair> pairs;
  for (const auto& p : s.at("pairs")) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() || p[0].get<std::int64_t>() < 1 ||
        !p[1].is_number())
      throw evtip::Error(evtip::ErrorCode::InvalidConfig, "pairs holds [bin_length_m, epsilon] entries");
    pairs.push_back({p[0].get<std::size_t>(), p[1].get<double>()});
  }
  if (pairs.empty()) throw evtip::Error(evtip::ErrorCode::InvalidConfig, "rescale needs pairs");
  evtip::RescaleOptions o;
  o.n_realizations = get_count(s, "n_realizations");
  o.n_bins = get_count(s, "n_bins");
  o.dt = s.at("dt").get<double>();
  o.burn_in_fraction = s.at("burn_in_fraction").get<double>();
  o.master_seed = get_seed(s, "master_seed");
  o.reset_on_escape = s.at("reset_on_escape").get<bool>();
  const auto curves = evtip::rescaled_scan(s.at("a").get<double>(), grid, pairs, o);

  const Output out(s);
  auto csv = out.open("rescale.csv");
  evtip::write_rescale_csv(csv, curves);
  json doc = json::array();
  for (const auto& c : curves) {
    json entry = {{"bin_length_m", c.pair.bin_length_m},
                  {"epsilon", c.pair.epsilon},
                  {"eps2_log_m", c.pair.epsilon * c.pair.epsilon *
                                     std::log(static_cast<double>(c.pair.bin_length_m))}};
    if (c.threshold) {
      entry["threshold"] = evtip::to_json(*c.threshold);
    } else if (!c.points.empty()) {
      entry["threshold"] = evtip::threshold_json(c.points);
    } else {
      entry["threshold"] = nullptr;
    }
    if (!c.error.empty()) entry["error"] = c.error;
    doc.push_back(entry);
  }
  out.write_json("thresholds.json", doc);
  return doc;
}

json run_simulate(const json& s) {
  const std::size_t n_steps = get_count(s, "n_steps");
  const evtip::ModelSpec model = model_spec(s, get_seed(s, "seed"));
  evtip::RunResult run;
  if (const auto* shear = std::get_if<evtip::CoupledShearSpec>(&model))
    run = evtip::simulate_shear(*shear, n_steps);
  else
    run = evtip::simulate_doublewell(std::get<evtip::DoubleWellSpec>(model), n_steps,
                                     s.at("record_escapes").get<bool>());

  const Output out(s);
  auto csv = out.open("series.csv");
  evtip::write_series_csv(csv, run.series);
  json doc = {{"n_steps", n_steps}, {"n_transitions", run.n_transitions}};
  if (!run.escape_times.empty()) {
    double sum = 0.0;
    for (double t : run.escape_times) sum += t;
    doc["mean_escape_time"] = sum / static_cast<double>(run.escape_times.size());
    auto esc = out.open("escapes.csv");
    esc << "escape,time\n";
    for (std::size_t i = 0; i < run.escape_times.size(); ++i)
      esc << i << ',' << evtip::format_real(run.escape_times[i]) << '\n';
  }
  out.write_json("run.json", doc);
  return doc;
}

json dispatch(const std::string& command, const json& section) {
  if (command == "fit") return run_fit(section);
  if (command == "scan-model") return run_scan_model(section);
  if (command == "scan-data") return run_scan_data(section);
  if (command == "rescale") return run_rescale(section);
  return run_simulate(section);
}

const std::map<std::string, std::string> kDescriptions{
    {"fit", "GEV fit of one series' block extremes"},
    {"scan-model", "kappa scan over a model control parameter"},
    {"scan-data", "kappa scan over a set of ingested series"},
    {"rescale", "double-well threshold curves for (bin length, noise) pairs"},
    {"simulate", "dump one model realization as a series CSV"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tipping-point detection from the GEV shape of block minima"};
  app.require_subcommand(1);

  struct Flags {
    std::string config;
    std::map<std::string, std::string> values;
  };
  std::map<std::string, Flags> flags;
  std::map<std::string, CLI::App*> subs;
  for (const auto& command : evtip::config_commands()) {
    auto* sub = app.add_subcommand(command, kDescriptions.at(command));
    subs[command] = sub;
    Flags& f = flags[command];
    sub->add_option("--config", f.config, "JSON config file");
    const json defaults = evtip::default_config_section(command);
    for (const auto& [key, value] : defaults.items())
      sub->add_option("--" + flag_name(key), f.values[key], "default: " + value.dump());
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error", {{"code", "usage"}, {"message", e.what()}}}}.dump() << '\n';
    return kExitUsage;
  }

  try {
    for (const auto& [command, sub] : subs) {
      if (!sub->parsed()) continue;
      const Flags& f = flags[command];
      const json file = f.config.empty() ? json() : evtip::load_config_file(f.config);
      json section = evtip::resolve_config_section(file, command);
      const json defaults = evtip::default_config_section(command);
      for (const auto& [key, text] : f.values) {
        if (sub->count("--" + flag_name(key)) == 0) continue;
        evtip::set_config_value(section, command, key, parse_flag_value(defaults[key], text));
      }
      Output(section).write_json("config.json", evtip::echo_config(command, section));
      std::cout << dispatch(command, section).dump(2) << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << evtip::error_json(e).dump() << '\n';
    return kExitFailure;
  }
  return 0;
}
