// lobrelax: simulate, detect, relax and meanfield subcommands.
//
// Exit codes: 0 success, 2 configuration or usage error, 3 data error,
// 4 numerical failure.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lobrelax/config.hpp"
#include "lobrelax/manifest.hpp"
#include "lobrelax/pipeline.hpp"
#include "lobrelax/trajectory_csv.hpp"

namespace fs = std::filesystem;
using namespace lobrelax;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::string format = "csv";
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "settings file ([section] key = value)");
  app->add_option("--seed", c.seed, "random seed, overrides flow.seed");
  app->add_option("--out", c.out, "output directory")->capture_default_str();
  app->add_option("--format", c.format, "output format")->check(CLI::IsMember({"csv"}))->capture_default_str();
}

Settings settings_for(const Common& c) {
  Settings s = load_settings(c.config);
  if (c.seed) s.flow.seed = *c.seed;
  s.validate();
  return s;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

std::string in_dir(const Common& c, const std::string& name) { return (fs::path(c.out) / name).string(); }

Manifest start_manifest(const std::string& command, const Common& c, const Settings& s) {
  fs::create_directories(c.out);
  Manifest m;
  m.command = command;
  m.seed = s.flow.seed;
  m.settings = s;
  if (!c.config.empty()) m.add_input(c.config);
  return m;
}

std::vector<std::string> split_list(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& item : items) {
    std::stringstream ss(item);
    std::string part;
    while (std::getline(ss, part, ','))
      if (!part.empty()) out.push_back(part);
  }
  return out;
}

void parse_fit_window(const std::string& text, RelaxConfig& r) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("--fit-window wants LO:HI");
  try {
    r.fit_lo = csv::parse_number<std::int64_t>(text.substr(0, colon), "fit window lower end");
    r.fit_hi = csv::parse_number<std::int64_t>(text.substr(colon + 1), "fit window upper end");
  } catch (const DataError&) {
    throw ConfigError("--fit-window wants integers LO:HI, got '" + text + "'");
  }
  if (r.fit_lo < 1 || r.fit_hi <= r.fit_lo) throw ConfigError("fit window must satisfy 1 <= LO < HI");
}

std::string instrument_name(const std::string& path) { return fs::path(path).stem().string(); }

std::vector<InstrumentData> load_instruments(const std::vector<std::string>& bars, const std::vector<std::string>& logs, const Settings& s,
                                             Manifest& m) {
  std::vector<InstrumentData> data;
  for (const auto& path : bars) {
    m.add_input(path);
    auto in = open_in(path);
    for (auto& series : events::read_minute_bars(in, s.session)) data.push_back(from_bars(std::move(series)));
  }
  for (const auto& path : logs) {
    m.add_input(path);
    auto in = open_in(path);
    data.push_back(from_replay(orderlog::replay(instrument_name(path), orderlog::read_log(in), s.session)));
  }
  return data;
}

// ---- simulate ----

void cmd_simulate(const Common& c) {
  const Settings s = settings_for(c);
  Manifest m = start_manifest("simulate", c, s);
  m.outputs = {in_dir(c, "trajectories.csv"), in_dir(c, "baseline.csv"), in_dir(c, "summary.csv")};
  m.write(in_dir(c, "manifest.json"));

  const auto result = run_ensemble(s.flow, s.run.runs, s.run.threads);
  {
    auto out = open_out(m.outputs[0]);
    write_trajectories(out, result.windows);
  }
  {
    auto out = open_out(m.outputs[1]);
    write_baseline(out, result.baseline);
  }
  auto out = open_out(m.outputs[2]);
  write_key_values(out, {{"runs", std::to_string(s.run.runs)},
                         {"windows", std::to_string(result.windows.size())},
                         {"skipped_shocks", std::to_string(result.skipped_shocks)},
                         {"baseline_steps", std::to_string(result.baseline.steps())},
                         {"mean_spread", csv::format(result.baseline.mean_spread())},
                         {"mean_volatility", csv::format(result.baseline.mean_volatility())},
                         {"mean_gap1", csv::format(result.baseline.mean_gap1())},
                         {"mean_orders", csv::format(result.baseline.mean_orders())}});
  std::cout << result.windows.size() << " shock windows written to " << m.outputs[0] << '\n';
}

// ---- detect ----

void cmd_detect(const Common& c, const std::vector<std::string>& bars, const std::vector<std::string>& logs) {
  const Settings s = settings_for(c);
  if (bars.empty() && logs.empty()) throw ConfigError("detect needs --bars or --order-log input");
  Manifest m = start_manifest("detect", c, s);
  const auto data = load_instruments(bars, logs, s, m);
  m.outputs = {in_dir(c, "events.csv")};
  m.write(in_dir(c, "manifest.json"));
  const auto evs = detect_all(data, s.detect);
  auto out = open_out(m.outputs[0]);
  events::write_catalog(out, evs);
  std::cout << evs.size() << " events written to " << m.outputs[0] << '\n';
}

// ---- relax ----

struct RelaxInputs {
  std::string trajectories, baseline, catalog, fit_window, direction = "all";
  std::vector<std::string> bars, logs, observables;
};

void write_results(const Common& c, Manifest& m, const std::vector<CurveResult>& results) {
  for (const auto& r : results) {
    m.outputs.push_back(in_dir(c, "curve_" + r.curve.label + ".csv"));
    m.outputs.push_back(in_dir(c, "plot_" + r.curve.label + ".csv"));
  }
  m.outputs.push_back(in_dir(c, "fits.csv"));
  m.write(in_dir(c, "manifest.json"));
  std::size_t k = 0;
  for (const auto& r : results) {
    auto curve = open_out(m.outputs[k++]);
    write_curve(curve, r);
    auto plot = open_out(m.outputs[k++]);
    write_plot_data(plot, r);
  }
  auto fits = open_out(m.outputs.back());
  write_fit_report(fits, results);
  for (const auto& r : results)
    std::cout << r.curve.label << ": beta = " << csv::format(r.fit.beta) << " +- " << csv::format(r.fit.stderr_beta) << '\n';
}

void cmd_relax(const Common& c, const RelaxInputs& in) {
  Settings s = settings_for(c);
  if (!in.fit_window.empty()) parse_fit_window(in.fit_window, s.relax);
  const bool model = !in.trajectories.empty();
  const bool empirical = !in.bars.empty() || !in.logs.empty();
  if (model == empirical) throw ConfigError("relax needs either --trajectories with --baseline, or --bars/--order-log input");

  auto names = split_list(in.observables);
  Manifest m = start_manifest("relax", c, s);
  if (model) {
    if (in.baseline.empty()) throw ConfigError("--trajectories needs --baseline");
    if (names.empty()) names = default_model_observables;
    for (const auto& n : names)
      if (!parse_model_observable(n)) throw UnknownObservable(n);
    m.add_input(in.trajectories);
    m.add_input(in.baseline);
    auto tin = open_in(in.trajectories);
    const auto windows = read_trajectories(tin);
    auto bin = open_in(in.baseline);
    const auto baseline = read_baseline(bin);
    if (windows.empty()) throw relax::EmptyEnsemble();
    write_results(c, m, model_curves(windows, baseline, names, s.relax));
    return;
  }

  if (names.empty()) names = in.logs.empty() ? std::vector<std::string>{"volatility"} : default_empirical_observables;
  for (const auto& n : names)
    if (!orderlog::parse_observable(n)) throw UnknownObservable(n);
  const auto data = load_instruments(in.bars, in.logs, s, m);
  std::vector<events::DetectedEvent> evs;
  if (!in.catalog.empty()) {
    m.add_input(in.catalog);
    std::vector<events::MinuteSeries> series;
    for (const auto& d : data) series.push_back(d.prices);
    auto cin = open_in(in.catalog);
    evs = events::read_catalog(cin, series);
  } else {
    evs = detect_all(data, s.detect);
  }
  if (in.direction != "all") {
    const auto keep = in.direction == "up" ? events::Direction::up : events::Direction::down;
    std::erase_if(evs, [&](const events::DetectedEvent& e) { return e.direction != keep; });
  }
  write_results(c, m, empirical_curves(evs, data, names, s.align, s.relax));
}

// ---- meanfield ----

void cmd_meanfield(const Common& c, const std::string& baseline_path, const std::string& curve_path) {
  const Settings s = settings_for(c);
  Manifest m = start_manifest("meanfield", c, s);
  double sigma = s.meanfield.sigma;
  if (!baseline_path.empty()) {
    m.add_input(baseline_path);
    auto in = open_in(baseline_path);
    if (sigma == 0) sigma = read_baseline(in).mean_spread();
  }
  if (!curve_path.empty()) m.add_input(curve_path);
  m.outputs = {in_dir(c, "meanfield_trajectory.csv"), in_dir(c, "meanfield_summary.csv")};
  if (!curve_path.empty()) m.outputs.push_back(in_dir(c, "comparison.csv"));

  const double D = static_cast<double>(s.flow.depth);
  meanfield::Trajectory tr;
  std::vector<std::pair<std::string, std::string>> summary;
  if (s.flow.p_mo == 0) {
    double s0 = s.meanfield.spread0;
    if (s0 == 0) s0 = sigma > 0 ? sigma + static_cast<double>(s.flow.shock_depth) : static_cast<double>(s.flow.shock_depth);
    m.write(in_dir(c, "manifest.json"));
    if (s.flow.p_lo != 0.5) throw ConfigError("the limit recursion assumes p_lo = 0.5");
    tr.spread = meanfield::limit_recursion(D, s0, s.meanfield.steps);
    const std::size_t n = s.meanfield.steps;
    const std::size_t lo = std::max<std::size_t>(1, n / 10);
    const double slope = -(std::log(tr.spread[n]) - std::log(tr.spread[lo])) / (std::log(static_cast<double>(n)) - std::log(static_cast<double>(lo)));
    summary = {{"case", "limit"},
               {"spread0", csv::format(s0)},
               {"steps", std::to_string(n)},
               {"t_times_spread_over_16D", csv::format(static_cast<double>(n) * tr.spread[n] / (16.0 * D))},
               {"local_exponent", csv::format(slope)},
               {"local_exponent_from", std::to_string(lo)}};
  } else {
    if (!(sigma > 0)) throw ConfigError("meanfield needs meanfield.sigma or --baseline");
    const auto p = meanfield_params(s, sigma);
    m.write(in_dir(c, "manifest.json"));
    tr = meanfield::general_recursion(p, s.meanfield.gap0);
    const double gamma1 = meanfield::stationary_gap(sigma, p.p_lo, p.p_mo, D);
    summary = {{"case", "general"},
               {"sigma", csv::format(sigma)},
               {"spread0", csv::format(p.spread0)},
               {"gamma1", csv::format(gamma1)},
               {"gap_ratio", csv::format(p.p_lo == 0.5 ? meanfield::gap_ratio(sigma, gamma1, p.p_lo, p.p_mo, D)
                                                       : meanfield::gap_ratio_general(sigma, gamma1, p.p_lo, p.p_mo, D))},
               {"steps", std::to_string(p.steps)}};
  }
  {
    auto out = open_out(m.outputs[0]);
    write_meanfield_trajectory(out, tr);
  }
  if (!curve_path.empty()) {
    if (!(sigma > 0)) throw ConfigError("comparison needs meanfield.sigma or --baseline");
    auto in = open_in(curve_path);
    const auto sim = read_curve_excess(in, s.meanfield.steps);
    const auto cmp = compare_excess(tr.spread, sigma, sim, s.meanfield.horizon, s.meanfield.far_step);
    summary.emplace_back("horizon", std::to_string(cmp.near.horizon));
    summary.emplace_back("max_error_over_horizon", csv::format(cmp.near.max_error));
    summary.emplace_back("far_step", std::to_string(s.meanfield.far_step));
    summary.emplace_back("error_at_far_step", csv::format(cmp.error_far));
    auto out = open_out(m.outputs[2]);
    write_comparison(out, cmp);
  }
  auto out = open_out(m.outputs[1]);
  write_key_values(out, summary);
  for (const auto& [k, v] : summary) std::cout << k << " = " << v << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Order-book simulation and relaxation analysis"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tool_version));

  Common common;
  auto* sim = app.add_subcommand("simulate", "run the zero-intelligence flow with shocks");
  add_common(sim, common);

  std::vector<std::string> bars, logs;
  auto* det = app.add_subcommand("detect", "detect large price changes in minute bars or order logs");
  add_common(det, common);
  det->add_option("--bars", bars, "minute-bar CSV (instrument,date,minute,price)");
  det->add_option("--order-log", logs, "order-log CSV, one instrument per file named after it");

  RelaxInputs rin;
  auto* rel = app.add_subcommand("relax", "event-aligned relaxation curves and power-law fits");
  add_common(rel, common);
  rel->add_option("--trajectories", rin.trajectories, "trajectory CSV from simulate");
  rel->add_option("--baseline", rin.baseline, "baseline CSV from simulate");
  rel->add_option("--bars", rin.bars, "minute-bar CSV");
  rel->add_option("--order-log", rin.logs, "order-log CSV, one instrument per file");
  rel->add_option("--catalog", rin.catalog, "event catalog CSV; detected from the inputs when omitted");
  rel->add_option("--observable", rin.observables, "observable names, comma separated");
  rel->add_option("--fit-window", rin.fit_window, "fit window LO:HI in aligned units");
  rel->add_option("--direction", rin.direction, "events to keep")->check(CLI::IsMember({"all", "up", "down"}))->capture_default_str();

  std::string mf_baseline, mf_curve;
  auto* mf = app.add_subcommand("meanfield", "mean-field spread recursion and comparison");
  add_common(mf, common);
  mf->add_option("--baseline", mf_baseline, "baseline CSV from simulate; supplies sigma");
  mf->add_option("--curve", mf_curve, "simulated spread curve CSV from relax");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sim) cmd_simulate(common);
    else if (*det) cmd_detect(common, bars, logs);
    else if (*rel) cmd_relax(common, rin);
    else if (*mf) cmd_meanfield(common, mf_baseline, mf_curve);
  } catch (const ConfigError& e) {
    std::cerr << "lobrelax: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "lobrelax: " << e.what() << '\n';
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "lobrelax: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    // book errors and filesystem failures come from malformed inputs or paths
    std::cerr << "lobrelax: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
