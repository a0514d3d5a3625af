// Command-line front end: single runs, Monte Carlo ensembles, split sweeps
// and accident-log analysis.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "trafficrisk/trafficrisk.hpp"

namespace fs = std::filesystem;
using namespace trafficrisk;
using ojson = nlohmann::ordered_json;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> runs;
  std::optional<std::size_t> threads;
  std::string out;
  std::string snapshots;
};

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto x = detail::parse_double(item);
    if (!x) throw ConfigError("bad number '" + item + "' in list");
    v.push_back(*x);
  }
  return v;
}

Experiment load(const Common& c) {
  Experiment ex = load_experiment(c.config);
  if (c.seed) ex.seed = *c.seed;
  if (c.runs) {
    if (*c.runs == 0) throw ConfigError("runs must be at least 1");
    ex.runs = *c.runs;
  }
  if (c.threads) ex.threads = std::max<std::size_t>(1, *c.threads);
  if (!c.out.empty()) ex.output.dir = c.out;
  if (!c.snapshots.empty()) ex.model.snapshot_times = parse_list(c.snapshots);
  ex.model.validate();
  return ex;
}

std::ofstream open_out(const fs::path& dir, const char* name) {
  fs::create_directories(dir);
  std::ofstream os(dir / name);
  if (!os) throw ConfigError("cannot write " + (dir / name).string());
  return os;
}

void run_simulate(const Common& c) {
  const Experiment ex = load(c);
  const RunResult r = simulate(ex.model, ex.seed, 0);
  const fs::path dir = ex.output.dir;
  {
    auto os = open_out(dir, "run.csv");
    write_run_header(os, ex.model.net);
    write_run_row(os, 0, r.report);
  }
  {
    auto os = open_out(dir, "accidents.csv");
    write_accident_log(os, ex.model.net, r.accidents);
  }
  if (!r.snapshots.empty()) {
    auto os = open_out(dir, "snapshots.csv");
    write_snapshots(os, ex.model.net, r.snapshots);
  }
  if (ex.model.cm_stride) {
    auto os = open_out(dir, "cm.csv");
    write_cm_traces(os, ex.model.net, r.report, ex.model.solver.dt);
  }
  std::cout << "ttt " << fmt(r.report.ttt) << ", accidents " << r.report.accidents.total << ", toes "
            << (r.report.toes ? fmt(*r.report.toes) : std::string("none")) << '\n';
}

void run_mc(const Common& c) {
  const Experiment ex = load(c);
  const auto mc = run_monte_carlo(ex.model, ex.seed, ex.runs, ex.output.toes_times, ex.threads);
  const fs::path dir = ex.output.dir;
  {
    auto os = open_out(dir, "runs.csv");
    write_run_header(os, ex.model.net);
    for (std::size_t i = 0; i < mc.reports.size(); ++i) write_run_row(os, i, mc.reports[i]);
  }
  {
    auto os = open_out(dir, "aggregate.json");
    os << aggregate_json(mc.summary, ex.model.net).dump(2) << '\n';
  }
  std::cout << "runs " << ex.runs << ", ttt " << fmt(mc.summary.ttt.mean) << " +- " << fmt(mc.summary.ttt.stderr_)
            << ", accidents " << fmt(mc.summary.accidents.mean) << '\n';
}

void run_sweep(const Common& c) {
  const Experiment ex = load(c);
  if (!ex.sweep) throw ConfigError("config has no sweep block");
  const auto cells =
      sweep(ex.model, ex.sweep->alpha1, ex.sweep->alpha2, ex.seed, ex.runs, ex.output.toes_times, ex.threads);
  auto os = open_out(ex.output.dir, "sweep.csv");
  write_sweep(os, cells);
  std::cout << cells.size() << " cells written\n";
}

EventLog read_log(const std::string& path, double hour) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  auto log = read_event_log(in, hour);
  log.sort();
  return log;
}

void run_fit(const std::string& input, double hour, double bin_minutes, const std::string& out) {
  const EventLog log = read_log(input, hour);
  const auto gaps = intermediate_times(log);
  const auto t = test_exponentiality(gaps);
  const double bw = bin_minutes / 60.0 * log.hour;
  const auto h = histogram(gaps, bw);
  ojson j;
  j["events"] = log.events.size();
  j["gaps"] = gaps.size();
  j["rate"] = t.rate;
  j["ks_statistic"] = t.statistic;
  j["ks_critical_1pct"] = t.critical;
  j["exponential_accepted"] = t.passed;
  j["bin_width"] = bw;
  ojson bins = ojson::array();
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    const double lo = static_cast<double>(i) * bw, hi = lo + bw;
    bins.push_back({{"lo", lo},
                    {"hi", hi},
                    {"count", h.counts[i]},
                    {"share", h.share(i)},
                    {"exponential_share", exponential_bin_probability(t.rate, lo, hi)}});
  }
  j["histogram"] = bins;
  auto os = open_out(out, "fit.json");
  os << j.dump(2) << '\n';
  std::cout << "rate " << fmt(t.rate) << ", KS " << fmt(t.statistic) << " vs " << fmt(t.critical) << '\n';
}

void run_analyze(const std::string& input, double hour, const std::string& filter, const std::string& out) {
  const EventLog log = read_log(input, hour);
  DayFilter f = DayFilter::all;
  if (filter == "weekday")
    f = DayFilter::weekday;
  else if (filter == "sunday")
    f = DayFilter::sunday;
  else if (filter != "all")
    throw ConfigError("filter must be all, weekday or sunday");
  const auto p = hourly_profile(log, f);
  auto os = open_out(out, "hourly.csv");
  os << "hour,share\n";
  for (std::size_t i = 0; i < 24; ++i) os << i << ',' << fmt(p.values[i]) << '\n';
}

void emit_error(const std::string& kind, const std::string& message) {
  std::cerr << ojson{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Traffic network simulation with self-exciting accidents"};
  app.require_subcommand(1);
  Common c;
  auto add_common = [&](CLI::App* sub, bool with_runs) {
    sub->add_option("--config", c.config, "experiment file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", c.seed, "override the seed");
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--snapshots", c.snapshots, "snapshot times t1,t2,...");
    if (with_runs) {
      sub->add_option("--runs", c.runs, "Monte Carlo runs");
      sub->add_option("--threads", c.threads, "worker threads");
    }
  };
  auto* sim = app.add_subcommand("simulate", "one run: run.csv, accidents.csv, snapshots.csv");
  add_common(sim, false);
  auto* mc = app.add_subcommand("mc", "Monte Carlo ensemble: runs.csv, aggregate.json");
  add_common(mc, true);
  auto* sw = app.add_subcommand("sweep", "split sweep: sweep.csv");
  add_common(sw, true);

  std::string input, out = "out", filter = "all";
  double hour = 1.0, bin_minutes = 2.0;
  auto* fit = app.add_subcommand("fit", "exponential fit of intermediate accident times: fit.json");
  fit->add_option("--input", input, "accident log CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--hour", hour, "time units per hour for numeric logs");
  fit->add_option("--bin-width", bin_minutes, "histogram bin width in minutes");
  fit->add_option("--out", out, "output directory");
  auto* an = app.add_subcommand("analyze", "hourly accident profile: hourly.csv");
  an->add_option("--input", input, "accident log CSV")->required()->check(CLI::ExistingFile);
  an->add_option("--hour", hour, "time units per hour for numeric logs");
  an->add_option("--filter", filter, "all, weekday or sunday");
  an->add_option("--out", out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    emit_error("usage", e.what());
    return 2;
  }
  try {
    if (*sim) run_simulate(c);
    if (*mc) run_mc(c);
    if (*sw) run_sweep(c);
    if (*fit) run_fit(input, hour, bin_minutes, out);
    if (*an) run_analyze(input, hour, filter, out);
  } catch (const Error& e) {
    emit_error(e.kind(), e.what());
    return 1;
  } catch (const std::exception& e) {
    emit_error("internal", e.what());
    return 1;
  }
  return 0;
}
