// capfirm command line: data generation, model fitting, planning, dispatch,
// annual simulation and storage sizing.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "capfirm/config.hpp"
#include "capfirm/controller.hpp"
#include "capfirm/csv.hpp"
#include "capfirm/dataset.hpp"
#include "capfirm/planner.hpp"
#include "capfirm/pvusa.hpp"
#include "capfirm/scenarios.hpp"
#include "capfirm/sim.hpp"
#include "capfirm/sizing.hpp"
#include "capfirm/timeutil.hpp"

using namespace capfirm;

namespace {

struct Globals {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<int> scenarios;
  std::optional<std::string> mode;
  std::optional<int> jobs;
  std::string data;
  bool dump = false;
  bool quiet = false;
};

AppConfig resolve_config(const Globals& g) {
  AppConfig cfg;
  if (!g.config_path.empty()) load_config_file(cfg, g.config_path);
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    set_config_value(cfg, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
  if (g.seed) cfg.seed = *g.seed;
  if (g.scenarios) cfg.scenario_count = *g.scenarios;
  if (g.mode) cfg.mode = parse_plan_mode(*g.mode);
  if (g.jobs) cfg.jobs = *g.jobs;
  // the synthetic plant follows the configured plant and run seed
  cfg.synthetic.pv_capacity = cfg.pv_capacity;
  cfg.synthetic.seed = cfg.seed;
  cfg.synthetic.dt_hours = cfg.dt_hours;
  cfg.validate();
  return cfg;
}

std::vector<DatasetDay> load_days(const Globals& g, const AppConfig& cfg) {
  if (g.data.empty()) return generate_synthetic_dataset(cfg.synthetic);
  LoadOptions lo{cfg.resample_minutes, cfg.max_missing_fraction};
  if (std::abs(cfg.resample_minutes / 60.0 - cfg.dt_hours) > 1e-12)
    throw ConfigError("data.resample_minutes must match grid.dt_hours");
  auto res = load_measurements(g.data, lo);
  if (!g.quiet)
    for (const auto& d : res.diagnostics) std::cerr << "capfirm: " << d << "\n";
  if (res.days.empty()) throw DataError("no usable day in " + g.data);
  for (auto& d : res.days) {
    d.measurements = d.measurements.cwiseMax(0.0).cwiseMin(cfg.pv_capacity);
    d.forecast = d.forecast.cwiseMax(0.0).cwiseMin(cfg.pv_capacity);
  }
  return res.days;
}

void add_scenarios(std::vector<DatasetDay>& days, const AppConfig& cfg) {
  CopulaFitOptions fo;
  fo.min_days = cfg.copula_min_days;
  const auto model = fit_copula(forecast_errors(days), cfg.pv_capacity, fo);
  attach_scenarios(days, model, cfg.scenario_count, cfg.seed, cfg.pv_capacity);
}

std::vector<DatasetDay> select_days(const std::vector<DatasetDay>& days, const std::string& day) {
  if (day.empty()) return days;
  std::vector<DatasetDay> out;
  for (const auto& d : days)
    if (format_date(d.date) == day) out.push_back(d);
  if (out.empty()) throw DataError("day " + day + " not present in the data set");
  return out;
}

// Writes to a file, or stdout for "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path == "-") return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw DataError("cannot write " + path);
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

// Summary lines move to stderr when a data file is being streamed to stdout.
std::ostream& report(std::initializer_list<std::string> outputs) {
  for (const auto& o : outputs)
    if (o == "-") return std::cerr;
  return std::cout;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  return in;
}

SimOptions sim_options(const AppConfig& cfg) {
  SimOptions so;
  so.jobs = cfg.jobs;
  so.withdraw_price = cfg.withdraw_price;
  so.solver = cfg.solver;
  return so;
}

void print_figures(std::ostream& os, const AnnualFigures& f) {
  os << "days_simulated=" << f.days_simulated << "\n"
     << "days_skipped=" << f.days_skipped << "\n"
     << "export_mwh=" << format_number(f.export_mwh) << "\n"
     << "withdraw_mwh=" << format_number(f.withdraw_mwh) << "\n"
     << "revenue_eur=" << format_number(f.revenue) << "\n"
     << "withdraw_cost_eur=" << format_number(f.withdraw_cost) << "\n"
     << "penalty_eur=" << format_number(f.penalty) << "\n"
     << "cycles=" << format_number(f.cycles) << "\n"
     << "valid=" << (f.valid ? "true" : "false") << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Capacity-firming planning, dispatch and storage sizing"};
  app.require_subcommand(0, 1);
  app.set_version_flag("--version", std::string("capfirm ") + CAPFIRM_VERSION);

  Globals g;
  app.add_option("--config", g.config_path, "Config file of section.key = value lines")
      ->check(CLI::ExistingFile);
  app.add_option("--set", g.overrides, "Override one config key (key=value), repeatable");
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--scenarios", g.scenarios, "Scenario count for stochastic planning")
      ->check(CLI::Range(1, 100000));
  app.add_option("--mode", g.mode, "Planning mode")->check(CLI::IsMember({"S", "D", "Dstar", "D*"}));
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::Range(1, 1024));
  app.add_option("--data", g.data, "Measurement CSV; the synthetic data set when omitted")
      ->check(CLI::ExistingFile);
  app.add_flag("--dump-config", g.dump, "Print the resolved configuration and exit");
  app.add_flag("-q,--quiet", g.quiet, "Suppress data diagnostics");

  std::string out, trace_out, ledger_out, engagement_in, scenarios_in, dump_qp, day;
  std::string argmax_out, heatmap_out;
  int gen_days = 0;

  auto* gen = app.add_subcommand("gen-data", "Write the synthetic measurement set");
  gen->add_option("--out", out, "Output CSV ('-' for stdout)")->required();
  gen->add_option("--days", gen_days, "Number of days")->check(CLI::PositiveNumber);

  auto* fit = app.add_subcommand("fit-pvusa", "Sliding-window PVUSA fit on measurements with weather");
  fit->add_option("--out", out, "Trajectory CSV ('-' for stdout)");

  auto* scen = app.add_subcommand("gen-scenarios", "Sample PV scenarios around each day's forecast");
  scen->add_option("--out", out, "Scenario CSV ('-' for stdout)")->required();
  scen->add_option("--day", day, "Only this day (YYYY-MM-DD)");

  auto* pl = app.add_subcommand("plan", "Compute the day-ahead engagement");
  pl->add_option("--out", out, "Engagement CSV ('-' for stdout)")->required();
  pl->add_option("--day", day, "Only this day (YYYY-MM-DD)");
  pl->add_option("--scenarios-file", scenarios_in, "Scenario CSV used instead of sampling")
      ->check(CLI::ExistingFile);
  pl->add_option("--trace-out", trace_out, "Planned dispatch of the first scenario");
  pl->add_option("--dump-qp", dump_qp, "Dump the planning problem of the first day");

  auto* ctl = app.add_subcommand("control", "Dispatch engagements against the measurements");
  ctl->add_option("--engagement", engagement_in, "Engagement CSV")->required()->check(CLI::ExistingFile);
  ctl->add_option("--out", out, "Trace CSV ('-' for stdout)")->required();

  auto* sim = app.add_subcommand("simulate", "Plan and dispatch every day, report annual figures");
  sim->add_option("--ledger-out", ledger_out, "Per-day ledger CSV");
  sim->add_option("--trace-out", trace_out, "Dispatch traces CSV");

  auto* sz = app.add_subcommand("size", "Grid search over selling price and storage ratio");
  sz->add_option("--out", out, "Sizing matrix CSV ('-' for stdout)")->required();
  sz->add_option("--argmax-out", argmax_out, "Best ratio per price CSV");
  sz->add_option("--heatmap", heatmap_out, "Long-format heatmap CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    AppConfig cfg = resolve_config(g);
    if (gen_days > 0) cfg.synthetic.days = gen_days;
    if (g.dump) {
      dump_config(std::cout, cfg);
      return 0;
    }
    if (app.get_subcommands().empty()) {
      std::cout << app.help();
      return 0;
    }
    const auto grid = cfg.grid();
    const auto policy = cfg.policy();
    const auto system = cfg.system();

    if (gen->parsed()) {
      auto days = generate_synthetic_dataset(cfg.synthetic);
      Output o(out);
      write_measurements(o.stream(), days, cfg.dt_hours);
    } else if (fit->parsed()) {
      if (g.data.empty()) throw DataError("fit-pvusa needs --data with irradiance_wm2 and temp_c");
      auto days = load_days(g, cfg);
      WeatherSeries ws;
      std::vector<double> p, irr, temp;
      for (const auto& d : days) {
        if (!d.weather) throw DataError("fit-pvusa: day " + format_date(d.date) + " has no weather");
        for (Eigen::Index k = 0; k < d.weather->size(); ++k) {
          ws.time.push_back(d.weather->time[k]);
          irr.push_back(d.weather->irradiance[k]);
          temp.push_back(d.weather->temperature[k]);
          p.push_back(d.measurements[k]);
        }
      }
      ws.irradiance = Eigen::Map<Vec>(irr.data(), static_cast<Eigen::Index>(irr.size()));
      ws.temperature = Eigen::Map<Vec>(temp.data(), static_cast<Eigen::Index>(temp.size()));
      const Vec power = Eigen::Map<Vec>(p.data(), static_cast<Eigen::Index>(p.size()));
      const auto res = fit_pvusa(power, ws, cfg.pvusa);
      if (!out.empty()) {
        Output o(out);
        CsvWriter w(o.stream(), {"window_end", "a", "b", "c", "status", "samples"});
        for (const auto& e : res.trajectory) {
          const char* st = e.status == PvusaWindowStatus::Fitted         ? "fitted"
                           : e.status == PvusaWindowStatus::RankDeficient ? "rank_deficient"
                                                                          : "skipped";
          w.row({format_timestamp(e.window_end), format_number(e.params.a), format_number(e.params.b),
                 format_number(e.params.c), st, std::to_string(e.samples)});
        }
      }
      if (!res.final) throw DataError("fit-pvusa: no window could be fitted");
      std::printf("a=%.9g\nb=%.9g\nc=%.9g\n", res.final->a, res.final->b, res.final->c);
    } else if (scen->parsed()) {
      auto days = load_days(g, cfg);
      add_scenarios(days, cfg);
      days = select_days(days, day);
      std::vector<std::pair<DayKey, ScenarioSet>> sets;
      for (const auto& d : days) sets.emplace_back(d.date, *d.scenarios);
      Output o(out);
      write_scenarios(o.stream(), sets);
    } else if (pl->parsed()) {
      auto days = load_days(g, cfg);
      std::map<DayKey, ScenarioSet> given;
      if (!scenarios_in.empty()) {
        auto in = open_input(scenarios_in);
        given = read_scenarios(in);
      } else if (cfg.mode == PlanMode::Stochastic) {
        add_scenarios(days, cfg);
      }
      days = select_days(days, day);
      std::vector<std::pair<DayKey, EngagementPlan>> plans;
      std::vector<std::pair<DayKey, DispatchTrace>> traces;
      double total = 0.0;
      bool dumped = false;
      for (const auto& d : days) {
        PlanningInstance inst{grid, policy, system, ScenarioSet{}, cfg.mode};
        if (auto it = given.find(d.date); it != given.end()) inst.scenarios = it->second;
        else if (cfg.mode == PlanMode::Stochastic) inst.scenarios = *d.scenarios;
        else if (cfg.mode == PlanMode::Deterministic) inst.scenarios = ScenarioSet::single(d.forecast);
        else inst.scenarios = ScenarioSet::single(d.measurements);
        if (!scenarios_in.empty() && inst.mode != PlanMode::Stochastic && inst.scenarios.count() != 1)
          throw DataError("modes D and Dstar take exactly one scenario per day");
        if (!dump_qp.empty() && !dumped) {
          Output o(dump_qp);
          write_problem_dump(o.stream(), build_planning_qp(inst).problem);
          dumped = true;
        }
        const auto res = plan(inst, cfg.solver);
        total += res.objective;
        plans.emplace_back(d.date, res.engagement);
        traces.emplace_back(d.date, res.traces.front());
        report({out, trace_out, dump_qp}) << format_date(d.date) << " objective_eur=" << format_number(res.objective)
                  << " status=" << to_string(res.status) << " nodes=" << res.branch.nodes << "\n";
      }
      Output o(out);
      write_engagements(o.stream(), plans);
      if (!trace_out.empty()) {
        Output t(trace_out);
        write_traces(t.stream(), traces);
      }
      if (days.size() > 1) report({out, trace_out, dump_qp}) << "total_objective_eur=" << format_number(total) << "\n";
    } else if (ctl->parsed()) {
      auto days = load_days(g, cfg);
      auto in = open_input(engagement_in);
      const auto plans = read_engagements(in);
      std::vector<std::pair<DayKey, DispatchTrace>> traces;
      for (const auto& [date, eng] : plans) {
        const DatasetDay* match = nullptr;
        for (const auto& d : days)
          if (d.date == date) match = &d;
        if (!match) throw DataError("engagement day " + format_date(date) + " not present in the data set");
        const auto res = oracle_control(eng, match->measurements, policy, system, grid, cfg.solver,
                                        cfg.withdraw_price);
        traces.emplace_back(date, res.trace);
        report({out}) << format_date(date) << " objective_eur=" << format_number(res.objective)
                  << " revenue_eur=" << format_number(res.economics.gross_revenue)
                  << " penalty_eur=" << format_number(res.economics.penalty) << "\n";
      }
      Output o(out);
      write_traces(o.stream(), traces);
    } else if (sim->parsed()) {
      auto days = load_days(g, cfg);
      if (cfg.mode == PlanMode::Stochastic) add_scenarios(days, cfg);
      auto so = sim_options(cfg);
      so.keep_traces = !trace_out.empty();
      const auto res = simulate(days, cfg.mode, policy, system, grid, so);
      if (!ledger_out.empty()) {
        Output o(ledger_out);
        write_ledger(o.stream(), res.ledger, cfg.mode);
      }
      if (!trace_out.empty()) {
        std::vector<std::pair<DayKey, DispatchTrace>> traces;
        for (const auto& r : res.ledger)
          if (!r.skipped) traces.emplace_back(r.date, r.trace);
        Output o(trace_out);
        write_traces(o.stream(), traces);
      }
      for (const auto& r : res.ledger)
        if (r.skipped && !g.quiet) std::cerr << "capfirm: skipped " << format_date(r.date) << ": " << r.reason << "\n";
      print_figures(report({ledger_out, trace_out}), res.figures);
      if (!res.figures.valid) throw SolverError("too many days skipped for a valid annual figure");
    } else if (sz->parsed()) {
      auto days = load_days(g, cfg);
      if (cfg.mode == PlanMode::Stochastic) add_scenarios(days, cfg);
      SizingSetup setup;
      setup.pv_capacity = cfg.pv_capacity;
      setup.grid = grid;
      setup.rules = cfg.rules;
      setup.storage = cfg.storage;
      setup.econ = cfg.econ;
      setup.mode = cfg.mode;
      setup.sim = sim_options(cfg);
      const auto res = grid_search(days, cfg.sizing_prices, cfg.sizing_ratios, setup);
      {
        Output o(out);
        write_sizing(o.stream(), res);
      }
      if (!argmax_out.empty()) {
        Output o(argmax_out);
        write_argmax(o.stream(), res);
      }
      if (!heatmap_out.empty()) {
        Output o(heatmap_out);
        write_heatmap(o.stream(), res);
      }
      for (const auto& a : res.argmax)
        report({out, argmax_out, heatmap_out}) << "price=" << format_number(a.price)
                  << " ratio_star=" << (a.ratio ? format_number(*a.ratio) : std::string("NA"))
                  << " net=" << format_number(a.net) << "\n";
    }
    return 0;
  } catch (const SolverError& e) {
    std::cerr << "capfirm: solver failure: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "capfirm: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "capfirm: " << e.what() << "\n";
    return 1;
  }
}
