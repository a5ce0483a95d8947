#include "capfirm/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace capfirm {

std::string format_number(double value) {
  if (std::isnan(value)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9f", value);
  std::string s(buf);
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return int(i);
  return -1;
}

int CsvTable::require(const std::string& name) const {
  const int c = column(name);
  if (c < 0) throw DataError("csv: missing column '" + name + "'");
  return c;
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t");
    const auto e = field.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  int lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size())
      throw DataError("csv line " + std::to_string(lineno) + ": expected " +
                      std::to_string(t.header.size()) + " fields, got " + std::to_string(fields.size()));
    t.rows.push_back({lineno, std::move(fields)});
  }
  if (!have_header) throw DataError("csv: empty input");
  return t;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  try {
    return read_csv(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

double parse_number(const std::string& text, int line, const std::string& column) {
  double v = 0.0;
  const char* b = text.data();
  const char* e = b + text.size();
  if (!text.empty() && *b == '+') ++b;
  const auto r = std::from_chars(b, e, v);
  if (text.empty() || r.ec != std::errc() || r.ptr != e)
    throw DataError("csv line " + std::to_string(line) + ": column '" + column +
                    "' is not a number: '" + text + "'");
  return v;
}

CsvWriter::CsvWriter(std::ostream& out, const std::vector<std::string>& header)
    : out_(out), width_(header.size()) {
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != width_) throw ShapeError("csv writer: row width differs from header");
  for (std::size_t i = 0; i < fields.size(); ++i) out_ << (i ? "," : "") << fields[i];
  out_ << '\n';
}

namespace {

DayKey parse_day(const std::string& text, int line) {
  try {
    return day_of(parse_timestamp(text + "T00:00:00"));
  } catch (const Error&) {
    throw DataError("csv line " + std::to_string(line) + ": bad day '" + text + "'");
  }
}

int parse_index(const std::string& text, int line, const std::string& column) {
  const double v = parse_number(text, line, column);
  if (v < 0 || v != std::floor(v) || v > 1e7)
    throw DataError("csv line " + std::to_string(line) + ": column '" + column +
                    "' must be a nonnegative integer");
  return int(v);
}

}  // namespace

void write_scenarios(std::ostream& out, const std::vector<std::pair<DayKey, ScenarioSet>>& sets) {
  CsvWriter w(out, {"day", "scenario_id", "period", "pv_kw"});
  for (const auto& [day, set] : sets)
    for (int s = 0; s < set.count(); ++s)
      for (int t = 0; t < set.periods(); ++t)
        w.row({format_date(day), std::to_string(s), std::to_string(t), format_number(set.values(s, t))});
}

std::map<DayKey, ScenarioSet> read_scenarios(std::istream& in) {
  const CsvTable t = read_csv(in);
  const int cd = t.require("day"), cs = t.require("scenario_id"), cp = t.require("period"),
            cv = t.require("pv_kw");
  std::map<DayKey, std::map<int, std::map<int, double>>> raw;
  for (const auto& r : t.rows)
    raw[parse_day(r.fields[cd], r.line)][parse_index(r.fields[cs], r.line, "scenario_id")]
       [parse_index(r.fields[cp], r.line, "period")] = parse_number(r.fields[cv], r.line, "pv_kw");
  std::map<DayKey, ScenarioSet> out;
  for (const auto& [day, scen] : raw) {
    const int S = int(scen.size());
    const int T = int(scen.begin()->second.size());
    ScenarioSet set;
    set.values.resize(S, T);
    int s = 0;
    for (const auto& [id, periods] : scen) {
      if (id != s || int(periods.size()) != T)
        throw DataError("scenarios for " + format_date(day) + " are not a complete grid");
      int k = 0;
      for (const auto& [p, v] : periods) {
        if (p != k) throw DataError("scenarios for " + format_date(day) + " skip a period");
        set.values(s, k++) = v;
      }
      ++s;
    }
    set.weights = Vec::Constant(S, 1.0 / S);
    out.emplace(day, std::move(set));
  }
  return out;
}

void write_engagements(std::ostream& out, const std::vector<std::pair<DayKey, EngagementPlan>>& plans) {
  CsvWriter w(out, {"day", "period", "engagement_kw"});
  for (const auto& [day, plan] : plans)
    for (Eigen::Index t = 0; t < plan.values.size(); ++t)
      w.row({format_date(day), std::to_string(t), format_number(plan.values(t))});
}

std::map<DayKey, EngagementPlan> read_engagements(std::istream& in) {
  const CsvTable t = read_csv(in);
  const int cd = t.require("day"), cp = t.require("period"), cv = t.require("engagement_kw");
  std::map<DayKey, std::map<int, double>> raw;
  for (const auto& r : t.rows)
    raw[parse_day(r.fields[cd], r.line)][parse_index(r.fields[cp], r.line, "period")] =
        parse_number(r.fields[cv], r.line, "engagement_kw");
  std::map<DayKey, EngagementPlan> out;
  for (const auto& [day, periods] : raw) {
    EngagementPlan plan;
    plan.values.resize(Eigen::Index(periods.size()));
    int k = 0;
    for (const auto& [p, v] : periods) {
      if (p != k) throw DataError("engagement for " + format_date(day) + " skips a period");
      plan.values(k++) = v;
    }
    out.emplace(day, std::move(plan));
  }
  return out;
}

void write_traces(std::ostream& out, const std::vector<std::pair<DayKey, DispatchTrace>>& traces) {
  CsvWriter w(out, {"day", "period", "production_kw", "pv_kw", "charge_kw", "discharge_kw", "soc_kwh"});
  for (const auto& [day, tr] : traces)
    for (int t = 0; t < tr.periods(); ++t)
      w.row({format_date(day), std::to_string(t), format_number(tr.production(t)),
             format_number(tr.pv_used(t)), format_number(tr.charge(t)), format_number(tr.discharge(t)),
             format_number(tr.soc(t))});
}

void write_ledger(std::ostream& out, const std::vector<DayRecord>& ledger, PlanMode mode) {
  CsvWriter w(out, {"day", "mode", "revenue_eur", "penalty_eur", "export_kwh", "withdraw_kwh",
                    "discharge_kwh"});
  const double na = std::nan("");
  for (const auto& r : ledger) {
    const auto& e = r.economics;
    w.row({format_date(r.date), to_string(mode), format_number(r.skipped ? na : e.gross_revenue),
           format_number(r.skipped ? na : e.penalty), format_number(r.skipped ? na : e.export_kwh),
           format_number(r.skipped ? na : e.withdraw_kwh),
           format_number(r.skipped ? na : e.discharge_kwh)});
  }
}

void write_sizing(std::ostream& out, const SizingGrid& g) {
  CsvWriter w(out, {"price_eur_mwh", "ratio", "lcoe_eur_mwh", "net_eur_mwh", "export_mwh",
                    "withdraw_mwh", "penalty_eur", "revenue_eur", "cycles", "battery_count"});
  const double na = std::nan("");
  for (const auto& c : g.cells) {
    const auto& f = c.figures;
    w.row({format_number(c.price), format_number(c.ratio), format_number(c.valid ? c.lcoe : na),
           format_number(c.valid ? c.net : na), format_number(f.export_mwh),
           format_number(f.withdraw_mwh), format_number(f.penalty), format_number(f.revenue),
           format_number(f.cycles), std::to_string(c.battery_count)});
  }
}

void write_argmax(std::ostream& out, const SizingGrid& g) {
  CsvWriter w(out, {"price_eur_mwh", "ratio_star", "net_star"});
  for (const auto& a : g.argmax)
    w.row({format_number(a.price), a.ratio ? format_number(*a.ratio) : "NA",
           a.ratio ? format_number(a.net) : "NA"});
}

void write_heatmap(std::ostream& out, const SizingGrid& g) {
  CsvWriter w(out, {"price_eur_mwh", "ratio", "metric", "value"});
  const double na = std::nan("");
  for (const auto& c : g.cells) {
    const auto& f = c.figures;
    const std::pair<const char*, double> metrics[] = {
        {"net_eur_mwh", c.valid ? c.net : na},
        {"lcoe_eur_mwh", c.valid ? c.lcoe : na},
        {"revenue_per_export_eur_mwh", f.export_mwh > 0 ? f.revenue / f.export_mwh : na},
        {"export_mwh", f.export_mwh},
        {"withdraw_mwh", f.withdraw_mwh},
        {"penalty_eur", f.penalty},
        {"cycles", f.cycles},
        {"battery_count", double(c.battery_count)}};
    for (const auto& [name, value] : metrics)
      w.row({format_number(c.price), format_number(c.ratio), name, format_number(value)});
  }
}

}  // namespace capfirm
