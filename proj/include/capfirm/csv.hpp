#pragma once

#include <chrono>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "capfirm/sizing.hpp"

namespace capfirm {

/// Fixed notation with nine fractional digits; negative zero prints as zero.
std::string format_number(double value);

struct CsvRow {
  int line = 0;  // 1-based line in the source
  std::vector<std::string> fields;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<CsvRow> rows;

  /// Column index by name, -1 when absent.
  int column(const std::string& name) const;
  /// Column index by name; throws DataError when absent.
  int require(const std::string& name) const;
};

/// Comma-separated, first line is the header; every row must have as many fields.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

double parse_number(const std::string& text, int line, const std::string& column);

class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& fields);

 private:
  std::ostream& out_;
  std::size_t width_;
};

using DayKey = std::chrono::sys_days;

// Schemas: day,scenario_id,period,pv_kw
void write_scenarios(std::ostream& out, const std::vector<std::pair<DayKey, ScenarioSet>>& sets);
std::map<DayKey, ScenarioSet> read_scenarios(std::istream& in);

// day,period,engagement_kw
void write_engagements(std::ostream& out, const std::vector<std::pair<DayKey, EngagementPlan>>& plans);
std::map<DayKey, EngagementPlan> read_engagements(std::istream& in);

// day,period,production_kw,pv_kw,charge_kw,discharge_kw,soc_kwh
void write_traces(std::ostream& out, const std::vector<std::pair<DayKey, DispatchTrace>>& traces);

// day,mode,revenue_eur,penalty_eur,export_kwh,withdraw_kwh,discharge_kwh
void write_ledger(std::ostream& out, const std::vector<DayRecord>& ledger, PlanMode mode);

// price_eur_mwh,ratio,lcoe_eur_mwh,net_eur_mwh,export_mwh,withdraw_mwh,penalty_eur,revenue_eur,cycles,battery_count
void write_sizing(std::ostream& out, const SizingGrid& grid);
// price_eur_mwh,ratio_star,net_star
void write_argmax(std::ostream& out, const SizingGrid& grid);
// price_eur_mwh,ratio,metric,value
void write_heatmap(std::ostream& out, const SizingGrid& grid);

}  // namespace capfirm
