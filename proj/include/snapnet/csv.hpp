#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "snapnet/gait.hpp"
#include "snapnet/simulate.hpp"

namespace snapnet::csv {

/// Shortest round-trip decimal form.
std::string number(double v);

void write_trace(std::ostream& os, const Trace& trace);
void write_events(std::ostream& os, const std::vector<SnapEvent>& events);
void write_tips(std::ostream& os, const std::vector<TipPath>& paths);

struct SweepRow {
  double f_hz = 0;
  double speed = 0;   // m/s
  double stride = 0;  // m
  Regime regime = Regime::kWalking;
  double bl_per_s = 0;
};

void write_sweep(std::ostream& os, const std::vector<SweepRow>& rows);

/// Comma-separated table with a header row.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Table read_table(std::istream& is);

/// Trace columns recovered from an exported trace table. Throws kSchema
/// naming the first column that does not fit the export layout.
struct TraceColumns {
  std::vector<double> t;
  std::vector<std::string> nodes;
  std::vector<std::vector<double>> pressure;  // Pa
  std::vector<std::string> lobe_names;        // "<element>_<lobe>"
  std::vector<std::vector<double>> volume;    // m^3
  std::vector<std::vector<int>> state;
};

TraceColumns parse_trace(const Table& table);

/// Events rebuilt from the state columns of an exported trace, with the
/// pressure read at the node each element sits on.
std::vector<SnapEvent> events_from_columns(const TraceColumns& cols,
                                           const std::map<std::string, std::string>& element_nodes);

}  // namespace snapnet::csv
