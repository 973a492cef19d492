#include "snapnet/csv.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

namespace snapnet::csv {

std::string number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

bool starts_with(const std::string& s, const std::string& prefix) {
  return s.size() >= prefix.size() && s.compare(0, prefix.size(), prefix) == 0;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string middle(const std::string& s, std::size_t head, std::size_t tail) {
  return s.substr(head, s.size() - head - tail);
}

double parse_number(const std::string& cell, const std::string& column, std::size_t row) {
  double v = 0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
    throw Error(Errc::kSchema, "column '" + column + "' row " + std::to_string(row + 1) +
                                   ": not a number '" + cell + "'");
  }
  return v;
}

}  // namespace

void write_trace(std::ostream& os, const Trace& trace) {
  os << "t_s";
  for (const auto& n : trace.node_names) os << ",p_" << n << "_mbar";
  for (const auto& l : trace.lobes) os << ",v_" << l.element << '_' << to_string(l.lobe) << "_uL";
  for (const auto& l : trace.lobes) os << ",state_" << l.element << '_' << to_string(l.lobe);
  os << '\n';
  for (std::size_t k = 0; k < trace.samples(); ++k) {
    os << number(trace.t[k]);
    for (const auto& p : trace.pressure) os << ',' << number(units::to_mbar(p[k]));
    for (const auto& l : trace.lobes) os << ',' << number(units::to_ul(l.volume[k]));
    for (const auto& l : trace.lobes) os << ',' << int(l.snapped[k]);
    os << '\n';
  }
}

void write_events(std::ostream& os, const std::vector<SnapEvent>& events) {
  os << "t_s,element,lobe,kind,p_mbar\n";
  for (const auto& e : events) {
    os << number(e.t) << ',' << e.element << ',' << to_string(e.lobe) << ',' << to_string(e.kind)
       << ',' << number(units::to_mbar(e.pressure)) << '\n';
  }
}

void write_tips(std::ostream& os, const std::vector<TipPath>& paths) {
  os << "t_s,leg,x_mm,y_mm\n";
  for (const auto& p : paths) {
    for (std::size_t k = 0; k < p.t.size(); ++k) {
      os << number(p.t[k]) << ',' << p.leg << ',' << number(units::to_mm(p.x[k])) << ','
         << number(units::to_mm(p.y[k])) << '\n';
    }
  }
}

void write_sweep(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "f_hz,speed_mm_s,stride_mm,regime,bl_per_s\n";
  for (const auto& r : rows) {
    os << number(r.f_hz) << ',' << number(units::to_mm(r.speed)) << ',' << number(units::to_mm(r.stride))
       << ',' << to_string(r.regime) << ',' << number(r.bl_per_s) << '\n';
  }
}

Table read_table(std::istream& is) {
  Table t;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!s.empty() && s.back() == ',') cells.emplace_back();
    return cells;
  };
  bool first = true;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      t.header = split(line);
      first = false;
    } else {
      auto row = split(line);
      if (row.size() != t.header.size()) {
        throw Error(Errc::kSchema, "row " + std::to_string(t.rows.size() + 1) + " has " +
                                       std::to_string(row.size()) + " cells, header has " +
                                       std::to_string(t.header.size()));
      }
      t.rows.push_back(std::move(row));
    }
  }
  if (first) throw Error(Errc::kSchema, "empty table");
  return t;
}

TraceColumns parse_trace(const Table& table) {
  const auto& h = table.header;
  if (h.empty() || h[0] != "t_s") {
    throw Error(Errc::kSchema, "first column must be 't_s', found '" + (h.empty() ? "" : h[0]) + "'");
  }
  TraceColumns c;
  std::size_t i = 1;
  for (; i < h.size() && starts_with(h[i], "p_"); ++i) {
    if (!ends_with(h[i], "_mbar") || h[i].size() <= 7) throw Error(Errc::kSchema, "bad pressure column '" + h[i] + "'");
    c.nodes.push_back(middle(h[i], 2, 5));
  }
  for (; i < h.size() && starts_with(h[i], "v_"); ++i) {
    if (!ends_with(h[i], "_uL") || h[i].size() <= 5) throw Error(Errc::kSchema, "bad volume column '" + h[i] + "'");
    c.lobe_names.push_back(middle(h[i], 2, 3));
  }
  const std::size_t first_state = i;
  for (; i < h.size(); ++i) {
    const std::size_t k = i - first_state;
    if (k >= c.lobe_names.size() || h[i] != "state_" + c.lobe_names[k]) {
      throw Error(Errc::kSchema, "unexpected column '" + h[i] + "'");
    }
  }
  if (i - first_state != c.lobe_names.size()) {
    throw Error(Errc::kSchema, "missing column 'state_" + c.lobe_names[i - first_state] + "'");
  }
  if (c.nodes.empty()) throw Error(Errc::kSchema, "no pressure columns after 't_s'");

  c.pressure.assign(c.nodes.size(), {});
  c.volume.assign(c.lobe_names.size(), {});
  c.state.assign(c.lobe_names.size(), {});
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    c.t.push_back(parse_number(row[0], h[0], r));
    std::size_t col = 1;
    for (auto& p : c.pressure) p.push_back(units::mbar(parse_number(row[col], h[col], r))), ++col;
    for (auto& v : c.volume) v.push_back(units::ul(parse_number(row[col], h[col], r))), ++col;
    for (auto& s : c.state) {
      if (row[col] != "0" && row[col] != "1") {
        throw Error(Errc::kSchema, "column '" + h[col] + "' row " + std::to_string(r + 1) + ": expected 0 or 1");
      }
      s.push_back(row[col] == "1"), ++col;
    }
  }
  return c;
}

std::vector<SnapEvent> events_from_columns(const TraceColumns& cols,
                                           const std::map<std::string, std::string>& element_nodes) {
  std::vector<SnapEvent> out;
  for (std::size_t k = 1; k < cols.t.size(); ++k) {
    for (std::size_t j = 0; j < cols.lobe_names.size(); ++j) {
      if (cols.state[j][k] == cols.state[j][k - 1]) continue;
      const auto& name = cols.lobe_names[j];
      const auto cut = name.rfind('_');
      SnapEvent ev;
      ev.t = cols.t[k];
      ev.element = name.substr(0, cut);
      ev.lobe = name.substr(cut + 1) == "weak" ? Lobe::kWeak : Lobe::kStrong;
      ev.kind = cols.state[j][k] ? SnapKind::kSnapThrough : SnapKind::kSnapBack;
      auto node = element_nodes.find(ev.element);
      for (std::size_t n = 0; node != element_nodes.end() && n < cols.nodes.size(); ++n) {
        if (cols.nodes[n] == node->second) ev.pressure = cols.pressure[n][k];
      }
      out.push_back(std::move(ev));
    }
  }
  return out;
}

}  // namespace snapnet::csv
