#include "leafrust/report.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <sstream>

#include "leafrust/error.hpp"

namespace leafrust {

double median(std::vector<double> values) {
  if (values.empty()) throw ValidationError("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

std::string display_label(SweepAxis axis, const std::string& sweep_label) {
  if (axis == SweepAxis::Resolutions) return sweep_label + "x" + sweep_label;
  if (const auto m = parse_method(sweep_label)) return std::string(method_title(*m));
  return sweep_label;
}

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else if (c == '\n' || c == '\r') out += ' ';
    else out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(std::move(cur));
  return cells;
}

double parse_number(const std::string& cell) {
  double v = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
    throw FormatError("bad numeric CSV cell '" + cell + "'");
  }
  return v;
}

}  // namespace

std::vector<TableRow> summarize(const ExperimentResult& result) {
  std::vector<TableRow> rows;
  std::size_t i = 0;
  while (i < result.rows.size()) {
    const std::size_t index = result.rows[i].sweep_index;
    std::vector<double> p, r, f, d;
    std::string label = result.rows[i].sweep_label;
    for (; i < result.rows.size() && result.rows[i].sweep_index == index; ++i) {
      const auto& m = result.rows[i].metrics;
      if (!m) continue;
      p.push_back(m->precision);
      r.push_back(m->recall);
      f.push_back(m->f1);
      d.push_back(m->dice);
    }
    if (p.empty()) continue;
    rows.push_back({display_label(result.axis, label), median(p), median(r), median(f), median(d)});
  }
  return rows;
}

std::string render_table(const std::vector<TableRow>& rows, SweepAxis axis, TableFormat format) {
  std::string out;
  if (format == TableFormat::Csv) {
    out = "label,precision,recall,f1,dice\n";
    for (const auto& row : rows) {
      out += csv_escape(row.label) + "," + fixed3(row.precision) + "," + fixed3(row.recall) + "," +
             fixed3(row.f1) + "," + fixed3(row.dice) + "\n";
    }
    return out;
  }
  out = std::string(axis == SweepAxis::Resolutions ? "Image Resolution" : "Preprocessing Method") +
        "  Precision  Recall  F1  Dice\n";
  for (const auto& row : rows) {
    out += row.label + "  " + fixed3(row.precision) + "  " + fixed3(row.recall) + "  " +
           fixed3(row.f1) + "  " + fixed3(row.dice) + "\n";
  }
  return out;
}

std::string render_table(const ExperimentResult& result, TableFormat format) {
  return render_table(summarize(result), result.axis, format);
}

std::vector<TableRow> parse_table_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::vector<TableRow> rows;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      if (line != "label,precision,recall,f1,dice") throw FormatError("unexpected table CSV header: " + line);
      header = false;
      continue;
    }
    const auto cells = split_csv_line(line);
    if (cells.size() != 5) throw FormatError("table CSV row needs 5 cells: " + line);
    rows.push_back({cells[0], parse_number(cells[1]), parse_number(cells[2]), parse_number(cells[3]),
                    parse_number(cells[4])});
  }
  return rows;
}

std::string render_rows_csv(const ExperimentResult& result) {
  std::string out = "method_or_resolution,seed,precision,recall,f1,dice,status\n";
  for (const auto& row : result.rows) {
    out += csv_escape(row.sweep_label) + "," + std::to_string(row.seed) + ",";
    if (row.metrics) {
      out += format_exact(row.metrics->precision) + "," + format_exact(row.metrics->recall) + "," +
             format_exact(row.metrics->f1) + "," + format_exact(row.metrics->dice) + ",ok\n";
    } else {
      out += ",,,," + csv_escape("failed: " + row.failure) + "\n";
    }
  }
  return out;
}

std::string render_timing_csv(const ExperimentResult& result) {
  std::string out = "method_or_resolution,seed,wall_seconds,stopped_epoch,best_epoch\n";
  for (const auto& row : result.rows) {
    char secs[32];
    std::snprintf(secs, sizeof secs, "%.3f", row.wall_seconds);
    out += csv_escape(row.sweep_label) + "," + std::to_string(row.seed) + "," + secs + "," +
           std::to_string(row.training.stopped_epoch) + "," + std::to_string(row.training.best_epoch) + "\n";
  }
  return out;
}

}  // namespace leafrust
