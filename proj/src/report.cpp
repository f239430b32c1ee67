#include "covshift/report.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "covshift/error.hpp"

namespace covshift {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

void emit_report(const Report& report, const std::string& path, ReportFormat format) {
  std::ofstream out(path);
  if (!out) throw IngestError("cannot open report file for writing: " + path);
  if (format == ReportFormat::json) {
    out << report.document.dump(2) << '\n';
  } else {
    for (std::size_t j = 0; j < report.table.columns.size(); ++j) {
      if (j > 0) out << ',';
      out << report.table.columns[j];
    }
    out << '\n';
    for (const auto& row : report.table.rows) {
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (j > 0) out << ',';
        out << format_double(row[j]);
      }
      out << '\n';
    }
  }
  if (!out) throw IngestError("report write failed: " + path);
}

Table read_csv_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open CSV table: " + path);
  Table table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (first) {
      table.columns = cells;
      first = false;
      continue;
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const std::string& c : cells) {
      double v = 0.0;
      auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
      if (ec != std::errc() || p != c.data() + c.size()) {
        throw IngestError("non-numeric cell in table: " + path);
      }
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace covshift
