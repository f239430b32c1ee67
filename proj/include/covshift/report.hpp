#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace covshift {

using Json = nlohmann::ordered_json;

// Flat numeric table view of a report, one row per record.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

enum class ReportFormat { json, csv };

struct Report {
  Json document;
  Table table;
};

// Shortest round-trip decimal representation.
std::string format_double(double v);

// json: writes document (2-space indent, trailing newline). csv: writes the
// table with a header row, same dialect as dataset ingestion.
void emit_report(const Report& report, const std::string& path, ReportFormat format);

Table read_csv_table(const std::string& path);

}  // namespace covshift
