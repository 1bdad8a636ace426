#pragma once

#include <string>
#include <vector>

#include "leafrust/experiment.hpp"

namespace leafrust {

enum class TableFormat { Text, Csv };

struct TableRow {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double dice = 0.0;
};

// Median over seeds per sweep value, in sweep order. Failed rows are ignored;
// a sweep value with no successful rows is omitted.
std::vector<TableRow> summarize(const ExperimentResult& result);

double median(std::vector<double> values);

/// Precision/Recall/F1/Dice table with 3-decimal values. Text rows look like
/// "128x128  0.939  0.939  0.939  0.942".
std::string render_table(const std::vector<TableRow>& rows, SweepAxis axis, TableFormat format);
std::string render_table(const ExperimentResult& result, TableFormat format);

// Parses the CSV flavor of render_table.
std::vector<TableRow> parse_table_csv(const std::string& csv);

// Per-seed rows (deterministic; no timing): label,seed,precision,recall,f1,dice,status
std::string render_rows_csv(const ExperimentResult& result);
// label,seed,wall_seconds,stopped_epoch,best_epoch
std::string render_timing_csv(const ExperimentResult& result);

}  // namespace leafrust
