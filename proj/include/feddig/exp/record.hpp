#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "feddig/fl/simulation.hpp"

namespace feddig::exp {

struct RecordRow {
  int iteration = 0;
  double test_accuracy = 0.0;
  double monitor_accuracy = 0.0;
  std::string presence;  // one '1'/'0' per client
  std::uint64_t bytes_cumulative = 0;
  double seconds_elapsed = 0.0;
  double iteration_seconds = 0.0;
  int live_updates = 0;
  int synthetic_updates = 0;
  double server_loss = 0.0;
};

struct RunRecord {
  std::string label;
  std::string config_hash;
  std::vector<RecordRow> rows;
};

RecordRow to_row(const fl::IterationMetrics& m);

std::string csv_header();
std::string csv_line(const RecordRow& row);
// Reads a metrics CSV; rows must have consecutive iterations from 0.
RunRecord read_record(const std::filesystem::path& path);

// Mean test accuracy over iterations [start, end], inclusive.
double window_accuracy(const RunRecord& record, int start, int end);

struct TimingSummary {
  double mean = 0.0;
  double stddev = 0.0;
};
TimingSummary iteration_timing(const RunRecord& record);

}  // namespace feddig::exp
