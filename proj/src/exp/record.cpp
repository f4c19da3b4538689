#include "feddig/exp/record.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "feddig/error.hpp"

namespace feddig::exp {

RecordRow to_row(const fl::IterationMetrics& m) {
  RecordRow r;
  r.iteration = m.iteration;
  r.test_accuracy = m.test_accuracy;
  r.monitor_accuracy = m.monitor_accuracy;
  for (bool p : m.presence) r.presence.push_back(p ? '1' : '0');
  r.bytes_cumulative = m.bytes_cumulative;
  r.seconds_elapsed = m.seconds_elapsed;
  r.iteration_seconds = m.iteration_seconds;
  r.live_updates = m.live_updates;
  r.synthetic_updates = m.synthetic_updates;
  r.server_loss = m.server_loss;
  return r;
}

std::string csv_header() {
  return "t,test_acc,monitor_acc,presence,bytes_sent_cumulative,seconds_elapsed,iteration_seconds,live_updates,"
         "synthetic_updates,server_loss";
}

std::string csv_line(const RecordRow& r) {
  return fmt::format("{},{},{},{},{},{:.6f},{:.6f},{},{},{}", r.iteration, r.test_accuracy, r.monitor_accuracy,
                     r.presence, r.bytes_cumulative, r.seconds_elapsed, r.iteration_seconds, r.live_updates,
                     r.synthetic_updates, r.server_loss);
}

RunRecord read_record(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCategory::kIo, "cannot read metrics " + path.string());
  RunRecord rec;
  std::string line;
  std::getline(in, line);
  require(line == csv_header(), ErrorCategory::kIo, "unexpected metrics header in " + path.string());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    require(cells.size() == 10, ErrorCategory::kIo, "malformed metrics row in " + path.string());
    RecordRow r;
    try {
      r.iteration = std::stoi(cells[0]);
      r.test_accuracy = std::stod(cells[1]);
      r.monitor_accuracy = std::stod(cells[2]);
      r.presence = cells[3];
      r.bytes_cumulative = std::stoull(cells[4]);
      r.seconds_elapsed = std::stod(cells[5]);
      r.iteration_seconds = std::stod(cells[6]);
      r.live_updates = std::stoi(cells[7]);
      r.synthetic_updates = std::stoi(cells[8]);
      r.server_loss = std::stod(cells[9]);
    } catch (const std::exception&) {
      throw Error(ErrorCategory::kIo, "malformed metrics value in " + path.string());
    }
    require(r.iteration == static_cast<int>(rec.rows.size()), ErrorCategory::kIo,
            "metrics rows are not consecutive in " + path.string());
    rec.rows.push_back(std::move(r));
  }
  return rec;
}

double window_accuracy(const RunRecord& record, int start, int end) {
  require(0 <= start && start <= end && end < static_cast<int>(record.rows.size()), ErrorCategory::kContract,
          fmt::format("window [{}, {}] outside the {} recorded iterations", start, end, record.rows.size()));
  double sum = 0.0;
  for (int t = start; t <= end; ++t) sum += record.rows[static_cast<std::size_t>(t)].test_accuracy;
  return sum / (end - start + 1);
}

TimingSummary iteration_timing(const RunRecord& record) {
  TimingSummary s;
  const auto n = record.rows.size();
  if (n == 0) return s;
  for (const auto& r : record.rows) s.mean += r.iteration_seconds;
  s.mean /= static_cast<double>(n);
  if (n > 1) {
    double v = 0.0;
    for (const auto& r : record.rows) v += (r.iteration_seconds - s.mean) * (r.iteration_seconds - s.mean);
    s.stddev = std::sqrt(v / static_cast<double>(n - 1));
  }
  return s;
}

}  // namespace feddig::exp
