#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "feddig/exp/record.hpp"
#include "feddig/scenario/schedule.hpp"

namespace feddig::exp {

struct Marker {
  int iteration = 0;
  std::string label;
};

// Leave/join markers from a schedule's events.
std::vector<Marker> schedule_markers(const scenario::AvailabilitySchedule& schedule);

// Test accuracy vs iteration, one polyline per record.
void write_curve_plot(const std::filesystem::path& path, const std::vector<RunRecord>& records,
                      const std::vector<Marker>& markers, const std::string& title);

struct Bar {
  std::string label;
  double mean = 0.0;
  double stddev = 0.0;
};

// Bars with mean +- std error bars.
void write_bar_plot(const std::filesystem::path& path, const std::vector<Bar>& bars, const std::string& title,
                    const std::string& y_label);

Bar summarize(const std::string& label, const std::vector<double>& values);

// "<kind>_<config hash>.svg"
std::string plot_file_name(const std::string& kind, const std::string& config_hash);

}  // namespace feddig::exp
