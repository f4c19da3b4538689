#include "feddig/exp/plots.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "feddig/error.hpp"

namespace feddig::exp {

namespace {

constexpr double kWidth = 720;
constexpr double kHeight = 420;
constexpr double kLeft = 60;
constexpr double kRight = 160;
constexpr double kTop = 40;
constexpr double kBottom = 50;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string open_svg(const std::string& title) {
  return fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"24\" font-size=\"15\">{3}</text>\n",
      kWidth, kHeight, kLeft, escape(title));
}

std::string y_axis(double plot_w, double plot_h, const std::string& label) {
  std::string s;
  for (int i = 0; i <= 5; ++i) {
    const double v = i / 5.0;
    const double y = kTop + plot_h * (1.0 - v);
    s += fmt::format("<line x1=\"{0}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" stroke=\"#ddd\"/>\n", kLeft, y,
                     kLeft + plot_w);
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.1f}</text>\n", kLeft - 6, y + 4, v);
  }
  s += fmt::format("<text transform=\"translate(16,{:.1f}) rotate(-90)\" text-anchor=\"middle\">{}</text>\n",
                   kTop + plot_h / 2, escape(label));
  return s;
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCategory::kIo, "cannot write " + path.string());
  out << body;
}

}  // namespace

std::vector<Marker> schedule_markers(const scenario::AvailabilitySchedule& schedule) {
  std::vector<Marker> m;
  for (const auto& e : schedule.events()) {
    if (e.iteration == 0) continue;
    m.push_back({e.iteration, fmt::format("C{} {}", e.client, e.action == scenario::Action::kLeave ? "leaves" : "joins")});
  }
  return m;
}

void write_curve_plot(const std::filesystem::path& path, const std::vector<RunRecord>& records,
                      const std::vector<Marker>& markers, const std::string& title) {
  require(!records.empty(), ErrorCategory::kContract, "curve plot needs at least one record");
  std::size_t iterations = 1;
  for (const auto& r : records) iterations = std::max(iterations, r.rows.size());
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto x_of = [&](double t) { return kLeft + plot_w * t / std::max<double>(1.0, static_cast<double>(iterations - 1)); };
  auto y_of = [&](double acc) { return kTop + plot_h * (1.0 - std::clamp(acc, 0.0, 1.0)); };

  std::string svg = open_svg(title) + y_axis(plot_w, plot_h, "test accuracy");
  for (int i = 0; i <= 5; ++i) {
    const double t = std::round((iterations - 1) * i / 5.0);
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n", x_of(t),
                       kTop + plot_h + 18, static_cast<int>(t));
  }
  svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">iteration</text>\n", kLeft + plot_w / 2,
                     kHeight - 8);
  for (std::size_t m = 0; m < markers.size(); ++m) {
    const double x = x_of(markers[m].iteration);
    svg += fmt::format(
        "<line x1=\"{0:.1f}\" y1=\"{1}\" x2=\"{0:.1f}\" y2=\"{2}\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>\n"
        "<text x=\"{3:.1f}\" y=\"{4:.1f}\" font-size=\"10\" fill=\"#555\">{5}</text>\n",
        x, kTop, kTop + plot_h, x + 3, kTop + 12 + 12.0 * static_cast<double>(m % 4), escape(markers[m].label));
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    const char* color = kPalette[i % std::size(kPalette)];
    std::string points;
    for (const auto& row : records[i].rows) points += fmt::format("{:.1f},{:.1f} ", x_of(row.iteration), y_of(row.test_accuracy));
    svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", color, points);
    const double ly = kTop + 16.0 * static_cast<double>(i);
    svg += fmt::format(
        "<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" stroke=\"{3}\" stroke-width=\"2\"/>\n"
        "<text x=\"{4:.1f}\" y=\"{5:.1f}\">{6}</text>\n",
        kLeft + plot_w + 12, ly, kLeft + plot_w + 32, color, kLeft + plot_w + 36, ly + 4, escape(records[i].label));
  }
  write_file(path, svg + "</svg>\n");
}

void write_bar_plot(const std::filesystem::path& path, const std::vector<Bar>& bars, const std::string& title,
                    const std::string& y_label) {
  require(!bars.empty(), ErrorCategory::kContract, "bar plot needs at least one bar");
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const double slot = plot_w / static_cast<double>(bars.size());
  auto y_of = [&](double v) { return kTop + plot_h * (1.0 - std::clamp(v, 0.0, 1.0)); };
  std::string svg = open_svg(title) + y_axis(plot_w, plot_h, y_label);
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const auto& b = bars[i];
    const double x = kLeft + slot * static_cast<double>(i) + slot * 0.2;
    const double w = slot * 0.6;
    const double cx = x + w / 2;
    svg += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"{}\"/>\n", x,
                       y_of(b.mean), w, kTop + plot_h - y_of(b.mean), kPalette[i % std::size(kPalette)]);
    const double lo = y_of(b.mean - b.stddev);
    const double hi = y_of(b.mean + b.stddev);
    svg += fmt::format(
        "<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" y2=\"{2:.1f}\" stroke=\"black\"/>\n"
        "<line x1=\"{3:.1f}\" y1=\"{1:.1f}\" x2=\"{4:.1f}\" y2=\"{1:.1f}\" stroke=\"black\"/>\n"
        "<line x1=\"{3:.1f}\" y1=\"{2:.1f}\" x2=\"{4:.1f}\" y2=\"{2:.1f}\" stroke=\"black\"/>\n",
        cx, lo, hi, cx - 5, cx + 5);
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\" font-size=\"10\">{}</text>\n", cx,
                       kTop + plot_h + 16, escape(b.label));
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\" font-size=\"10\">{:.3f}</text>\n", cx,
                       hi - 4, b.mean);
  }
  write_file(path, svg + "</svg>\n");
}

Bar summarize(const std::string& label, const std::vector<double>& values) {
  Bar b{label, 0.0, 0.0};
  if (values.empty()) return b;
  b.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double v = 0.0;
    for (double x : values) v += (x - b.mean) * (x - b.mean);
    b.stddev = std::sqrt(v / static_cast<double>(values.size() - 1));
  }
  return b;
}

std::string plot_file_name(const std::string& kind, const std::string& config_hash) {
  return fmt::format("{}_{}.svg", kind, config_hash);
}

}  // namespace feddig::exp
