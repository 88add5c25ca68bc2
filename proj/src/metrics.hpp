#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "common.hpp"

namespace poolforge {

struct MetricSample {
  double t;      // virtual seconds
  double value;  // units per series
};

// Time-series store. Series are addressed by name; per-series timestamps are
// strictly increasing and fraction series are range-checked at record time.
class MetricsBundle {
 public:
  std::map<std::string, std::vector<MetricSample>> series;

  void record(const std::string& name, double t, double value);
  bool has(const std::string& name) const { return series.count(name) != 0; }

  // Wide CSV: header "t,<s1>,<s2>,..." (names sorted), one row per distinct
  // timestamp, empty cell where a series has no sample at that time.
  std::string export_csv() const;
  void export_csv(const std::string& path) const;
  // One file per series, "<dir>/<name>.csv" with header "t,<name>".
  void export_csv_split(const std::string& dir) const;

  std::string render_svg(const std::vector<std::string>& names) const;
  void render_svg(const std::vector<std::string>& names, const std::string& path) const;
};

// Classic load-average recurrence at a fixed 1-second cadence:
// new = prev*a + q*(1-a), a = exp(-1/(60*window_minutes)).
double load_average_update(double prev, double q_now, double window_minutes);

// Deterministic shortest-roundtrip float formatting shared by CSV and SVG.
std::string format_metric(double v);

}  // namespace poolforge
