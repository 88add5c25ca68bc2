#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

namespace poolforge {

std::string format_metric(double v) {
  if (v == 0) return "0";
  // round-trippable and stable across platforms for the value ranges we emit
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

double load_average_update(double prev, double q_now, double window_minutes) {
  double a = std::exp(-1.0 / (60.0 * window_minutes));
  return prev * a + q_now * (1.0 - a);
}

void MetricsBundle::record(const std::string& name, double t, double value) {
  if (!std::isfinite(t) || !std::isfinite(value))
    fail(Errc::bounds, "non-finite metric sample");
  auto& s = series[name];
  if (!s.empty() && t <= s.back().t)
    fail(Errc::bounds, "metric time regression on series " + name);
  if (name.find("fraction") != std::string::npos && (value < 0.0 || value > 1.0))
    fail(Errc::bounds, "fraction out of range on series " + name);
  s.push_back({t, value});
}

std::string MetricsBundle::export_csv() const {
  std::set<double> times;
  for (const auto& [name, s] : series)
    for (const auto& smp : s) times.insert(smp.t);
  std::string out = "t";
  for (const auto& [name, s] : series) out += "," + name;
  out += "\n";
  // per-series cursor; timestamps are sorted, so one forward pass suffices
  std::map<std::string, size_t> cur;
  for (double t : times) {
    out += format_metric(t);
    for (const auto& [name, s] : series) {
      size_t& i = cur[name];
      out += ",";
      if (i < s.size() && s[i].t == t) out += format_metric(s[i++].value);
    }
    out += "\n";
  }
  return out;
}

static void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(Errc::io, "cannot write " + path);
  f.write(text.data(), std::streamsize(text.size()));
  if (!f) fail(Errc::io, "short write to " + path);
}

void MetricsBundle::export_csv(const std::string& path) const {
  write_text(path, export_csv());
}

void MetricsBundle::export_csv_split(const std::string& dir) const {
  for (const auto& [name, s] : series) {
    std::string out = "t," + name + "\n";
    for (const auto& smp : s)
      out += format_metric(smp.t) + "," + format_metric(smp.value) + "\n";
    write_text(dir + "/" + name + ".csv", out);
  }
}

std::string MetricsBundle::render_svg(const std::vector<std::string>& names) const {
  for (const auto& n : names)
    if (!series.count(n)) fail(Errc::not_found, "unknown series: " + n);

  constexpr int W = 960, H = 480;
  constexpr int ml = 70, mr = 20, mt = 30, mb = 40;  // margins
  double tmin = 0, tmax = 1, vmin = 0, vmax = 1;
  bool first = true;
  for (const auto& n : names)
    for (const auto& smp : series.at(n)) {
      if (first) {
        tmin = tmax = smp.t;
        vmin = vmax = smp.value;
        first = false;
      }
      tmin = std::min(tmin, smp.t);
      tmax = std::max(tmax, smp.t);
      vmin = std::min(vmin, smp.value);
      vmax = std::max(vmax, smp.value);
    }
  if (tmax == tmin) tmax = tmin + 1;
  if (vmax == vmin) vmax = vmin + 1;
  auto px = [&](double t) { return ml + (t - tmin) / (tmax - tmin) * (W - ml - mr); };
  auto py = [&](double v) { return H - mb - (v - vmin) / (vmax - vmin) * (H - mt - mb); };

  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(W) +
         "\" height=\"" + std::to_string(H) + "\" viewBox=\"0 0 " + std::to_string(W) +
         " " + std::to_string(H) + "\">\n";
  out += "<rect width=\"" + std::to_string(W) + "\" height=\"" + std::to_string(H) +
         "\" fill=\"white\"/>\n";
  out += "<line x1=\"" + std::to_string(ml) + "\" y1=\"" + std::to_string(H - mb) +
         "\" x2=\"" + std::to_string(W - mr) + "\" y2=\"" + std::to_string(H - mb) +
         "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + std::to_string(ml) + "\" y1=\"" + std::to_string(mt) +
         "\" x2=\"" + std::to_string(ml) + "\" y2=\"" + std::to_string(H - mb) +
         "\" stroke=\"black\"/>\n";
  out += "<text x=\"" + std::to_string((ml + W - mr) / 2) + "\" y=\"" +
         std::to_string(H - 8) + "\" text-anchor=\"middle\" font-size=\"13\">t (virtual s) [" +
         format_metric(tmin) + ", " + format_metric(tmax) + "]</text>\n";
  out += "<text x=\"16\" y=\"" + std::to_string((mt + H - mb) / 2) +
         "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 " +
         std::to_string((mt + H - mb) / 2) + ")\">value [" + format_metric(vmin) + ", " +
         format_metric(vmax) + "]</text>\n";
  for (size_t i = 0; i < names.size(); i++) {
    const char* color = palette[i % 8];
    const auto& s = series.at(names[i]);
    out += "<polyline fill=\"none\" stroke=\"";
    out += color;
    out += "\" stroke-width=\"1.5\" points=\"";
    for (size_t k = 0; k < s.size(); k++) {
      if (k) out += " ";
      out += format_metric(px(s[k].t)) + "," + format_metric(py(s[k].value));
    }
    out += "\"/>\n";
    out += "<text x=\"" + std::to_string(ml + 8) + "\" y=\"" +
           std::to_string(mt + 14 * int(i) + 4) + "\" font-size=\"12\" fill=\"";
    out += color;
    out += "\">" + names[i] + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

void MetricsBundle::render_svg(const std::vector<std::string>& names,
                               const std::string& path) const {
  write_text(path, render_svg(names));
}

}  // namespace poolforge
