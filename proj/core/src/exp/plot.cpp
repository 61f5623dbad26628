#include "tio/exp/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "tio/util/error.hpp"

namespace tio::exp {

namespace {

constexpr double kW = 640, kH = 420, kLeft = 70, kRight = 20, kTop = 40, kBottom = 55;
constexpr const char* kColours[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kW - kLeft - kRight); }
  double py(double y) const { return kH - kBottom - (y - y0) / (y1 - y0) * (kH - kTop - kBottom); }
};

Frame bounds(const std::vector<Series>& series, bool equal_aspect) {
  Frame f{std::numeric_limits<double>::max(), std::numeric_limits<double>::lowest(),
          std::numeric_limits<double>::max(), std::numeric_limits<double>::lowest()};
  for (const auto& s : series) {
    for (double x : s.x) {
      if (std::isfinite(x)) f.x0 = std::min(f.x0, x), f.x1 = std::max(f.x1, x);
    }
    for (double y : s.y) {
      if (std::isfinite(y)) f.y0 = std::min(f.y0, y), f.y1 = std::max(f.y1, y);
    }
  }
  if (f.x0 > f.x1) f = {0, 1, 0, 1};
  if (f.x1 - f.x0 < 1e-12) f.x0 -= 0.5, f.x1 += 0.5;
  if (f.y1 - f.y0 < 1e-12) f.y0 -= 0.5, f.y1 += 0.5;
  const double mx = 0.05 * (f.x1 - f.x0), my = 0.05 * (f.y1 - f.y0);
  f.x0 -= mx, f.x1 += mx, f.y0 -= my, f.y1 += my;
  if (equal_aspect) {
    const double sx = (f.x1 - f.x0) / (kW - kLeft - kRight), sy = (f.y1 - f.y0) / (kH - kTop - kBottom);
    const double s = std::max(sx, sy);
    const double cx = 0.5 * (f.x0 + f.x1), cy = 0.5 * (f.y0 + f.y1);
    f.x0 = cx - 0.5 * s * (kW - kLeft - kRight), f.x1 = cx + 0.5 * s * (kW - kLeft - kRight);
    f.y0 = cy - 0.5 * s * (kH - kTop - kBottom), f.y1 = cy + 0.5 * s * (kH - kTop - kBottom);
  }
  return f;
}

std::string axes(const Frame& f, const std::string& title, const std::string& xl, const std::string& yl) {
  std::string s = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      kW, kH, kW, kH);
  s += fmt::format("<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n", kW / 2, escape(title));
  s += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n", kLeft, kTop,
                   kW - kLeft - kRight, kH - kTop - kBottom);
  for (int i = 0; i <= 5; ++i) {
    const double x = f.x0 + (f.x1 - f.x0) * i / 5.0, y = f.y0 + (f.y1 - f.y0) * i / 5.0;
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:.3g}</text>\n", f.px(x),
                     kH - kBottom + 16, x);
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.3g}</text>\n", kLeft - 6, f.py(y) + 4, y);
  }
  s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", kW / 2, kH - 14, escape(xl));
  s += fmt::format("<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
                   kH / 2, kH / 2, escape(yl));
  return s;
}

std::string legend(const std::vector<Series>& series) {
  std::string s;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double y = kTop + 14 + 16 * static_cast<double>(i);
    s += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"4\" fill=\"{}\"/>", kW - kRight - 150, y - 4,
                     kColours[i % 7]);
    s += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", kW - kRight - 132, y, escape(series[i].label));
  }
  return s;
}

void save(const std::filesystem::path& path, const std::string& body) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os << body << "</svg>\n";
}

std::string polyline(const Frame& f, const Series& s, const char* colour, bool markers) {
  std::string pts, dots;
  for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
    if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
    pts += fmt::format("{:.2f},{:.2f} ", f.px(s.x[k]), f.py(s.y[k]));
    if (markers) {
      dots += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"{}\"/>", f.px(s.x[k]), f.py(s.y[k]), colour);
    }
  }
  return fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>{}\n", pts, colour, dots);
}

}  // namespace

void write_line_plot(const std::filesystem::path& path, const std::string& title, const std::string& x_label,
                     const std::string& y_label, const std::vector<Series>& series, bool markers) {
  const Frame f = bounds(series, false);
  std::string body = axes(f, title, x_label, y_label);
  for (std::size_t i = 0; i < series.size(); ++i) body += polyline(f, series[i], kColours[i % 7], markers);
  save(path, body + legend(series));
}

void write_histogram(const std::filesystem::path& path, const std::string& title, const std::string& x_label,
                     const std::vector<Series>& samples, std::size_t bins) {
  double lo = std::numeric_limits<double>::max(), hi = std::numeric_limits<double>::lowest();
  for (const auto& s : samples) {
    for (double v : s.y) lo = std::min(lo, v), hi = std::max(hi, v);
  }
  if (lo > hi) lo = 0, hi = 1;
  if (hi - lo < 1e-12) hi = lo + 1.0;
  std::vector<Series> hist;
  for (const auto& s : samples) {
    Series h{s.label, {}, {}};
    std::vector<double> counts(bins, 0.0);
    for (double v : s.y) {
      const auto b = std::min(bins - 1, static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins)));
      counts[b] += 1.0 / static_cast<double>(std::max<std::size_t>(1, s.y.size()));
    }
    for (std::size_t b = 0; b < bins; ++b) {
      const double x0 = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins);
      const double x1 = lo + (hi - lo) * static_cast<double>(b + 1) / static_cast<double>(bins);
      h.x.insert(h.x.end(), {x0, x0, x1, x1});
      h.y.insert(h.y.end(), {0.0, counts[b], counts[b], 0.0});
    }
    hist.push_back(std::move(h));
  }
  const Frame f = bounds(hist, false);
  std::string body = axes(f, title, x_label, "fraction");
  for (std::size_t i = 0; i < hist.size(); ++i) body += polyline(f, hist[i], kColours[i % 7], false);
  save(path, body + legend(hist));
}

void write_trajectory_plot(const std::filesystem::path& path, const std::string& title,
                           const std::vector<std::pair<std::string, geo::Trajectory>>& trajectories) {
  std::vector<Series> series;
  for (const auto& [label, traj] : trajectories) {
    Series s{label, {}, {}};
    for (const auto& p : traj) {
      s.x.push_back(p.pose.t().x());
      s.y.push_back(p.pose.t().y());
    }
    series.push_back(std::move(s));
  }
  const Frame f = bounds(series, true);
  std::string body = axes(f, title, "x [m]", "y [m]");
  for (std::size_t i = 0; i < series.size(); ++i) body += polyline(f, series[i], kColours[i % 7], false);
  save(path, body + legend(series));
}

}  // namespace tio::exp
