#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tio/geo/trajectory.hpp"

namespace tio::exp {

struct Series {
  std::string label;
  std::vector<double> x, y;
};

/// Standalone SVG line chart with axes, ticks and a legend.
void write_line_plot(const std::filesystem::path& path, const std::string& title, const std::string& x_label,
                     const std::string& y_label, const std::vector<Series>& series, bool markers = false);

/// Overlaid normalised histograms of each series' y values over shared bins.
void write_histogram(const std::filesystem::path& path, const std::string& title, const std::string& x_label,
                     const std::vector<Series>& samples, std::size_t bins = 30);

/// Top-down (x, y) overlay of trajectories.
void write_trajectory_plot(const std::filesystem::path& path, const std::string& title,
                           const std::vector<std::pair<std::string, geo::Trajectory>>& trajectories);

}  // namespace tio::exp
