#pragma once

#include <filesystem>
#include <iosfwd>

#include "tio/geo/trajectory.hpp"

namespace tio::geo {

// TUM RGB-D text format: one pose per line, `timestamp tx ty tz qx qy qz qw`.
// Lines starting with '#' are comments. Values are written with 17 significant
// digits; Euler angles are converted to unit quaternions at this boundary.

void write_tum(std::ostream& os, const Trajectory& traj);
void write_tum(const std::filesystem::path& path, const Trajectory& traj);

/// Throws FormatError on malformed lines.
Trajectory read_tum(std::istream& is);
Trajectory read_tum(const std::filesystem::path& path);

}  // namespace tio::geo
