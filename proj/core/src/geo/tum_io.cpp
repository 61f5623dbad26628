#include "tio/geo/tum_io.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>
#include <string>

#include "tio/util/error.hpp"

namespace tio::geo {

void write_tum(std::ostream& os, const Trajectory& traj) {
  os << "# timestamp tx ty tz qx qy qz qw\n";
  for (const auto& tp : traj) {
    const Quat q = tp.pose.quaternion();
    const Vec3& t = tp.pose.t();
    os << fmt::format("{:.17g} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g}\n", tp.timestamp, t.x(), t.y(),
                      t.z(), q.x(), q.y(), q.z(), q.w());
  }
}

void write_tum(const std::filesystem::path& path, const Trajectory& traj) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  write_tum(os, traj);
  if (!os) throw Error("failed writing " + path.string());
}

Trajectory read_tum(std::istream& is) {
  std::vector<TimedPose> poses;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    double ts, tx, ty, tz, qx, qy, qz, qw;
    if (!(ls >> ts >> tx >> ty >> tz >> qx >> qy >> qz >> qw)) {
      throw FormatError("TUM line " + std::to_string(lineno) + ": expected 8 numeric fields");
    }
    const Quat q(qw, qx, qy, qz);
    if (!(q.norm() > 0.0)) throw FormatError("TUM line " + std::to_string(lineno) + ": zero quaternion");
    poses.push_back({ts, Pose6DoF::from_quaternion(Vec3(tx, ty, tz), q)});
  }
  return Trajectory(std::move(poses));
}

Trajectory read_tum(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path.string());
  return read_tum(is);
}

}  // namespace tio::geo
