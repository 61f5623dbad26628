#include "tio/sim/dataset.hpp"

#include <fmt/format.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "tio/geo/tum_io.hpp"
#include "tio/util/error.hpp"

namespace tio::sim {

namespace fs = std::filesystem;

void DatasetConfig::validate() const {
  world.validate();
  rig.validate();
  if (n_sequences == 0) throw ConfigError("dataset.n_sequences must be positive");
  if (!(duration > 0.0)) throw ConfigError("dataset.duration must be positive");
  if (!(subsample_fps > 0.0)) throw ConfigError("dataset.subsample_fps must be positive");
  if (subsample_fps > rig.frame_rate) {
    throw ConfigError(fmt::format("dataset.subsample_fps ({}) exceeds rig.frame_rate ({})", subsample_fps,
                                  rig.frame_rate));
  }
  if (enforce_imu_ratio && rig.imu_rate / subsample_fps < static_cast<double>(kImuWindow)) {
    throw ConfigError(fmt::format("rig.imu_rate / dataset.subsample_fps = {:.3g} is below {} samples per frame pair",
                                  rig.imu_rate / subsample_fps, kImuWindow));
  }
  if (duration * subsample_fps < 2.0) throw ConfigError("dataset.duration too short for two frames at dataset.subsample_fps");
  if (profiles.empty()) throw ConfigError("dataset.profiles must not be empty");
  for (const auto& p : profiles) parse_profile(p);
}

void DatasetConfig::store(util::KeyValueConfig& cfg) const {
  cfg.set("dataset.world_seed", world_seed);
  cfg.set("dataset.sequence_seed", sequence_seed);
  cfg.set("dataset.n_sequences", static_cast<std::uint64_t>(n_sequences));
  cfg.set("dataset.duration", duration);
  cfg.set("dataset.subsample_fps", subsample_fps);
  std::string joined;
  for (std::size_t i = 0; i < profiles.size(); ++i) joined += (i ? "," : "") + profiles[i];
  cfg.set("dataset.profiles", joined);
  cfg.set("dataset.enforce_imu_ratio", enforce_imu_ratio);
  world.store(cfg);
  rig.store(cfg);
}

DatasetConfig DatasetConfig::load(const util::KeyValueConfig& cfg) {
  DatasetConfig d;
  d.world_seed = cfg.get_uint("dataset.world_seed", d.world_seed);
  d.sequence_seed = cfg.get_uint("dataset.sequence_seed", d.sequence_seed);
  d.n_sequences = cfg.get_uint("dataset.n_sequences", d.n_sequences);
  d.duration = cfg.get_double("dataset.duration", d.duration);
  d.subsample_fps = cfg.get_double("dataset.subsample_fps", d.subsample_fps);
  if (cfg.contains("dataset.profiles")) {
    d.profiles.clear();
    std::istringstream is(cfg.get_string("dataset.profiles", ""));
    std::string item;
    while (std::getline(is, item, ',')) {
      const auto b = item.find_first_not_of(" \t");
      const auto e = item.find_last_not_of(" \t");
      if (b != std::string::npos) d.profiles.push_back(item.substr(b, e - b + 1));
    }
  }
  d.enforce_imu_ratio = cfg.get_bool("dataset.enforce_imu_ratio", d.enforce_imu_ratio);
  d.world = WorldConfig::load(cfg);
  d.rig = SensorRig::load(cfg);
  d.validate();
  return d;
}

std::string DatasetConfig::hash() const {
  util::KeyValueConfig cfg;
  store(cfg);
  return util::fnv1a_hex(cfg.str());
}

std::size_t Dataset::sample_count() const {
  std::size_t n = 0;
  for (const auto& s : sequences) n += s.samples.size();
  return n;
}

std::vector<double> subsample_times(double frame_rate, double fps, double duration) {
  if (!(fps > 0.0) || fps > frame_rate) throw ConfigError("subsample rate must lie in (0, frame_rate]");
  std::vector<double> times;
  const double step = frame_rate / fps;
  for (std::size_t k = 0;; ++k) {
    const double raw = std::round(static_cast<double>(k) * step);
    const double t = raw / frame_rate;
    if (t > duration + 1e-9) break;
    times.push_back(t);
  }
  return times;
}

void build_samples(Sequence& seq) {
  const std::size_t n = seq.frame_times.size();
  if (seq.thermal.size() != n || seq.visual.size() != n || seq.gt.size() != n) {
    throw ContractError("sequence " + seq.name + " has inconsistent frame, stamp and ground-truth counts");
  }
  seq.samples.clear();
  if (n < 2) return;
  seq.samples.reserve(n - 1);
  for (std::size_t j = 0; j + 1 < n; ++j) {
    Sample s;
    s.t0 = seq.frame_times[j];
    s.t1 = seq.frame_times[j + 1];
    s.thermal_pair = {seq.thermal[j], seq.thermal[j + 1]};
    s.visual_pair = {seq.visual[j], seq.visual[j + 1]};
    s.thermal_frozen = *seq.thermal[j] == *seq.thermal[j + 1];
    s.rel_pose_gt = geo::relative(seq.gt[j].pose, seq.gt[j + 1].pose);
    s.imu_window = num::Tensor({kImuWindow, kImuChannels});
    const double dt = (s.t1 - s.t0) / static_cast<double>(kImuWindow);
    for (std::size_t k = 0; k < kImuWindow; ++k) {
      const ImuSample m = interpolate_imu(seq.imu, s.t0 + static_cast<double>(k) * dt);
      for (int c = 0; c < 3; ++c) {
        s.imu_window.at(k, static_cast<std::size_t>(c)) = m.gyro[c];
        s.imu_window.at(k, static_cast<std::size_t>(c) + 3) = m.accel[c];
      }
    }
    seq.samples.push_back(std::move(s));
  }
}

namespace {

Sequence make_sequence(const World& world, const DatasetConfig& cfg, std::size_t index) {
  const std::uint64_t seed = derive_seed(cfg.sequence_seed, index);
  Sequence seq;
  seq.name = fmt::format("seq_{:03d}", index);
  seq.profile = parse_profile(cfg.profiles[index % cfg.profiles.size()]);
  const MotionModel motion(derive_seed(seed, 1), cfg.duration, seq.profile);

  const auto n_imu = static_cast<std::size_t>(std::floor(cfg.duration * cfg.rig.imu_rate + 1e-9)) + 1;
  std::vector<geo::TimedPose> imu_poses;
  imu_poses.reserve(n_imu);
  for (std::size_t i = 0; i < n_imu; ++i) {
    const double t = static_cast<double>(i) / cfg.rig.imu_rate;
    imu_poses.push_back({t, motion.pose_at(t)});
  }
  seq.gt_imu = geo::Trajectory(std::move(imu_poses));
  seq.imu = synthesize_imu(seq.gt_imu, cfg.rig, derive_seed(seed, 2));

  seq.frame_times = subsample_times(cfg.rig.frame_rate, cfg.subsample_fps, cfg.duration);
  std::vector<geo::TimedPose> frame_poses;
  ThermalStream thermal(world, cfg.rig);
  for (double t : seq.frame_times) {
    frame_poses.push_back({t, motion.pose_at(t)});
    const geo::Pose6DoF seen = motion.pose_at(t + cfg.rig.time_misalignment);
    seq.thermal.push_back(std::make_shared<const Frame>(thermal.render(seen, t)));
    seq.visual.push_back(std::make_shared<const Frame>(render(world, seen, Channel::Visual, cfg.rig)));
  }
  seq.gt = geo::Trajectory(std::move(frame_poses));
  build_samples(seq);
  return seq;
}

}  // namespace

Dataset make_dataset(const DatasetConfig& cfg) {
  cfg.validate();
  const World world = generate_world(cfg.world_seed, cfg.world);
  Dataset ds;
  ds.config = cfg;
  for (std::size_t i = 0; i < cfg.n_sequences; ++i) ds.sequences.push_back(make_sequence(world, cfg, i));
  return ds;
}

Dataset make_dataset(std::uint64_t world_seed, const SensorRig& rig, std::size_t n_sequences, double duration,
                     double subsample_fps) {
  DatasetConfig cfg;
  cfg.world_seed = world_seed;
  cfg.rig = rig;
  cfg.n_sequences = n_sequences;
  cfg.duration = duration;
  cfg.subsample_fps = subsample_fps;
  return make_dataset(cfg);
}

namespace {

constexpr char kFrameMagic[8] = {'T', 'I', 'O', 'F', 'R', 'M', '0', '1'};

template <class U>
void put_le(std::ostream& os, U v) {
  unsigned char b[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), sizeof(U));
}

template <class U>
U get_le(std::istream& is, const fs::path& path) {
  unsigned char b[sizeof(U)];
  if (!is.read(reinterpret_cast<char*>(b), sizeof(U))) throw FormatError("truncated frame file " + path.string());
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void write_frames(const fs::path& path, const std::vector<FramePtr>& frames) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  std::uint32_t c = 0, h = 0, w = 0;
  if (!frames.empty()) {
    const auto& shape = frames.front()->shape();
    c = static_cast<std::uint32_t>(shape.at(0));
    h = static_cast<std::uint32_t>(shape.at(1));
    w = static_cast<std::uint32_t>(shape.at(2));
  }
  os.write(kFrameMagic, sizeof(kFrameMagic));
  put_le<std::uint32_t>(os, w);
  put_le<std::uint32_t>(os, h);
  put_le<std::uint32_t>(os, c);
  put_le<std::uint64_t>(os, frames.size());
  for (const auto& f : frames) {
    if (f->shape() != frames.front()->shape()) throw ContractError("frames in one container must share a shape");
    for (double v : f->data()) put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(v));
  }
  if (!os) throw Error("failed writing " + path.string());
}

std::vector<FramePtr> read_frames(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kFrameMagic, 8) != 0) throw FormatError("bad frame magic in " + path.string());
  const auto w = get_le<std::uint32_t>(is, path);
  const auto h = get_le<std::uint32_t>(is, path);
  const auto c = get_le<std::uint32_t>(is, path);
  const auto count = get_le<std::uint64_t>(is, path);
  std::vector<FramePtr> frames;
  frames.reserve(count);
  for (std::uint64_t k = 0; k < count; ++k) {
    Frame f({c, h, w});
    for (auto& v : f.data()) v = std::bit_cast<double>(get_le<std::uint64_t>(is, path));
    frames.push_back(std::make_shared<const Frame>(std::move(f)));
  }
  return frames;
}

void write_imu_csv(const fs::path& path, const std::vector<ImuSample>& imu) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os << "timestamp,gx,gy,gz,ax,ay,az\n";
  for (const auto& s : imu) {
    os << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", s.t, s.gyro.x(), s.gyro.y(),
                      s.gyro.z(), s.accel.x(), s.accel.y(), s.accel.z());
  }
  if (!os) throw Error("failed writing " + path.string());
}

std::vector<ImuSample> read_imu_csv(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path.string());
  std::string line;
  std::getline(is, line);
  std::vector<ImuSample> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    ImuSample s;
    double v[7];
    char comma;
    bool ok = static_cast<bool>(ls >> v[0]);
    for (int k = 1; k < 7 && ok; ++k) ok = static_cast<bool>(ls >> comma >> v[k]) && comma == ',';
    if (!ok) throw FormatError(fmt::format("{}:{}: expected 7 comma-separated numbers", path.string(), lineno));
    s.t = v[0];
    s.gyro = {v[1], v[2], v[3]};
    s.accel = {v[4], v[5], v[6]};
    out.push_back(s);
  }
  return out;
}

void write_dataset(const fs::path& dir, const Dataset& dataset) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
  util::KeyValueConfig manifest;
  dataset.config.store(manifest);
  manifest.set("manifest.config_hash", dataset.config.hash());
  manifest.set("manifest.sequences", static_cast<std::uint64_t>(dataset.sequences.size()));
  manifest.write(dir / "manifest.ini");
  for (const auto& seq : dataset.sequences) {
    const fs::path sd = dir / seq.name;
    fs::create_directories(sd, ec);
    if (ec) throw Error("cannot create " + sd.string() + ": " + ec.message());
    geo::write_tum(sd / "groundtruth.txt", seq.gt);
    geo::write_tum(sd / "groundtruth_imu.txt", seq.gt_imu);
    write_imu_csv(sd / "imu.csv", seq.imu);
    write_frames(sd / "thermal.frames", seq.thermal);
    write_frames(sd / "visual.frames", seq.visual);
  }
}

Dataset read_dataset(const fs::path& dir) {
  if (!fs::exists(dir / "manifest.ini")) throw DependencyError("no dataset manifest in " + dir.string());
  const auto manifest = util::KeyValueConfig::read(dir / "manifest.ini");
  Dataset ds;
  ds.config = DatasetConfig::load(manifest);
  const auto count = manifest.get_uint("manifest.sequences", ds.config.n_sequences);
  for (std::size_t i = 0; i < count; ++i) {
    Sequence seq;
    seq.name = fmt::format("seq_{:03d}", i);
    seq.profile = parse_profile(ds.config.profiles[i % ds.config.profiles.size()]);
    const fs::path sd = dir / seq.name;
    seq.gt = geo::read_tum(sd / "groundtruth.txt");
    seq.gt_imu = geo::read_tum(sd / "groundtruth_imu.txt");
    seq.imu = read_imu_csv(sd / "imu.csv");
    seq.thermal = read_frames(sd / "thermal.frames");
    seq.visual = read_frames(sd / "visual.frames");
    for (const auto& tp : seq.gt) seq.frame_times.push_back(tp.timestamp);
    build_samples(seq);
    ds.sequences.push_back(std::move(seq));
  }
  return ds;
}

}  // namespace tio::sim
