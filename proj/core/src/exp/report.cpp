#include "tio/exp/report.hpp"

#include <fstream>
#include <map>

#include <fmt/format.h>

#include "tio/exp/plot.hpp"
#include "tio/exp/stats.hpp"
#include "tio/util/error.hpp"

namespace tio::exp {

namespace {

namespace fs = std::filesystem;

std::ofstream open(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, mode);
  if (!os) throw Error("cannot write " + path.string());
  return os;
}

}  // namespace

void write_ablation_report(const fs::path& dir, const AblationReport& r) {
  auto csv = open(dir / "ablation.csv");
  csv << "config_hash,feature_set,selective_fusion,seed,rpe_t_m,rpe_r_deg,ate_m,status,error\n";
  std::map<std::pair<std::string, bool>, std::vector<double>> ates;
  for (const auto& row : r.rows) {
    const std::string set = feature_set(row.variant.mode);
    csv << fmt::format("{},{},{},{},{:.17g},{:.17g},{:.17g},{},\"{}\"\n", r.config_hash, set,
                       row.variant.selective_fusion ? "on" : "off", row.seed, row.rpe_t, row.rpe_r, row.ate,
                       row.failed ? "failed" : "ok", row.error);
    if (!row.failed) ates[{set, row.variant.selective_fusion}].push_back(row.ate);
  }
  auto txt = open(dir / "summary.txt");
  txt << fmt::format("config hash {}\nseeds", r.config_hash);
  for (auto s : r.seeds) txt << ' ' << s;
  txt << "\n\nfeature set                 SF   mean ATE [m]\n";
  for (const auto& [key, v] : ates) txt << fmt::format("{:<27} {:<4} {:.4f}\n", key.first, key.second ? "on" : "off", mean(v));
}

void write_validation_report(const fs::path& dir, const ValidationReport& r) {
  auto csv = open(dir / "validation.csv");
  csv << "config_hash,branch,window,rpe_t_m,rpe_r_deg\n";
  for (std::size_t i = 0; i < r.real_t.size(); ++i) {
    csv << fmt::format("{},real,{},{:.17g},{:.17g}\n", r.config_hash, i, r.real_t[i], r.real_r[i]);
  }
  for (std::size_t i = 0; i < r.fake_t.size(); ++i) {
    csv << fmt::format("{},fake,{},{:.17g},{:.17g}\n", r.config_hash, i, r.fake_t[i], r.fake_r[i]);
  }
  auto txt = open(dir / "summary.txt");
  txt << fmt::format("config hash {}\n", r.config_hash);
  txt << fmt::format("branch  mean RPE t [m]  median  mean RPE r [deg]  median  ATE [m]\n");
  txt << fmt::format("real    {:.5f}         {:.5f} {:.4f}            {:.4f}  {:.4f}\n", mean(r.real_t),
                     quantile(r.real_t, 0.5), mean(r.real_r), quantile(r.real_r, 0.5), r.real_ate);
  txt << fmt::format("fake    {:.5f}         {:.5f} {:.4f}            {:.4f}  {:.4f}\n", mean(r.fake_t),
                     quantile(r.fake_t, 0.5), mean(r.fake_r), quantile(r.fake_r, 0.5), r.fake_ate);
  txt << fmt::format("KS statistic: translation {:.4f}, rotation {:.4f}\n", r.ks_t, r.ks_r);
  write_histogram(dir / "rpe_translation.svg", "Translation RPE", "RPE [m]",
                  {{"real features", {}, r.real_t}, {"hallucinated features", {}, r.fake_t}});
  write_histogram(dir / "rpe_rotation.svg", "Rotation RPE", "RPE [deg]",
                  {{"real features", {}, r.real_r}, {"hallucinated features", {}, r.fake_r}});
}

void write_fps_report(const fs::path& dir, const FpsCurve& c) {
  auto csv = open(dir / "fps.csv");
  csv << "config_hash,fps,ate_m,rpe_t_m,rpe_r_deg\n";
  Series s{"ATE", {}, {}};
  for (const auto& p : c.points) {
    csv << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g}\n", c.config_hash, p.fps, p.ate, p.rpe_t, p.rpe_r);
    s.x.push_back(p.fps);
    s.y.push_back(p.ate);
  }
  auto txt = open(dir / "summary.txt");
  txt << fmt::format("config hash {}\ntraining rate {:g} fps\n", c.config_hash, c.training_fps);
  for (const auto& p : c.points) txt << fmt::format("{:>6g} fps  ATE {:.4f} m\n", p.fps, p.ate);
  write_line_plot(dir / "fps_curve.svg", "ATE against sampling rate", "sampling rate [fps]", "ATE [m]", {s}, true);
}

void write_huber_report(const fs::path& dir, const HuberReport& r) {
  auto csv = open(dir / "huber.csv");
  csv << "config_hash,seed,outliers,loss,clean_feature_error,fake_rpe_t_m,fake_rpe_r_deg\n";
  for (const auto& row : r.rows) {
    const char* o = row.outliers ? "yes" : "removed";
    csv << fmt::format("{},{},{},huber,{:.17g},{:.17g},{:.17g}\n", r.config_hash, row.seed, o, row.huber_feature_error,
                       row.huber_rpe_t, row.huber_rpe_r);
    csv << fmt::format("{},{},{},l2,{:.17g},{:.17g},{:.17g}\n", r.config_hash, row.seed, o, row.l2_feature_error,
                       row.l2_rpe_t, row.l2_rpe_r);
  }
  auto txt = open(dir / "summary.txt");
  txt << fmt::format("config hash {}\noutlier fraction {:.4f}\n\n", r.config_hash, r.outlier_fraction);
  txt << "seed  outliers  feature error huber / l2   ratio   fake RPE r huber / l2 [deg]\n";
  for (const auto& row : r.rows) {
    txt << fmt::format("{:<5} {:<9} {:.6g} / {:.6g}   {:.4f}  {:.4f} / {:.4f}\n", row.seed,
                       row.outliers ? "yes" : "removed", row.huber_feature_error, row.l2_feature_error,
                       row.huber_feature_error / row.l2_feature_error, row.huber_rpe_r, row.l2_rpe_r);
  }
}

void append_checks(const fs::path& path, const std::vector<Check>& checks) {
  auto os = open(path, std::ios::app);
  for (const auto& c : checks) os << fmt::format("{} {}: {}\n", c.pass ? "PASS" : "FAIL", c.name, c.detail);
}

void write_eval_table(const fs::path& path, const std::string& config_hash, const std::vector<EvalRow>& rows) {
  auto csv = open(path);
  csv << "config_hash,mode,sequence,ate_m,rpe_t_m,rpe_r_deg\n";
  for (const auto& r : rows) {
    csv << fmt::format("{},{},{},{:.17g},{:.17g},{:.17g}\n", config_hash, r.mode, r.metrics.sequence, r.metrics.ate,
                       r.metrics.rpe_t, r.metrics.rpe_r);
  }
}

}  // namespace tio::exp
