#include "tio/exp/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include <fmt/format.h>

#include "tio/exp/stats.hpp"
#include "tio/model/inputs.hpp"
#include "tio/train/trainer.hpp"
#include "tio/util/error.hpp"
#include "tio/util/parallel.hpp"

namespace tio::exp {

namespace {

std::vector<train::PreparedSequence> without_frozen(const std::vector<train::PreparedSequence>& data) {
  std::vector<train::PreparedSequence> out;
  for (const auto& seq : data) {
    train::PreparedSequence s;
    s.source = seq.source;
    for (const auto& x : seq.samples) {
      if (!x.frozen) s.samples.push_back(x);
    }
    if (!s.samples.empty()) out.push_back(std::move(s));
  }
  return out;
}

bool needs_hallucination(const std::vector<Variant>& variants) {
  return std::any_of(variants.begin(), variants.end(),
                     [](const Variant& v) { return model::mode_channels(v.mode).hallucination; });
}

}  // namespace

model::ModelConfig model_for(const ExperimentConfig& cfg, const Corpus& corpus, std::uint64_t seed) {
  model::ModelConfig m = model::config_for(cfg.data, cfg.model);
  m.init_seed = seed;
  m.norm = corpus.norm;
  return m;
}

train::TrainConfig train_for(const ExperimentConfig& cfg, std::uint64_t seed, std::size_t epochs) {
  train::TrainConfig t = cfg.train;
  t.seed = seed;
  t.epochs = epochs;
  t.val_every = 0;
  return t;
}

model::Teacher train_teacher(const Corpus& corpus, const ExperimentConfig& cfg, std::uint64_t seed) {
  model::Teacher teacher(model_for(cfg, corpus, seed));
  train::train_teacher(teacher, corpus.train, train_for(cfg, seed, cfg.teacher_epochs));
  return teacher;
}

model::DeepTio distill(const model::Teacher& teacher, const Corpus& corpus, const ExperimentConfig& cfg,
                       std::uint64_t seed, train::LossKind loss, bool drop_frozen) {
  model::DeepTio student(model_for(cfg, corpus, seed));
  train::TrainConfig t = train_for(cfg, seed, cfg.hallucination_epochs);
  t.loss = loss;
  if (drop_frozen) {
    train::train_stage1(teacher, student, without_frozen(corpus.train), t);
  } else {
    train::train_stage1(teacher, student, corpus.train, t);
  }
  return student;
}

model::DeepTio train_odometry(const model::DeepTio& distilled, const Corpus& corpus, const ExperimentConfig& cfg,
                              std::uint64_t seed, model::Mode mode, bool selective_fusion) {
  model::ModelConfig m = model_for(cfg, corpus, seed);
  m.selective_fusion = selective_fusion;
  model::DeepTio student(m);
  model::copy_matching(distilled.params(), student.params(), "halluc.");
  train::TrainConfig t = train_for(cfg, seed, cfg.odometry_epochs);
  t.mode = mode;
  train::train_stage2(student, corpus.train, t);
  if (cfg.finetune) train::finetune_alternating(student, corpus.train, t);
  return student;
}

ValidationReport validate_hallucination(const model::Teacher& teacher, const model::DeepTio& student,
                                        const std::vector<train::PreparedSequence>& test,
                                        const train::EvalOptions& opt) {
  if (teacher.config().feature_dim() != student.config().feature_dim()) {
    throw ContractError("teacher and student feature widths differ");
  }
  if (test.empty()) throw ContractError("validation needs test sequences");
  ValidationReport r;
  std::vector<double> real_ate, fake_ate;
  for (const auto& seq : test) {
    const auto feats = train::hallucinate(student, seq);
    const auto real = train::integrate_sequence(*seq.source, train::predict(teacher, seq, opt));
    const auto fake = train::integrate_sequence(*seq.source, train::predict(teacher, seq, opt, &feats));
    const auto er = geo::rpe(real, seq.source->gt, opt.rpe_delta, opt.max_dt);
    const auto ef = geo::rpe(fake, seq.source->gt, opt.rpe_delta, opt.max_dt);
    r.real_t.insert(r.real_t.end(), er.t_errors.begin(), er.t_errors.end());
    r.real_r.insert(r.real_r.end(), er.r_errors.begin(), er.r_errors.end());
    r.fake_t.insert(r.fake_t.end(), ef.t_errors.begin(), ef.t_errors.end());
    r.fake_r.insert(r.fake_r.end(), ef.r_errors.begin(), ef.r_errors.end());
    real_ate.push_back(geo::ate(real, seq.source->gt, opt.max_dt));
    fake_ate.push_back(geo::ate(fake, seq.source->gt, opt.max_dt));
  }
  r.ks_t = ks_statistic(r.real_t, r.fake_t);
  r.ks_r = ks_statistic(r.real_r, r.fake_r);
  r.real_ate = mean(real_ate);
  r.fake_ate = mean(fake_ate);
  return r;
}

std::string feature_set(model::Mode mode) {
  switch (mode) {
    case model::Mode::Full: return "imu+thermal+fake_rgb";
    case model::Mode::NoHallucination:
    case model::Mode::ImuThermal: return "imu+thermal";
    case model::Mode::ThermalOnly: return "thermal";
    case model::Mode::ImuOnly: return "imu";
    case model::Mode::ImuFakeRgb: return "imu+fake_rgb";
  }
  return "unknown";
}

std::vector<Variant> parse_variants(const std::string& text) {
  std::vector<Variant> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
    if (item.empty()) continue;
    const auto colon = item.find(':');
    const model::Mode mode = model::parse_mode(item.substr(0, colon));
    if (colon == std::string::npos) {
      out.push_back({mode, true});
      out.push_back({mode, false});
      continue;
    }
    const std::string sf = item.substr(colon + 1);
    if (sf != "on" && sf != "off") throw ConfigError("fusion setting must be 'on' or 'off' in '" + item + "'");
    out.push_back({mode, sf == "on"});
  }
  if (out.empty()) throw ConfigError("no ablation variants given");
  return out;
}

const AblationRow* AblationReport::find(const Variant& v, std::uint64_t seed) const {
  for (const auto& r : rows) {
    if (r.seed == seed && r.variant.selective_fusion == v.selective_fusion &&
        feature_set(r.variant.mode) == feature_set(v.mode)) {
      return &r;
    }
  }
  return nullptr;
}

AblationReport ablate_modalities(const Corpus& corpus, const ExperimentConfig& cfg,
                                 const std::vector<Variant>& variants) {
  cfg.validate();
  AblationReport report;
  report.seeds = cfg.seeds;
  report.config_hash = cfg.hash();
  std::vector<std::vector<AblationRow>> per_seed(cfg.seeds.size());
  const bool halluc = needs_hallucination(variants);
  util::parallel_for(cfg.seeds.size(), [&](std::size_t k) {
    const std::uint64_t seed = cfg.seeds[k];
    std::optional<model::DeepTio> distilled;
    std::string upstream_error;
    try {
      if (halluc) {
        const model::Teacher teacher = train_teacher(corpus, cfg, seed);
        distilled.emplace(distill(teacher, corpus, cfg, seed));
      } else {
        distilled.emplace(model_for(cfg, corpus, seed));
      }
    } catch (const std::exception& e) {
      upstream_error = e.what();
    }
    for (const auto& v : variants) {
      AblationRow row{v, seed, 0.0, 0.0, 0.0, false, {}};
      try {
        if (!distilled) throw Error("pretraining failed: " + upstream_error);
        const model::DeepTio net = train_odometry(*distilled, corpus, cfg, seed, v.mode, v.selective_fusion);
        const auto rows = train::evaluate(net, corpus.test, cfg.eval(v.mode));
        std::vector<double> rt, rr;
        for (const auto& r : rows) rt.push_back(r.rpe_t), rr.push_back(r.rpe_r);
        row.ate = train::mean_ate(rows);
        row.rpe_t = mean(rt);
        row.rpe_r = mean(rr);
      } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
      }
      per_seed[k].push_back(row);
    }
  });
  for (auto& rows : per_seed) report.rows.insert(report.rows.end(), rows.begin(), rows.end());
  return report;
}

FpsCurve fps_sensitivity(const model::DeepTio& student, const ExperimentConfig& cfg, const std::vector<double>& rates,
                         model::Mode mode) {
  if (rates.empty()) throw ConfigError("no sampling rates given");
  FpsCurve curve;
  curve.training_fps = cfg.data.subsample_fps;
  curve.config_hash = cfg.hash();
  for (double fps : rates) {
    sim::DatasetConfig d = cfg.test_data();
    d.subsample_fps = fps;
    d.enforce_imu_ratio = false;
    d.validate();
    const sim::Dataset ds = sim::make_dataset(d);
    const auto data = train::prepare(ds, student.config().norm);
    const auto rows = train::evaluate(student, data, cfg.eval(mode));
    std::vector<double> rt, rr;
    for (const auto& r : rows) rt.push_back(r.rpe_t), rr.push_back(r.rpe_r);
    curve.points.push_back({fps, train::mean_ate(rows), mean(rt), mean(rr)});
  }
  return curve;
}

HuberReport huber_vs_l2(const Corpus& corpus, const ExperimentConfig& cfg, bool control) {
  if (!cfg.data.rig.nuc_enabled) throw ConfigError("rig.nuc_enabled must be true for the Huber/L2 comparison");
  cfg.validate();
  HuberReport report;
  report.config_hash = cfg.hash();
  double frozen = 0.0, total = 0.0;
  for (const auto& seq : corpus.train) {
    for (const auto& s : seq.samples) frozen += s.frozen ? 1.0 : 0.0, total += 1.0;
  }
  report.outlier_fraction = frozen / total;
  std::vector<std::vector<HuberRow>> per_seed(cfg.seeds.size());
  const auto eval = cfg.eval();
  util::parallel_for(cfg.seeds.size(), [&](std::size_t k) {
    const std::uint64_t seed = cfg.seeds[k];
    const model::Teacher teacher = train_teacher(corpus, cfg, seed);
    for (bool outliers : {true, false}) {
      if (!outliers && !control) continue;
      const model::DeepTio h = distill(teacher, corpus, cfg, seed, train::LossKind::Huber, !outliers);
      const model::DeepTio l = distill(teacher, corpus, cfg, seed, train::LossKind::L2, !outliers);
      const auto vh = validate_hallucination(teacher, h, corpus.test, eval);
      const auto vl = validate_hallucination(teacher, l, corpus.test, eval);
      per_seed[k].push_back({seed, outliers, train::feature_error(teacher, h, corpus.test, true),
                             train::feature_error(teacher, l, corpus.test, true), mean(vh.fake_t), mean(vl.fake_t),
                             mean(vh.fake_r), mean(vl.fake_r)});
    }
  });
  for (auto& rows : per_seed) report.rows.insert(report.rows.end(), rows.begin(), rows.end());
  return report;
}

Check check_fusion_benefit(const AblationReport& r, model::Mode mode) {
  Check c{"selective fusion does not raise ATE for " + feature_set(mode), false, {}};
  std::vector<bool> votes;
  for (std::uint64_t seed : r.seeds) {
    const AblationRow* on = r.find({mode, true}, seed);
    const AblationRow* off = r.find({mode, false}, seed);
    if (!on || !off || on->failed || off->failed) {
      votes.push_back(false);
      c.detail += fmt::format("seed {}: missing or failed row; ", seed);
      continue;
    }
    votes.push_back(on->ate <= off->ate);
    c.detail += fmt::format("seed {}: on {:.4f} off {:.4f}; ", seed, on->ate, off->ate);
  }
  c.pass = majority(votes);
  return c;
}

std::vector<Check> check_modality_ordering(const AblationReport& r) {
  Check worse{"thermal ATE > imu+thermal ATE", false, {}};
  Check better{"imu+thermal+fake_rgb ATE <= imu+thermal ATE", false, {}};
  std::vector<bool> v1, v2;
  for (std::uint64_t seed : r.seeds) {
    const AblationRow* th = r.find({model::Mode::ThermalOnly, true}, seed);
    const AblationRow* it = r.find({model::Mode::ImuThermal, true}, seed);
    const AblationRow* full = r.find({model::Mode::Full, true}, seed);
    const bool have_it = it && !it->failed;
    if (have_it && th && !th->failed) {
      v1.push_back(th->ate > it->ate);
      worse.detail += fmt::format("seed {}: {:.4f} vs {:.4f}; ", seed, th->ate, it->ate);
    } else {
      v1.push_back(false);
      worse.detail += fmt::format("seed {}: missing or failed row; ", seed);
    }
    if (have_it && full && !full->failed) {
      v2.push_back(full->ate <= it->ate);
      better.detail += fmt::format("seed {}: {:.4f} vs {:.4f}; ", seed, full->ate, it->ate);
    } else {
      v2.push_back(false);
      better.detail += fmt::format("seed {}: missing or failed row; ", seed);
    }
  }
  worse.pass = majority(v1);
  better.pass = majority(v2);
  return {worse, better};
}

Check check_validation(const ValidationReport& r, double max_ks) {
  return {"KS(real, fake RPE) <= " + fmt::format("{:g}", max_ks), r.ks() <= max_ks,
          fmt::format("KS translation {:.4f}, rotation {:.4f}; ATE real {:.4f} fake {:.4f}", r.ks_t, r.ks_r, r.real_ate,
                      r.fake_ate)};
}

Check check_fps_minimum(const FpsCurve& c) {
  Check out{"ATE is minimal at the training rate", false, {}};
  const FpsPoint* at_training = nullptr;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : c.points) {
    out.detail += fmt::format("{:g} fps: {:.4f}; ", p.fps, p.ate);
    best = std::min(best, p.ate);
    if (std::abs(p.fps - c.training_fps) < 1e-9) at_training = &p;
  }
  out.pass = at_training && at_training->ate <= best;
  if (!at_training) out.detail += "training rate not evaluated";
  return out;
}

Check check_huber(const HuberReport& r) {
  Check c{"Huber student has lower clean feature error than L2", false,
          fmt::format("outlier fraction {:.4f}; ", r.outlier_fraction)};
  std::vector<bool> votes;
  for (const auto& row : r.rows) {
    if (!row.outliers) continue;
    votes.push_back(row.huber_feature_error < row.l2_feature_error);
    c.detail += fmt::format("seed {}: huber {:.6g} l2 {:.6g}; ", row.seed, row.huber_feature_error, row.l2_feature_error);
  }
  c.pass = majority(votes);
  return c;
}

}  // namespace tio::exp
