#include "cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>

#include "tio/exp/experiments.hpp"
#include "tio/exp/plot.hpp"
#include "tio/exp/report.hpp"
#include "tio/geo/tum_io.hpp"
#include "tio/model/checkpoint.hpp"
#include "tio/model/inputs.hpp"
#include "tio/train/trainer.hpp"
#include "tio/util/error.hpp"

#ifndef TIO_VERSION
#define TIO_VERSION "0.0.0"
#endif

namespace tio::cli {

namespace {

namespace fs = std::filesystem;

class AssertionFailed : public Error {
 public:
  using Error::Error;
};

/// Everything needed to run (and later replay) one command.
struct Invocation {
  std::string command;
  std::string config_path;
  util::KeyValueConfig config;  ///< resolved snapshot: file, then --set, then --seed
  std::optional<std::uint64_t> seed;
  fs::path out;
  std::map<std::string, std::string> inputs;   ///< upstream artifact paths
  std::map<std::string, std::string> options;  ///< command flags
  bool force = false;
  bool resume = false;
};

void log(const std::string& msg) { fmt::print(stderr, "[tio] {}\n", msg); }

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_rates(const std::string& text) {
  std::vector<double> out;
  for (const auto& s : split(text, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(s, &used));
      if (used != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      throw ConfigError("--rates entry '" + s + "' is not a number");
    }
  }
  if (out.empty()) throw ConfigError("--rates is empty");
  return out;
}

void apply_seed(Invocation& inv) {
  if (!inv.seed) return;
  const std::uint64_t s = *inv.seed;
  auto& kv = inv.config;
  if (inv.command == "simulate") {
    kv.set("dataset.world_seed", s);
    kv.set("dataset.sequence_seed", s);
    kv.set("rig.fpn_seed", s);
  } else if (inv.command == "train") {
    kv.set("train.seed", s);
    kv.set("model.init_seed", s);
  } else {
    const auto n = std::max<std::size_t>(1, kv.get_sizes("experiment.seeds", {1, 2, 3}).size());
    std::vector<std::size_t> seeds;
    for (std::size_t i = 0; i < n; ++i) seeds.push_back(s + i);
    kv.set_sizes("experiment.seeds", seeds);
  }
}

void prepare_output(const Invocation& inv) {
  if (inv.out.empty()) throw ConfigError("--out is required");
  if (fs::exists(inv.out) && !fs::is_directory(inv.out)) throw ConfigError(inv.out.string() + " is not a directory");
  if (fs::exists(inv.out) && !fs::is_empty(inv.out) && !inv.force && !inv.resume) {
    throw ConfigError("output directory " + inv.out.string() + " is not empty (use --force to overwrite)");
  }
  fs::create_directories(inv.out);
}

std::vector<std::string> artifacts(const fs::path& dir) {
  std::vector<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), dir).generic_string();
    if (rel != "manifest.ini") out.push_back(rel);
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Writes the run manifest, merged into any manifest already in the directory.
void write_manifest(const Invocation& inv) {
  const fs::path path = inv.out / "manifest.ini";
  util::KeyValueConfig m = fs::exists(path) ? util::KeyValueConfig::read(path) : util::KeyValueConfig();
  m.merge(inv.config);
  m.set("run.command", inv.command);
  m.set("run.config_path", inv.config_path);
  m.set("run.tool_version", TIO_VERSION);
  if (inv.seed) m.set("run.seed", *inv.seed);
  for (const auto& [k, v] : inv.inputs) m.set("run.input_" + k, v);
  for (const auto& [k, v] : inv.options) m.set("run.option_" + k, v);
  std::string list;
  for (const auto& a : artifacts(inv.out)) list += (list.empty() ? "" : ",") + a;
  m.set("run.artifacts", list);
  m.write(path);
}

fs::path checkpoint_path(const std::string& given) {
  const fs::path p(given);
  if (fs::is_directory(p)) return p / "final.ckpt";
  return p;
}

std::string required_input(const Invocation& inv, const std::string& name, const std::string& what) {
  const auto it = inv.inputs.find(name);
  if (it == inv.inputs.end() || it->second.empty()) throw DependencyError("missing " + what + " (--" + name + ")");
  return it->second;
}

model::Checkpoint load_stage(const std::string& given, const std::vector<std::string>& stages, const std::string& what) {
  const fs::path p = checkpoint_path(given);
  if (!fs::exists(p)) throw DependencyError("missing " + what + " checkpoint: " + p.string());
  model::Checkpoint ck = model::load_checkpoint(p);
  const std::string stage = ck.config.get_string("train.stage", "");
  if (std::find(stages.begin(), stages.end(), stage) == stages.end()) {
    throw DependencyError(p.string() + " is not a completed " + what + " (stage '" + (stage.empty() ? "none" : stage) +
                          "')");
  }
  return ck;
}

sim::Dataset load_data(const Invocation& inv, const std::string& name = "data") {
  const fs::path dir = required_input(inv, name, "dataset");
  log("reading dataset " + dir.string());
  return sim::read_dataset(dir);
}

train::RunOptions run_options(const Invocation& inv) {
  train::RunOptions o;
  o.run_dir = inv.out;
  o.resume = inv.resume;
  o.on_epoch = [](const train::EpochMetrics& m) {
    log(fmt::format("epoch {} loss {:.6g} lr {:.3g}{}", m.epoch, m.loss, m.lr,
                    std::isnan(m.val_ate) ? "" : fmt::format(" val_ate {:.4f}", m.val_ate)));
  };
  return o;
}

// ---- commands --------------------------------------------------------------

void cmd_simulate(const Invocation& inv) {
  const sim::DatasetConfig cfg = sim::DatasetConfig::load(inv.config);
  prepare_output(inv);
  log(fmt::format("simulating {} sequences of {} s", cfg.n_sequences, cfg.duration));
  const sim::Dataset ds = sim::make_dataset(cfg);
  sim::write_dataset(inv.out, ds);
  log(fmt::format("wrote {} samples to {}", ds.sample_count(), inv.out.string()));
}

void cmd_train(const Invocation& inv) {
  const std::string stage = inv.options.count("stage") ? inv.options.at("stage") : "";
  train::TrainConfig tcfg = train::TrainConfig::load(inv.config);
  const bool sf_override = inv.config.contains("model.selective_fusion");
  const bool sf = inv.config.get_bool("model.selective_fusion", true);

  if (stage == "teacher") {
    const sim::Dataset ds = load_data(inv);
    model::ModelConfig mcfg = model::config_for(ds.config, model::ModelConfig::load(inv.config));
    mcfg.norm = model::compute_normalization(ds);
    prepare_output(inv);
    model::Teacher teacher(mcfg);
    const auto data = train::prepare(ds, mcfg.norm);
    train::train_teacher(teacher, data, tcfg, run_options(inv));
    return;
  }
  if (stage == "hallucination") {
    const model::Checkpoint ck = load_stage(required_input(inv, "teacher", "teacher stage"), {"teacher"}, "teacher stage");
    const model::Teacher teacher = model::teacher_from_checkpoint(ck);
    const sim::Dataset ds = load_data(inv);
    model::check_compatible(teacher.config(), ds.config);
    model::ModelConfig mcfg = teacher.config();
    mcfg.init_seed = inv.config.get_uint("model.init_seed", mcfg.init_seed);
    if (sf_override) mcfg.selective_fusion = sf;
    prepare_output(inv);
    model::DeepTio student(mcfg);
    const auto data = train::prepare(ds, mcfg.norm);
    train::train_stage1(teacher, student, data, tcfg, run_options(inv));
    return;
  }
  if (stage == "odometry" || stage == "finetune") {
    const bool odo = stage == "odometry";
    const std::string upstream = odo ? "hallucination stage" : "odometry stage";
    const model::Checkpoint ck =
        load_stage(required_input(inv, "from", upstream), odo ? std::vector<std::string>{"hallucination"}
                                                              : std::vector<std::string>{"odometry", "finetune"},
                   upstream);
    model::DeepTio student = model::student_from_checkpoint(ck);
    if (sf_override && odo) student.config().selective_fusion = sf;
    const sim::Dataset ds = load_data(inv);
    model::check_compatible(student.config(), ds.config);
    prepare_output(inv);
    const auto data = train::prepare(ds, student.config().norm);
    if (odo) {
      train::train_stage2(student, data, tcfg, run_options(inv));
    } else {
      train::finetune_alternating(student, data, tcfg, run_options(inv));
    }
    return;
  }
  throw ConfigError("--stage must be teacher, hallucination, odometry or finetune");
}

void cmd_eval(const Invocation& inv) {
  const fs::path ckp = checkpoint_path(required_input(inv, "checkpoint", "checkpoint"));
  if (!fs::exists(ckp)) throw DependencyError("missing checkpoint " + ckp.string());
  const model::Checkpoint ck = model::load_checkpoint(ckp);
  const sim::Dataset ds = load_data(inv);
  const bool is_teacher = ck.kind == "teacher";
  std::optional<model::Teacher> teacher;
  std::optional<model::DeepTio> student;
  if (is_teacher) {
    teacher.emplace(model::teacher_from_checkpoint(ck));
  } else {
    student.emplace(model::student_from_checkpoint(ck));
  }
  const model::ModelConfig& mcfg = is_teacher ? teacher->config() : student->config();
  model::check_compatible(mcfg, ds.config);
  prepare_output(inv);

  train::EvalOptions base;
  base.max_dt = std::stod(inv.options.at("max_dt"));
  base.rpe_delta = std::stoul(inv.options.at("rpe_delta"));
  base.reset_every = ck.config.get_uint("train.subsequence", 8);
  const auto data = train::prepare(ds, mcfg.norm);
  const std::vector<std::string> modes = is_teacher ? std::vector<std::string>{"teacher"} : split(inv.options.at("modes"), ',');

  std::vector<exp::EvalRow> rows;
  std::map<std::string, std::vector<std::pair<std::string, geo::Trajectory>>> overlays;
  for (const auto& seq : data) overlays[seq.source->name].emplace_back("ground truth", seq.source->gt);
  for (const auto& name : modes) {
    train::EvalOptions opt = base;
    if (!is_teacher) opt.mode = model::parse_mode(name);
    const std::string label = is_teacher ? name : model::mode_name(opt.mode);
    for (const auto& seq : data) {
      const auto rels = is_teacher ? train::predict(*teacher, seq, opt) : train::predict(*student, seq, opt);
      const geo::Trajectory est = train::integrate_sequence(*seq.source, rels);
      fs::create_directories(inv.out / "trajectories" / label);
      geo::write_tum(inv.out / "trajectories" / label / (seq.source->name + ".txt"), est);
      rows.push_back({label, train::score(*seq.source, est, opt)});
      overlays[seq.source->name].emplace_back(label, est);
    }
  }
  if (inv.options.count("baseline") && inv.options.at("baseline") == "true") {
    for (const auto& seq : data) {
      const geo::Trajectory dr = train::dead_reckoning(*seq.source);
      rows.push_back({"dead_reckoning", train::score(*seq.source, dr, base)});
    }
  }
  fs::create_directories(inv.out / "plots");
  for (const auto& [name, trajs] : overlays) {
    exp::write_trajectory_plot(inv.out / "plots" / (name + ".svg"), "Trajectory " + name, trajs);
  }
  util::KeyValueConfig sig;
  mcfg.store(sig);
  exp::write_eval_table(inv.out / "metrics.csv", util::fnv1a_hex(sig.str() + ds.config.hash()), rows);
  for (const auto& r : rows) {
    log(fmt::format("{:<16} {}  ATE {:.4f} m  RPE {:.4f} m {:.3f} deg", r.mode, r.metrics.sequence, r.metrics.ate,
                    r.metrics.rpe_t, r.metrics.rpe_r));
  }
}

void finish_checks(const Invocation& inv, const std::vector<exp::Check>& checks) {
  exp::append_checks(inv.out / "checks.txt", checks);
  bool ok = true;
  for (const auto& c : checks) {
    log(fmt::format("{} {}: {}", c.pass ? "PASS" : "FAIL", c.name, c.detail));
    ok = ok && c.pass;
  }
  if (!ok && inv.options.count("assert") && inv.options.at("assert") == "true") {
    throw AssertionFailed("directional assertion failed; see checks.txt");
  }
}

void cmd_ablate(const Invocation& inv) {
  const exp::ExperimentConfig cfg = exp::ExperimentConfig::load(inv.config);
  const auto variants = exp::parse_variants(inv.options.at("variants"));
  prepare_output(inv);
  log("generating datasets");
  const exp::Corpus corpus = exp::make_corpus(cfg);
  log(fmt::format("training {} variants x {} seeds", variants.size(), cfg.seeds.size()));
  const auto report = exp::ablate_modalities(corpus, cfg, variants);
  exp::write_ablation_report(inv.out, report);
  std::vector<exp::Check> checks;
  std::vector<model::Mode> sets;
  for (const auto& v : variants) {
    if (std::none_of(sets.begin(), sets.end(), [&](model::Mode m) { return exp::feature_set(m) == exp::feature_set(v.mode); })) {
      sets.push_back(v.mode);
    }
  }
  for (model::Mode m : sets) {
    const bool both = std::any_of(variants.begin(), variants.end(), [&](const exp::Variant& v) { return exp::feature_set(v.mode) == exp::feature_set(m) && v.selective_fusion; }) &&
                      std::any_of(variants.begin(), variants.end(), [&](const exp::Variant& v) { return exp::feature_set(v.mode) == exp::feature_set(m) && !v.selective_fusion; });
    if (both) checks.push_back(exp::check_fusion_benefit(report, m));
  }
  auto has = [&](model::Mode m) {
    return std::any_of(variants.begin(), variants.end(),
                       [&](const exp::Variant& v) { return exp::feature_set(v.mode) == exp::feature_set(m) && v.selective_fusion; });
  };
  const auto ordering = exp::check_modality_ordering(report);
  if (has(model::Mode::ThermalOnly) && has(model::Mode::ImuThermal)) checks.push_back(ordering[0]);
  if (has(model::Mode::Full) && has(model::Mode::ImuThermal)) checks.push_back(ordering[1]);
  for (const auto& r : report.rows) {
    if (r.failed) log(fmt::format("row {} seed {} failed: {}", exp::feature_set(r.variant.mode), r.seed, r.error));
  }
  finish_checks(inv, checks);
}

struct Pipeline {
  model::Teacher teacher;
  model::DeepTio student;
};

Pipeline train_pipeline(const exp::Corpus& corpus, const exp::ExperimentConfig& cfg) {
  const std::uint64_t seed = cfg.seeds.front();
  log(fmt::format("training teacher (seed {})", seed));
  model::Teacher teacher = exp::train_teacher(corpus, cfg, seed);
  log("distilling hallucination encoder");
  model::DeepTio distilled = exp::distill(teacher, corpus, cfg, seed);
  return {std::move(teacher), std::move(distilled)};
}

void cmd_fps_sweep(const Invocation& inv) {
  const exp::ExperimentConfig cfg = exp::ExperimentConfig::load(inv.config);
  std::vector<double> rates;
  if (inv.options.count("rates") && !inv.options.at("rates").empty()) {
    rates = parse_rates(inv.options.at("rates"));
  } else {
    for (double m : {0.5, 1.0, 2.0, 3.0}) rates.push_back(m * cfg.data.subsample_fps);
  }
  for (double r : rates) {
    sim::DatasetConfig d = cfg.test_data();
    d.subsample_fps = r;
    d.enforce_imu_ratio = false;
    d.validate();
  }
  std::optional<model::DeepTio> student;
  if (inv.inputs.count("checkpoint")) {
    student.emplace(model::student_from_checkpoint(
        load_stage(inv.inputs.at("checkpoint"), {"odometry", "finetune"}, "odometry stage")));
    model::check_compatible(student->config(), cfg.data);
    prepare_output(inv);
  } else {
    prepare_output(inv);
    const exp::Corpus corpus = exp::make_corpus(cfg);
    Pipeline p = train_pipeline(corpus, cfg);
    log("training odometry");
    student.emplace(exp::train_odometry(p.student, corpus, cfg, cfg.seeds.front(), model::Mode::Full, true));
  }
  const auto curve = exp::fps_sensitivity(*student, cfg, rates);
  exp::write_fps_report(inv.out, curve);
  finish_checks(inv, {exp::check_fps_minimum(curve)});
}

void cmd_validate(const Invocation& inv) {
  const exp::ExperimentConfig cfg = exp::ExperimentConfig::load(inv.config);
  exp::ValidationReport report;
  if (inv.inputs.count("teacher") || inv.inputs.count("student")) {
    const model::Teacher teacher = model::teacher_from_checkpoint(
        load_stage(required_input(inv, "teacher", "teacher stage"), {"teacher"}, "teacher stage"));
    const model::DeepTio student = model::student_from_checkpoint(load_stage(
        required_input(inv, "student", "hallucination stage"), {"hallucination", "odometry", "finetune"},
        "hallucination stage"));
    model::check_compatible(teacher.config(), cfg.data);
    prepare_output(inv);
    const sim::Dataset test = sim::make_dataset(cfg.test_data());
    const auto data = train::prepare(test, teacher.config().norm);
    report = exp::validate_hallucination(teacher, student, data, cfg.eval());
  } else {
    prepare_output(inv);
    const exp::Corpus corpus = exp::make_corpus(cfg);
    const Pipeline p = train_pipeline(corpus, cfg);
    report = exp::validate_hallucination(p.teacher, p.student, corpus.test, cfg.eval());
  }
  report.config_hash = cfg.hash();
  exp::write_validation_report(inv.out, report);
  finish_checks(inv, {exp::check_validation(report)});
}

void cmd_huber(const Invocation& inv) {
  const exp::ExperimentConfig cfg = exp::ExperimentConfig::load(inv.config);
  if (!cfg.data.rig.nuc_enabled) throw ConfigError("rig.nuc_enabled must be true for huber-vs-l2");
  prepare_output(inv);
  const exp::Corpus corpus = exp::make_corpus(cfg);
  const bool control = !(inv.options.count("control") && inv.options.at("control") == "false");
  const auto report = exp::huber_vs_l2(corpus, cfg, control);
  exp::write_huber_report(inv.out, report);
  finish_checks(inv, {exp::check_huber(report)});
}

void execute(const Invocation& inv) {
  if (inv.command == "simulate") {
    cmd_simulate(inv);
  } else if (inv.command == "train") {
    cmd_train(inv);
  } else if (inv.command == "eval") {
    cmd_eval(inv);
  } else if (inv.command == "ablate") {
    cmd_ablate(inv);
  } else if (inv.command == "fps-sweep") {
    cmd_fps_sweep(inv);
  } else if (inv.command == "validate-hallucination") {
    cmd_validate(inv);
  } else if (inv.command == "huber-vs-l2") {
    cmd_huber(inv);
  } else {
    throw ConfigError("unknown command '" + inv.command + "'");
  }
  write_manifest(inv);
}

/// Rebuilds an invocation from a manifest written by an earlier run.
Invocation from_manifest(const fs::path& path, const fs::path& out) {
  if (!fs::exists(path)) throw DependencyError("missing manifest " + path.string());
  const util::KeyValueConfig m = util::KeyValueConfig::read(path);
  Invocation inv;
  inv.command = m.require_string("run.command");
  inv.config_path = m.get_string("run.config_path", "");
  inv.out = out;
  for (const auto& key : m.keys()) {
    const auto dot = key.find('.');
    const std::string section = key.substr(0, dot), name = key.substr(dot + 1);
    const std::string value = m.get_string(key, "");
    if (section == "run") {
      if (name.starts_with("input_")) inv.inputs[name.substr(6)] = value;
      if (name.starts_with("option_")) inv.options[name.substr(7)] = value;
      if (name == "seed") inv.seed = m.get_uint(key, 0);
    } else if (section != "manifest") {
      inv.config.set(key, value);
    }
  }
  return inv;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const AssertionFailed*>(&e)) return kAssertionFailed;
  if (dynamic_cast<const ConfigError*>(&e)) return kConfigError;
  if (dynamic_cast<const DependencyError*>(&e)) return kDependencyError;
  if (dynamic_cast<const CompatibilityError*>(&e)) return kCompatibilityError;
  return kFailure;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Thermal-inertial odometry: simulation, training, evaluation and experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", TIO_VERSION);

  Invocation inv;
  std::string config_file;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  std::string out;
  std::map<std::string, std::string> in;
  bool force = false;

  auto common = [&](CLI::App* cmd, bool needs_config) {
    auto* c = cmd->add_option("--config", config_file, "key = value configuration file")->check(CLI::ExistingFile);
    if (needs_config) c->required();
    cmd->add_option("--set", sets, "override a configuration key: section.key=value")->take_all();
    cmd->add_option("--seed", seed, "override every seed the command consumes");
    cmd->add_option("--out", out, "output directory")->required();
    cmd->add_flag("--force", force, "allow writing into a non-empty output directory");
  };

  auto* simulate = app.add_subcommand("simulate", "generate a synthetic dataset");
  common(simulate, false);

  auto* trn = app.add_subcommand("train", "run one training stage");
  common(trn, false);
  std::string stage;
  bool resume = false;
  trn->add_option("--stage", stage, "teacher | hallucination | odometry | finetune")
      ->required()
      ->check(CLI::IsMember({"teacher", "hallucination", "odometry", "finetune"}));
  trn->add_option("--data", in["data"], "dataset directory")->required();
  trn->add_option("--teacher", in["teacher"], "teacher run directory or checkpoint (hallucination stage)");
  trn->add_option("--from", in["from"], "previous stage run directory or checkpoint");
  trn->add_flag("--resume", resume, "continue an interrupted run in --out");

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  common(ev, false);
  std::vector<std::string> modes;
  double max_dt = 0.1;
  std::size_t rpe_delta = 1;
  bool baseline = false;
  ev->add_option("--checkpoint", in["checkpoint"], "checkpoint or run directory")->required();
  ev->add_option("--data", in["data"], "dataset directory")->required();
  ev->add_option("--mode", modes, "feature set(s) to evaluate (default full)");
  ev->add_option("--max-dt", max_dt, "association tolerance in seconds")->check(CLI::PositiveNumber);
  ev->add_option("--rpe-delta", rpe_delta, "RPE window in frames")->check(CLI::PositiveNumber);
  ev->add_flag("--baseline", baseline, "add IMU dead-reckoning rows");

  bool assert_mode = false;
  auto* ablate = app.add_subcommand("ablate", "feature-set and selective-fusion ablation");
  common(ablate, true);
  std::string variants = "thermal,imu+thermal,imu+fake_rgb,imu+thermal+fake_rgb";
  ablate->add_option("--variants", variants, "comma list of set[:on|off]");
  ablate->add_flag("--assert", assert_mode, "exit 5 when a directional claim fails");

  auto* fps = app.add_subcommand("fps-sweep", "ATE against image sampling rate");
  common(fps, true);
  std::string rates;
  fps->add_option("--rates", rates, "comma list of rates in fps (default 0.5,1,2,3 x training rate)");
  fps->add_option("--checkpoint", in["checkpoint"], "trained odometry checkpoint (otherwise one is trained)");
  fps->add_flag("--assert", assert_mode, "exit 5 when the training rate is not the minimum");

  auto* val = app.add_subcommand("validate-hallucination", "compare real and hallucinated features through the teacher");
  common(val, true);
  val->add_option("--teacher", in["teacher"], "teacher checkpoint");
  val->add_option("--student", in["student"], "student checkpoint");
  val->add_flag("--assert", assert_mode, "exit 5 when the KS statistic exceeds 0.15");

  auto* hub = app.add_subcommand("huber-vs-l2", "robustness of the distillation loss to NUC outliers");
  common(hub, true);
  bool no_control = false;
  hub->add_flag("--no-control", no_control, "skip the run without outliers");
  hub->add_flag("--assert", assert_mode, "exit 5 when Huber does not beat L2");

  auto* replay = app.add_subcommand("replay", "re-run a command from its manifest");
  std::string manifest;
  replay->add_option("--manifest", manifest, "manifest.ini of an earlier run")->required();
  replay->add_option("--out", out, "output directory")->required();
  replay->add_flag("--force", force, "allow writing into a non-empty output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (replay->parsed()) {
      inv = from_manifest(manifest, out);
      inv.force = force;
      execute(inv);
      return kOk;
    }
    CLI::App* cmd = app.get_subcommands().front();
    inv.command = cmd->get_name();
    inv.config_path = config_file;
    inv.out = out;
    inv.force = force;
    inv.resume = resume;
    if (!config_file.empty()) inv.config = util::KeyValueConfig::read(config_file);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || s.find('.') > eq) throw ConfigError("--set expects section.key=value, got '" + s + "'");
      inv.config.set(s.substr(0, eq), s.substr(eq + 1));
    }
    if (cmd->count("--seed")) inv.seed = seed;
    apply_seed(inv);
    for (const auto& [k, v] : in) {
      if (!v.empty()) inv.inputs[k] = v;
    }
    if (inv.command == "train") inv.options["stage"] = stage;
    if (inv.command == "eval") {
      std::string joined;
      for (const auto& m : modes.empty() ? std::vector<std::string>{"full"} : modes) {
        model::parse_mode(m);
        joined += (joined.empty() ? "" : ",") + m;
      }
      inv.options["modes"] = joined;
      inv.options["max_dt"] = fmt::format("{:.17g}", max_dt);
      inv.options["rpe_delta"] = std::to_string(rpe_delta);
      inv.options["baseline"] = baseline ? "true" : "false";
    }
    if (inv.command == "ablate") inv.options["variants"] = variants;
    if (inv.command == "fps-sweep") inv.options["rates"] = rates;
    if (inv.command == "huber-vs-l2") inv.options["control"] = no_control ? "false" : "true";
    if (inv.command == "ablate" || inv.command == "fps-sweep" || inv.command == "validate-hallucination" ||
        inv.command == "huber-vs-l2") {
      inv.options["assert"] = assert_mode ? "true" : "false";
    }
    execute(inv);
    return kOk;
  } catch (const std::exception& e) {
    const int code = exit_code_for(e);
    fmt::print(stderr, "tio {}: error: {}\n", inv.command.empty() ? "replay" : inv.command, e.what());
    return code;
  }
}

}  // namespace tio::cli
