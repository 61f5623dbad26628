#include "tio/train/trainer.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "tio/model/checkpoint.hpp"
#include "tio/sim/world.hpp"
#include "tio/train/evaluate.hpp"
#include "tio/train/losses.hpp"
#include "tio/train/optim.hpp"
#include "tio/util/error.hpp"

namespace tio::train {

namespace {

namespace fs = std::filesystem;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct StageSpec {
  std::string stage;
  std::uint64_t stream = 0;
  model::ParamStore* params = nullptr;
  std::function<model::Checkpoint()> pack;
  /// Accumulates gradients of weight * (chunk loss sum); returns the unweighted sum.
  std::function<double(const Chunk&, std::uint64_t seed, double weight)> chunk;
  std::function<double(std::size_t epoch)> lr;
  std::function<void(std::size_t epoch)> begin_epoch;
  std::function<double()> validate;
  std::size_t epochs = 0;
};

void shuffle(std::vector<std::size_t>& order, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
}

model::Checkpoint snapshot(const StageSpec& spec, const TrainConfig& cfg, const Optimizer& opt,
                           const std::vector<EpochMetrics>& history) {
  model::Checkpoint ck = spec.pack();
  cfg.store(ck.config);
  ck.config.set("train.stage", spec.stage);
  ck.rng_state = "epoch " + std::to_string(history.size());
  ck.tensors.emplace_back("train.epoch", num::Tensor::scalar(static_cast<double>(history.size())));
  if (!history.empty()) {
    num::Tensor h({history.size(), 4});
    for (std::size_t i = 0; i < history.size(); ++i) {
      h.at(i, 0) = static_cast<double>(history[i].epoch);
      h.at(i, 1) = history[i].loss;
      h.at(i, 2) = history[i].val_ate;
      h.at(i, 3) = history[i].lr;
    }
    ck.tensors.emplace_back("train.history", h);
  }
  opt.save(ck);
  return ck;
}

std::vector<EpochMetrics> restore(const model::Checkpoint& ck, const StageSpec& spec, const TrainConfig& cfg,
                                  Optimizer& opt) {
  if (ck.config.get_string("train.stage", "") != spec.stage) {
    throw CompatibilityError("resume checkpoint belongs to stage '" + ck.config.get_string("train.stage", "?") +
                             "', not '" + spec.stage + "'");
  }
  util::KeyValueConfig now;
  cfg.store(now);
  for (const auto& key : now.keys()) {
    if (key == "train.epochs") continue;
    if (ck.config.get_string(key, "") != now.get_string(key, "")) {
      throw CompatibilityError("cannot resume: " + key + " differs from the interrupted run");
    }
  }
  model::load_params(ck, *spec.params);
  opt.load(ck);
  std::vector<EpochMetrics> history;
  if (const num::Tensor* h = ck.find("train.history")) {
    for (std::size_t i = 0; i < h->dim(0); ++i) {
      history.push_back({static_cast<std::size_t>(h->at(i, 0)), h->at(i, 1), h->at(i, 2), h->at(i, 3)});
    }
  }
  return history;
}

TrainResult run(StageSpec& spec, Optimizer& opt, const std::vector<Chunk>& chunks, const TrainConfig& cfg,
                const RunOptions& opts) {
  cfg.validate();
  if (chunks.empty()) throw ContractError("no training samples");
  TrainResult result;
  const bool files = !opts.run_dir.empty();
  if (files) {
    fs::create_directories(opts.run_dir);
    const fs::path last = opts.run_dir / "last.ckpt";
    if (opts.resume && fs::exists(last)) result.history = restore(model::load_checkpoint(last), spec, cfg, opt);
    util::KeyValueConfig snap = spec.pack().config;
    cfg.store(snap);
    snap.set("train.stage", spec.stage);
    snap.write(opts.run_dir / "config.ini");
  }

  std::vector<std::size_t> order(chunks.size());
  for (std::size_t epoch = result.history.size() + 1; epoch <= spec.epochs; ++epoch) {
    if (opts.stop_after && result.history.size() >= opts.stop_after) return result;
    if (spec.begin_epoch) spec.begin_epoch(epoch);
    const std::uint64_t epoch_seed = sim::derive_seed(cfg.seed, spec.stream * 1000003ULL + epoch);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle(order, epoch_seed);
    const double lr = spec.lr(epoch);

    double loss_sum = 0.0, count = 0.0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::size_t e = std::min(order.size(), b + cfg.batch_size);
      double samples = 0.0;
      for (std::size_t k = b; k < e; ++k) samples += static_cast<double>(chunks[order[k]].length);
      spec.params->zero_grad();
      for (std::size_t k = b; k < e; ++k) {
        const double l = spec.chunk(chunks[order[k]], sim::derive_seed(epoch_seed, order[k]), 1.0 / samples);
        if (!std::isfinite(l)) {
          throw NumericError(fmt::format("{} training diverged at epoch {}: non-finite loss", spec.stage, epoch));
        }
        loss_sum += l;
      }
      count += samples;
      opt.step(*spec.params, lr);
    }

    EpochMetrics m{epoch, loss_sum / count, kNaN, lr};
    const bool validate = opts.validation && spec.validate &&
                          ((cfg.val_every > 0 && epoch % cfg.val_every == 0) || epoch == spec.epochs);
    if (validate) m.val_ate = spec.validate();
    result.history.push_back(m);
    if (files) {
      const model::Checkpoint ck = snapshot(spec, cfg, opt, result.history);
      model::save_checkpoint(opts.run_dir / "last.ckpt", ck);
      if (epoch % cfg.checkpoint_every == 0) {
        model::save_checkpoint(opts.run_dir / fmt::format("epoch_{:04d}.ckpt", epoch), ck);
      }
      write_metrics_csv(opts.run_dir / "metrics.csv", result.history);
    }
    if (opts.on_epoch) opts.on_epoch(m);
  }
  if (files) model::save_checkpoint(opts.run_dir / "final.ckpt", snapshot(spec, cfg, opt, result.history));
  result.completed = true;
  return result;
}

double student_chunk(const model::DeepTio& net, model::ParamStore& params, const PreparedSequence& seq,
                     const std::vector<num::Tensor>* a_h, const Chunk& c, const TrainConfig& cfg, std::uint64_t seed,
                     double weight, bool training) {
  const auto ch = model::mode_channels(cfg.mode);
  num::Tape tape;
  model::Binder bind(tape, params);
  model::HiddenState state = net.zero_state(tape);
  num::Var total;
  for (std::size_t i = c.begin; i < c.begin + c.length; ++i) {
    const auto& s = seq.samples[i];
    model::StudentInput in;
    if (ch.thermal) in.thermal = s.thermal;
    if (ch.hallucination) {
      if (a_h) {
        in.a_h = (*a_h)[i];
      } else {
        in.thermal = s.thermal;
      }
    }
    if (ch.imu) in.imu = s.imu;
    const auto r = net.step(bind, in, state, {cfg.mode, training, seed * 64 + (i - c.begin)});
    const num::Var l = pose_loss(r.t, r.r, s.rel, cfg.alpha, cfg.delta, cfg.loss);
    total = total.valid() ? num::add(total, l) : l;
  }
  const double value = total.value().item();
  if (weight != 0.0 && std::isfinite(value)) tape.backward(num::scale(total, weight));
  return value;
}

std::vector<Chunk> chunks_for(const std::vector<PreparedSequence>& data, const TrainConfig& cfg) {
  return make_chunks(data, cfg.subsequence);
}

std::vector<std::vector<num::Tensor>> halluc_cache(const model::DeepTio& student,
                                                  const std::vector<PreparedSequence>& data) {
  std::vector<std::vector<num::Tensor>> out;
  for (const auto& seq : data) out.push_back(hallucinate(student, seq));
  return out;
}

}  // namespace

std::vector<std::vector<num::Tensor>> teacher_features(const model::Teacher& teacher,
                                                       const std::vector<PreparedSequence>& data) {
  auto& params = const_cast<model::ParamStore&>(teacher.params());
  std::vector<std::vector<num::Tensor>> out;
  for (const auto& seq : data) {
    std::vector<num::Tensor> feats;
    for (const auto& s : seq.samples) {
      num::Tape tape;
      model::Binder bind(tape, params);
      feats.push_back(teacher.encode_visual(bind, tape.constant(s.visual)).value());
    }
    out.push_back(std::move(feats));
  }
  return out;
}

void write_metrics_csv(const fs::path& path, const std::vector<EpochMetrics>& history) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os << "epoch,loss,val_ate,lr\n";
  for (const auto& m : history) os << fmt::format("{},{:.17g},{:.17g},{:.17g}\n", m.epoch, m.loss, m.val_ate, m.lr);
}

TrainResult train_teacher(model::Teacher& teacher, const std::vector<PreparedSequence>& data, const TrainConfig& cfg,
                          const RunOptions& opts) {
  auto& params = teacher.params();
  params.set_trainable("", true);
  RmsProp opt(params, cfg.rmsprop_rho, cfg.eps);
  StageSpec spec;
  spec.stage = "teacher";
  spec.stream = 1;
  spec.params = &params;
  spec.epochs = cfg.epochs;
  spec.pack = [&] { return model::to_checkpoint(teacher); };
  spec.lr = [&](std::size_t e) { return step_lr(cfg.rmsprop_lr, cfg.lr_decay, cfg.decay_every, e); };
  spec.chunk = [&](const Chunk& c, std::uint64_t seed, double weight) {
    const auto& seq = data[c.sequence];
    num::Tape tape;
    model::Binder bind(tape, params);
    model::HiddenState state = teacher.zero_state(tape);
    num::Var total;
    for (std::size_t i = c.begin; i < c.begin + c.length; ++i) {
      const auto& s = seq.samples[i];
      const auto r = teacher.step(bind, {s.visual, s.imu, std::nullopt}, state, {model::Mode::Full, true, seed * 64 + (i - c.begin)});
      const num::Var l = pose_loss(r.t, r.r, s.rel, cfg.alpha, cfg.delta, cfg.loss);
      total = total.valid() ? num::add(total, l) : l;
    }
    const double value = total.value().item();
    if (std::isfinite(value)) tape.backward(num::scale(total, weight));
    return value;
  };
  spec.validate = [&] {
    EvalOptions eo;
    eo.reset_every = cfg.subsequence;
    return mean_ate(evaluate(teacher, *opts.validation, eo));
  };
  return run(spec, opt, chunks_for(data, cfg), cfg, opts);
}

TrainResult train_stage1(const model::Teacher& teacher, model::DeepTio& student,
                         const std::vector<PreparedSequence>& data, const TrainConfig& cfg, const RunOptions& opts) {
  if (teacher.config().feature_dim() != student.config().feature_dim()) {
    throw ConfigError("teacher and student feature widths differ");
  }
  student.config().norm = teacher.config().norm;
  auto& params = student.params();
  params.set_trainable("", false);
  params.set_trainable("halluc.", true);
  const auto targets = teacher_features(teacher, data);
  Adam opt(params, cfg.adam_beta1, cfg.adam_beta2, cfg.eps);
  StageSpec spec;
  spec.stage = "hallucination";
  spec.stream = 2;
  spec.params = &params;
  spec.epochs = cfg.epochs;
  spec.pack = [&] { return model::to_checkpoint(student); };
  spec.lr = [&](std::size_t) { return cfg.adam_lr; };
  spec.chunk = [&](const Chunk& c, std::uint64_t, double weight) {
    const auto& seq = data[c.sequence];
    num::Tape tape;
    model::Binder bind(tape, params);
    num::Var total;
    for (std::size_t i = c.begin; i < c.begin + c.length; ++i) {
      const num::Var a_h = student.encode_hallucination(bind, tape.constant(seq.samples[i].thermal));
      const num::Var l = feature_loss(a_h, targets[c.sequence][i], cfg.delta, cfg.loss);
      total = total.valid() ? num::add(total, l) : l;
    }
    const double value = total.value().item();
    if (std::isfinite(value)) tape.backward(num::scale(total, weight));
    return value;
  };
  spec.validate = [&] {
    EvalOptions eo;
    eo.reset_every = cfg.subsequence;
    std::vector<SequenceMetrics> rows;
    for (const auto& seq : *opts.validation) {
      const auto feats = hallucinate(student, seq);
      const auto rels = predict(teacher, seq, eo, &feats);
      rows.push_back(score(*seq.source, integrate_sequence(*seq.source, rels), eo));
    }
    return mean_ate(rows);
  };
  TrainResult r = run(spec, opt, chunks_for(data, cfg), cfg, opts);
  params.set_trainable("", true);
  return r;
}

TrainResult train_stage2(model::DeepTio& student, const std::vector<PreparedSequence>& data, const TrainConfig& cfg,
                         const RunOptions& opts) {
  auto& params = student.params();
  params.set_trainable("", true);
  params.set_trainable("halluc.", false);
  const auto cache = halluc_cache(student, data);
  RmsProp opt(params, cfg.rmsprop_rho, cfg.eps);
  StageSpec spec;
  spec.stage = "odometry";
  spec.stream = 3;
  spec.params = &params;
  spec.epochs = cfg.epochs;
  spec.pack = [&] { return model::to_checkpoint(student); };
  spec.lr = [&](std::size_t e) { return step_lr(cfg.rmsprop_lr, cfg.lr_decay, cfg.decay_every, e); };
  spec.chunk = [&](const Chunk& c, std::uint64_t seed, double weight) {
    return student_chunk(student, params, data[c.sequence], &cache[c.sequence], c, cfg, seed, weight, true);
  };
  spec.validate = [&] {
    EvalOptions eo;
    eo.mode = cfg.mode;
    eo.reset_every = cfg.subsequence;
    return mean_ate(evaluate(student, *opts.validation, eo));
  };
  TrainResult r = run(spec, opt, chunks_for(data, cfg), cfg, opts);
  params.set_trainable("", true);
  return r;
}

TrainResult finetune_alternating(model::DeepTio& student, const std::vector<PreparedSequence>& data,
                                 const TrainConfig& cfg, const RunOptions& opts) {
  auto& params = student.params();
  const auto cache = halluc_cache(student, data);
  RmsProp opt(params, cfg.rmsprop_rho, cfg.eps);
  StageSpec spec;
  spec.stage = "finetune";
  spec.stream = 4;
  spec.params = &params;
  spec.epochs = 2 * cfg.finetune_rounds * cfg.finetune_epochs;
  spec.pack = [&] { return model::to_checkpoint(student); };
  spec.lr = [&](std::size_t) { return cfg.finetune_lr; };
  spec.begin_epoch = [&](std::size_t epoch) {
    const bool fusion_phase = ((epoch - 1) / cfg.finetune_epochs) % 2 == 0;
    params.set_trainable("", false);
    params.set_trainable(fusion_phase ? "fusion." : "regressor.", true);
  };
  spec.chunk = [&](const Chunk& c, std::uint64_t seed, double weight) {
    return student_chunk(student, params, data[c.sequence], &cache[c.sequence], c, cfg, seed, weight, true);
  };
  spec.validate = [&] {
    EvalOptions eo;
    eo.mode = cfg.mode;
    eo.reset_every = cfg.subsequence;
    return mean_ate(evaluate(student, *opts.validation, eo));
  };
  if (spec.epochs == 0) {
    TrainResult none;
    none.completed = true;
    return none;
  }
  TrainResult r = run(spec, opt, chunks_for(data, cfg), cfg, opts);
  params.set_trainable("", true);
  return r;
}

double validation_loss(const model::DeepTio& student, const std::vector<PreparedSequence>& data,
                       const TrainConfig& cfg) {
  auto& params = const_cast<model::ParamStore&>(student.params());
  double total = 0.0, count = 0.0;
  for (const Chunk& c : make_chunks(data, cfg.subsequence)) {
    total += student_chunk(student, params, data[c.sequence], nullptr, c, cfg, 0, 0.0, false);
    count += static_cast<double>(c.length);
  }
  if (count == 0.0) throw ContractError("no validation samples");
  return total / count;
}

double feature_error(const model::Teacher& teacher, const model::DeepTio& student,
                     const std::vector<PreparedSequence>& data, bool clean_only) {
  auto& tp = const_cast<model::ParamStore&>(teacher.params());
  auto& sp = const_cast<model::ParamStore&>(student.params());
  double total = 0.0, count = 0.0;
  for (const auto& seq : data) {
    for (const auto& s : seq.samples) {
      if (clean_only && s.frozen) continue;
      num::Tape tape;
      model::Binder bt(tape, tp), bs(tape, sp);
      const auto a_v = teacher.encode_visual(bt, tape.constant(s.visual)).value();
      const auto a_h = student.encode_hallucination(bs, tape.constant(s.thermal)).value();
      double e = 0.0;
      for (std::size_t k = 0; k < a_v.size(); ++k) e += (a_h[k] - a_v[k]) * (a_h[k] - a_v[k]);
      total += e / static_cast<double>(a_v.size());
      count += 1.0;
    }
  }
  if (count == 0.0) throw ContractError("no samples for the feature error");
  return total / count;
}

}  // namespace tio::train
