#include "tio/train/evaluate.hpp"

#include "tio/sim/imu.hpp"
#include "tio/util/error.hpp"

namespace tio::train {

namespace {

geo::Pose6DoF to_pose(const num::Var& t, const num::Var& r) {
  const auto& tv = t.value();
  const auto& rv = r.value();
  return {geo::Vec3(tv[0], tv[1], tv[2]), geo::Vec3(rv[0], rv[1], rv[2])};
}

}  // namespace

std::vector<geo::Pose6DoF> predict(const model::DeepTio& net, const PreparedSequence& seq, const EvalOptions& opt) {
  const auto ch = model::mode_channels(opt.mode);
  auto& params = const_cast<model::ParamStore&>(net.params());
  std::vector<geo::Pose6DoF> out;
  out.reserve(seq.samples.size());
  for (std::size_t b = 0; b < seq.samples.size(); b += opt.reset_every) {
    num::Tape tape;
    model::Binder bind(tape, params);
    model::HiddenState state = net.zero_state(tape);
    for (std::size_t i = b; i < std::min(seq.samples.size(), b + opt.reset_every); ++i) {
      const auto& s = seq.samples[i];
      model::StudentInput in;
      if (ch.thermal || ch.hallucination) in.thermal = s.thermal;
      if (ch.imu) in.imu = s.imu;
      const auto r = net.step(bind, in, state, {opt.mode, false, 0});
      out.push_back(to_pose(r.t, r.r));
    }
  }
  return out;
}

std::vector<geo::Pose6DoF> predict(const model::Teacher& net, const PreparedSequence& seq, const EvalOptions& opt,
                                   const std::vector<num::Tensor>* features) {
  if (features && features->size() != seq.samples.size()) throw ContractError("one feature per sample is required");
  auto& params = const_cast<model::ParamStore&>(net.params());
  std::vector<geo::Pose6DoF> out;
  out.reserve(seq.samples.size());
  for (std::size_t b = 0; b < seq.samples.size(); b += opt.reset_every) {
    num::Tape tape;
    model::Binder bind(tape, params);
    model::HiddenState state = net.zero_state(tape);
    for (std::size_t i = b; i < std::min(seq.samples.size(), b + opt.reset_every); ++i) {
      model::TeacherInput in;
      in.imu = seq.samples[i].imu;
      if (features) {
        in.a_v = (*features)[i];
      } else {
        in.visual = seq.samples[i].visual;
      }
      const auto r = net.step(bind, in, state, {model::Mode::Full, false, 0});
      out.push_back(to_pose(r.t, r.r));
    }
  }
  return out;
}

std::vector<num::Tensor> hallucinate(const model::DeepTio& net, const PreparedSequence& seq) {
  auto& params = const_cast<model::ParamStore&>(net.params());
  std::vector<num::Tensor> out;
  out.reserve(seq.samples.size());
  for (const auto& s : seq.samples) {
    num::Tape tape;
    model::Binder bind(tape, params);
    out.push_back(net.encode_hallucination(bind, tape.constant(s.thermal)).value());
  }
  return out;
}

geo::Trajectory integrate_sequence(const sim::Sequence& seq, std::span<const geo::Pose6DoF> rels) {
  return geo::integrate(seq.gt[0].pose, rels, seq.frame_times);
}

SequenceMetrics score(const sim::Sequence& seq, const geo::Trajectory& est, const EvalOptions& opt) {
  SequenceMetrics m;
  m.sequence = seq.name;
  m.ate = geo::ate(est, seq.gt, opt.max_dt);
  const auto r = geo::rpe(est, seq.gt, opt.rpe_delta, opt.max_dt);
  m.rpe_t = r.t_rms;
  m.rpe_r = r.r_rms;
  return m;
}

geo::Trajectory dead_reckoning(const sim::Sequence& seq) {
  const auto& g = seq.gt_imu;
  if (g.size() < 2) throw ContractError("sequence too short for dead reckoning");
  const geo::Vec3 v0 = (g[1].pose.t() - g[0].pose.t()) / (g[1].timestamp - g[0].timestamp);
  return sim::dead_reckon(seq.imu, g[0].pose, v0);
}

std::vector<SequenceMetrics> evaluate(const model::DeepTio& net, const std::vector<PreparedSequence>& data,
                                      const EvalOptions& opt) {
  std::vector<SequenceMetrics> rows;
  for (const auto& seq : data) {
    const auto rels = predict(net, seq, opt);
    rows.push_back(score(*seq.source, integrate_sequence(*seq.source, rels), opt));
  }
  return rows;
}

std::vector<SequenceMetrics> evaluate(const model::Teacher& net, const std::vector<PreparedSequence>& data,
                                      const EvalOptions& opt) {
  std::vector<SequenceMetrics> rows;
  for (const auto& seq : data) {
    const auto rels = predict(net, seq, opt);
    rows.push_back(score(*seq.source, integrate_sequence(*seq.source, rels), opt));
  }
  return rows;
}

std::vector<SequenceMetrics> evaluate_dead_reckoning(const std::vector<PreparedSequence>& data, const EvalOptions& opt) {
  std::vector<SequenceMetrics> rows;
  for (const auto& seq : data) rows.push_back(score(*seq.source, dead_reckoning(*seq.source), opt));
  return rows;
}

double mean_ate(std::span<const SequenceMetrics> rows) {
  if (rows.empty()) throw ContractError("no rows to average");
  double s = 0.0;
  for (const auto& r : rows) s += r.ate;
  return s / static_cast<double>(rows.size());
}

}  // namespace tio::train
