#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>

#include "tio/model/checkpoint.hpp"
#include "tio/model/inputs.hpp"
#include "tio/model/network.hpp"
#include "tio/num/gradcheck.hpp"
#include "tio/util/error.hpp"

using namespace tio;
using namespace tio::model;
using num::Tape;
using num::Tensor;
using num::Var;

namespace {

Tensor random_tensor(num::Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> n(0.0, scale);
  for (auto& v : t.data()) v = n(rng);
  return t;
}

StudentInput random_input(const ModelConfig& cfg, std::mt19937_64& rng) {
  StudentInput in;
  in.thermal = random_tensor({2 * cfg.channels, cfg.height, cfg.width}, rng, 0.3);
  in.imu = random_tensor({cfg.imu_steps, 6}, rng);
  return in;
}

void zero_prefix(ParamStore& store, const std::string& prefix) {
  for (std::size_t i : store.with_prefix(prefix)) store[i].value.fill(0.0);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("model dimensions follow the configuration") {
  const ModelConfig desk;
  CHECK(desk.feature_dim() == 64);
  CHECK(desk.imu_dim() == 160);
  CHECK(desk.fused_dim() == 288);
  const ModelConfig paper = ModelConfig::paper_scale();
  CHECK(paper.feature_dim() == 2048);
  CHECK(paper.imu_dim() == 5120);
  CHECK(paper.imu_hidden == 256);
  CHECK(paper.regressor_hidden == 512);
  const ModelConfig tiny = ModelConfig::tiny();
  CHECK(tiny.width == 8);
  CHECK(tiny.feature_dim() <= 32);
  CHECK(tiny.imu_dim() <= 32);

  ModelConfig bad;
  bad.fc_widths = {128, 64, 4};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = ModelConfig();
  bad.feature_pool = 3;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = ModelConfig();
  bad.imu_pool = 5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  util::KeyValueConfig kv;
  desk.store(kv);
  const ModelConfig back = ModelConfig::load(kv);
  CHECK(back.conv_channels == desk.conv_channels);
  CHECK(back.fc_widths == desk.fc_widths);
  CHECK(back.dropout == desk.dropout);
}

TEST_CASE("encoders: zero weights, output length and pair sensitivity") {
  const ModelConfig cfg;
  DeepTio m(cfg);
  std::mt19937_64 rng(3);
  const Tensor pair = random_tensor({6, 16, 16}, rng, 0.3);
  {
    Tape tape;
    Binder bind(tape, m.params());
    const Var a = m.encode_thermal(bind, tape.constant(pair));
    CHECK(a.size() == cfg.feature_dim());
    CHECK(m.encode_hallucination(bind, tape.constant(pair)).size() == cfg.feature_dim());
    CHECK_THROWS_AS(m.encode_thermal(bind, tape.constant(Tensor({6, 8, 8}))), ConfigError);
  }
  int differ = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ModelConfig c = cfg;
    c.init_seed = seed;
    DeepTio net(c);
    const Tensor frame = random_tensor({3, 16, 16}, rng, 0.3);
    const Tensor other = random_tensor({3, 16, 16}, rng, 0.3);
    Tensor same_pair({6, 16, 16}), distinct({6, 16, 16});
    for (std::size_t i = 0; i < 768; ++i) {
      same_pair[i] = same_pair[768 + i] = frame[i];
      distinct[i] = frame[i];
      distinct[768 + i] = other[i];
    }
    Tape tape;
    Binder bind(tape, net.params());
    const Tensor fa = net.encode_thermal(bind, tape.constant(same_pair)).value();
    const Tensor fb = net.encode_thermal(bind, tape.constant(distinct)).value();
    differ += fa == fb ? 0 : 1;
  }
  CHECK(differ == 5);

  zero_prefix(m.params(), "thermal.");
  Tape tape;
  Binder bind(tape, m.params());
  for (double v : m.encode_thermal(bind, tape.constant(pair)).value().data()) CHECK(v == 0.0);
}

TEST_CASE("teacher visual encoder is deterministic and matches the student width") {
  const ModelConfig cfg;
  Teacher t(cfg);
  std::mt19937_64 rng(4);
  const Tensor pair = random_tensor({6, 16, 16}, rng, 0.3);
  Tape tape;
  Binder bind(tape, t.params());
  const Tensor a = t.encode_visual(bind, tape.constant(pair)).value();
  const Tensor b = t.encode_visual(bind, tape.constant(pair)).value();
  CHECK(a == b);
  CHECK(a.size() == DeepTio(cfg).config().feature_dim());
}

TEST_CASE("IMU encoder contracts") {
  ModelConfig cfg;
  DeepTio m(cfg);
  std::mt19937_64 rng(5);
  SUBCASE("zero window and zero biases give a zero hidden trajectory") {
    for (std::size_t i : m.params().with_prefix("imu.")) {
      if (m.params()[i].name.ends_with(".b")) m.params()[i].value.fill(0.0);
    }
    Tape tape;
    Binder bind(tape, m.params());
    HiddenState s = m.zero_state(tape);
    const Var a = m.encode_imu(bind, tape.constant(Tensor({20, 6})), s.imu);
    CHECK(a.size() == cfg.imu_dim());
    CHECK(a.size() == cfg.imu_hidden / cfg.imu_pool * 20);
    for (double v : a.value().data()) CHECK(v == 0.0);
    for (double v : s.imu.h.value().data()) CHECK(v == 0.0);
  }
  SUBCASE("time order matters") {
    int changed = 0;
    for (int trial = 0; trial < 5; ++trial) {
      const Tensor w = random_tensor({20, 6}, rng);
      Tensor rev({20, 6});
      for (std::size_t r = 0; r < 20; ++r) {
        for (std::size_t k = 0; k < 6; ++k) rev.at(r, k) = w.at(19 - r, k);
      }
      Tape tape;
      Binder bind(tape, m.params());
      HiddenState s1 = m.zero_state(tape), s2 = m.zero_state(tape);
      const Tensor a = m.encode_imu(bind, tape.constant(w), s1.imu).value();
      const Tensor b = m.encode_imu(bind, tape.constant(rev), s2.imu).value();
      changed += a == b ? 0 : 1;
    }
    CHECK(changed == 5);
  }
  SUBCASE("wrong window shape") {
    Tape tape;
    Binder bind(tape, m.params());
    HiddenState s = m.zero_state(tape);
    CHECK_THROWS_AS(m.encode_imu(bind, tape.constant(Tensor({19, 6})), s.imu), ContractError);
    CHECK_THROWS_AS(m.encode_imu(bind, tape.constant(Tensor({20, 5})), s.imu), ContractError);
  }
}

TEST_CASE("selective fusion contracts") {
  const ModelConfig cfg;
  DeepTio m(cfg);
  std::mt19937_64 rng(6);
  const std::size_t d = cfg.feature_dim(), di = cfg.imu_dim();

  SUBCASE("zero weights halve every feature") {
    zero_prefix(m.params(), "fusion.");
    Tape tape;
    Binder bind(tape, m.params());
    const Tensor at = random_tensor({d}, rng), ah = random_tensor({d}, rng), ai = random_tensor({di}, rng);
    const FusionResult f = m.fuse(bind, tape.constant(at), tape.constant(ah), tape.constant(ai));
    for (double v : f.m_t.value().data()) CHECK(v == 0.5);
    for (double v : f.m_i.value().data()) CHECK(v == 0.5);
    std::vector<double> expected;
    for (const Tensor* t : {&at, &ah, &ai}) {
      for (double v : t->data()) expected.push_back(0.5 * v);
    }
    CHECK(f.fused.value().values() == expected);
  }
  SUBCASE("zero features give zero output and half masks") {
    Tape tape;
    Binder bind(tape, m.params());
    const FusionResult f = m.fuse(bind, tape.constant(Tensor({d})), tape.constant(Tensor({d})), tape.constant(Tensor({di})));
    for (double v : f.fused.value().data()) CHECK(v == 0.0);
    for (double v : f.m_h.value().data()) CHECK(v == 0.5);
  }
  SUBCASE("masks stay inside (0,1) and keep their order under positive scaling") {
    bool inside = true, ordered = true;
    ParamStore scaled_store = m.params();
    for (std::size_t i : scaled_store.with_prefix("fusion.")) {
      for (auto& v : scaled_store[i].value.data()) v *= 3.0;
    }
    for (int trial = 0; trial < 1000; ++trial) {
      const double scale = trial % 10 == 0 ? 100.0 : 2.0;
      const Tensor at = random_tensor({d}, rng, scale), ah = random_tensor({d}, rng, scale),
                   ai = random_tensor({di}, rng, scale);
      Tape tape;
      Binder bind(tape, m.params());
      const FusionResult f = m.fuse(bind, tape.constant(at), tape.constant(ah), tape.constant(ai));
      for (const Var& mask : {f.m_t, f.m_h, f.m_i}) {
        for (double v : mask.value().data()) inside = inside && v > 0.0 && v < 1.0;
      }
      if (trial < 50) {
        Binder bind2(tape, scaled_store);
        SelectiveFusion sf{scaled_store.index_of("fusion.w_t"), scaled_store.index_of("fusion.w_h"),
                           scaled_store.index_of("fusion.w_i")};
        const FusionResult g = sf.forward(bind2, tape.constant(at), tape.constant(ah), tape.constant(ai));
        const auto a = f.m_t.value().values();
        const auto b = g.m_t.value().values();
        for (std::size_t i = 0; i + 1 < a.size(); ++i) {
          if (a[i] < a[i + 1]) ordered = ordered && b[i] <= b[i + 1];
          if (a[i] > a[i + 1]) ordered = ordered && b[i] >= b[i + 1];
        }
      }
    }
    CHECK(inside);
    CHECK(ordered);
  }
  SUBCASE("fusion off concatenates") {
    ModelConfig off = cfg;
    off.selective_fusion = false;
    DeepTio plain(off);
    Tape tape;
    Binder bind(tape, plain.params());
    const Tensor at = random_tensor({d}, rng), ah = random_tensor({d}, rng), ai = random_tensor({di}, rng);
    const FusionResult f = plain.fuse(bind, tape.constant(at), tape.constant(ah), tape.constant(ai));
    std::vector<double> expected(at.data().begin(), at.data().end());
    expected.insert(expected.end(), ah.data().begin(), ah.data().end());
    expected.insert(expected.end(), ai.data().begin(), ai.data().end());
    CHECK(f.fused.value().values() == expected);
  }
  SUBCASE("wrong feature length") {
    Tape tape;
    Binder bind(tape, m.params());
    CHECK_THROWS_AS(m.fuse(bind, tape.constant(Tensor({d + 1})), tape.constant(Tensor({d})), tape.constant(Tensor({di}))),
                    ConfigError);
  }
}

TEST_CASE("pose regressor contracts") {
  const ModelConfig cfg;
  DeepTio m(cfg);
  std::mt19937_64 rng(7);
  const Tensor a = random_tensor({cfg.fused_dim()}, rng);
  SUBCASE("zero parameters give a zero pose") {
    zero_prefix(m.params(), "regressor.");
    Tape tape;
    Binder bind(tape, m.params());
    HiddenState s = m.zero_state(tape);
    const PoseOutput p = m.regress(bind, tape.constant(a), s.regressor, true, 3);
    for (double v : p.t.value().data()) CHECK(v == 0.0);
    for (double v : p.r.value().data()) CHECK(v == 0.0);
  }
  SUBCASE("evaluation is deterministic, training depends on the dropout seed") {
    Tape tape;
    Binder bind(tape, m.params());
    HiddenState s1 = m.zero_state(tape), s2 = m.zero_state(tape), s3 = m.zero_state(tape), s4 = m.zero_state(tape);
    const Tensor e1 = m.regress(bind, tape.constant(a), s1.regressor, false, 1).t.value();
    const Tensor e2 = m.regress(bind, tape.constant(a), s2.regressor, false, 2).t.value();
    CHECK(e1 == e2);
    const Tensor t1 = m.regress(bind, tape.constant(a), s3.regressor, true, 1).t.value();
    const Tensor t2 = m.regress(bind, tape.constant(a), s4.regressor, true, 2).t.value();
    CHECK_FALSE(t1 == t2);
    CHECK(e1.size() == 3);
  }
  SUBCASE("branches share no parameters") {
    const auto t = m.params().with_prefix("regressor.fc_t");
    const auto r = m.params().with_prefix("regressor.fc_r");
    CHECK(t.size() == 6);
    CHECK(r.size() == 6);
    for (std::size_t i : t) CHECK(std::find(r.begin(), r.end(), i) == r.end());
  }
}

TEST_CASE("forward composes the blocks and honours ablation modes") {
  const ModelConfig cfg;
  DeepTio m(cfg);
  std::mt19937_64 rng(8);
  const StudentInput in = random_input(cfg, rng);

  Tape tape;
  Binder bind(tape, m.params());
  HiddenState s = m.zero_state(tape);
  const StepResult full = m.step(bind, in, s, {Mode::Full, false, 0});

  HiddenState s2 = m.zero_state(tape);
  const Var at = m.encode_thermal(bind, tape.constant(*in.thermal));
  const Var ah = m.encode_hallucination(bind, tape.constant(*in.thermal));
  const Var ai = m.encode_imu(bind, tape.constant(*in.imu), s2.imu);
  const FusionResult f = m.fuse(bind, at, ah, ai);
  const PoseOutput p = m.regress(bind, f.fused, s2.regressor, false, 0);
  CHECK(full.t.value() == p.t.value());
  CHECK(full.r.value() == p.r.value());
  CHECK(full.m_h.value() == f.m_h.value());

  auto run = [&](const StudentInput& input, Mode mode) {
    HiddenState st = m.zero_state(tape);
    const StepResult r = m.step(bind, input, st, {mode, false, 0});
    return std::make_pair(r.t.value(), r.r.value());
  };
  StudentInput other_imu = in;
  other_imu.imu = random_tensor({20, 6}, rng);
  CHECK(run(in, Mode::ThermalOnly) == run(other_imu, Mode::ThermalOnly));
  CHECK_FALSE(run(in, Mode::Full) == run(other_imu, Mode::Full));

  StudentInput other_frames = in;
  other_frames.thermal = random_tensor({6, 16, 16}, rng, 0.3);
  CHECK(run(in, Mode::ImuOnly) == run(other_frames, Mode::ImuOnly));
  CHECK_FALSE(run(in, Mode::ImuThermal) == run(other_frames, Mode::ImuThermal));
  CHECK(run(in, Mode::ImuThermal) == run(in, Mode::NoHallucination));

  StudentInput no_imu = in;
  no_imu.imu.reset();
  HiddenState st = m.zero_state(tape);
  CHECK_THROWS_AS(m.step(bind, no_imu, st, {Mode::Full, false, 0}), ConfigError);
  CHECK_NOTHROW(m.step(bind, no_imu, st, {Mode::ThermalOnly, false, 0}));

  CHECK(parse_mode("imu+thermal") == Mode::ImuThermal);
  CHECK(parse_mode(mode_name(Mode::ImuFakeRgb)) == Mode::ImuFakeRgb);
  CHECK_THROWS_AS(parse_mode("radar"), ConfigError);
}

TEST_CASE("precomputed hallucination features reproduce the encoder path") {
  const ModelConfig cfg;
  DeepTio m(cfg);
  std::mt19937_64 rng(9);
  StudentInput in = random_input(cfg, rng);
  Tape tape;
  Binder bind(tape, m.params());
  HiddenState s1 = m.zero_state(tape), s2 = m.zero_state(tape);
  const Tensor direct = m.step(bind, in, s1, {}).t.value();
  in.a_h = m.encode_hallucination(bind, tape.constant(*in.thermal)).value();
  CHECK(m.step(bind, in, s2, {}).t.value() == direct);
}

TEST_CASE("end-to-end gradients match finite differences on the tiny config") {
  ModelConfig cfg = ModelConfig::tiny();
  DeepTio m(cfg);
  std::mt19937_64 rng(10);
  std::vector<StudentInput> steps;
  for (int k = 0; k < 2; ++k) steps.push_back(random_input(cfg, rng));
  const num::LossBuilder f = [&](Tape& tape) {
    Binder bind(tape, m.params());
    HiddenState s = m.zero_state(tape);
    Var total = tape.constant(Tensor::scalar(0.0));
    for (const auto& in : steps) {
      const StepResult r = m.step(bind, in, s, {Mode::Full, false, 0});
      total = num::add(total, num::add(num::sum(num::huber(r.t, 1.0)), num::scale(num::sum(num::huber(r.r, 1.0)), 0.001)));
      total = num::add(total, num::sum(num::mul(r.t, r.t)));
    }
    return total;
  };
  std::vector<num::Parameter*> params;
  for (auto& p : m.params().all()) params.push_back(&p);
  const auto res = num::finite_diff_check(f, params);
  CHECK(res.coordinates == m.params().count_values());
  CHECK(res.max_rel_error <= 1e-4);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "tio_test_model";
  fs::create_directories(dir);
  ModelConfig cfg;
  cfg.init_seed = 77;
  cfg.norm.thermal_mean = {0.5, 0.5, 0.5};
  cfg.norm.visual_mean = {0.31, 0.29, 0.3};
  cfg.norm.imu_std = {0.1, 0.2, 0.3, 1.5, 1.25, 0.5};
  const DeepTio m(cfg);
  Checkpoint ck = to_checkpoint(m);
  ck.rng_state = "1 2 3";
  ck.tensors.emplace_back("opt.step", Tensor::scalar(4.0));
  save_checkpoint(dir / "a.ckpt", ck);
  const Checkpoint back = load_checkpoint(dir / "a.ckpt");
  CHECK(back.rng_state == "1 2 3");
  REQUIRE(back.find("opt.step"));
  CHECK(back.find("opt.step")->item() == 4.0);
  const DeepTio restored = student_from_checkpoint(back);
  CHECK(restored.params().checksum() == m.params().checksum());
  CHECK(restored.config().norm.imu_std == cfg.norm.imu_std);
  save_checkpoint(dir / "b.ckpt", back);
  CHECK(slurp(dir / "a.ckpt") == slurp(dir / "b.ckpt"));

  CHECK_THROWS_AS(teacher_from_checkpoint(back), CompatibilityError);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), DependencyError);
  {
    std::ofstream os(dir / "bad.ckpt", std::ios::binary);
    os << "TIOCKPT1\x01";
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "bad.ckpt"), FormatError);

  const Teacher t(cfg);
  const Teacher t2 = teacher_from_checkpoint(to_checkpoint(t));
  CHECK(t2.params().checksum() == t.params().checksum());

  ModelConfig wider = cfg;
  wider.regressor_hidden = 32;
  DeepTio other(wider);
  CHECK_THROWS_AS(load_params(back, other.params()), CompatibilityError);
  fs::remove_all(dir);
}

TEST_CASE("teacher visual weights can seed the hallucination encoder") {
  const ModelConfig cfg;
  const Teacher t(cfg);
  DeepTio s(cfg);
  copy_visual_to_hallucination(t, s);
  std::mt19937_64 rng(11);
  const Tensor pair = random_tensor({6, 16, 16}, rng);
  Tape tape;
  Binder bt(tape, const_cast<ParamStore&>(t.params()));
  Binder bs(tape, s.params());
  CHECK(t.encode_visual(bt, tape.constant(pair)).value() == s.encode_hallucination(bs, tape.constant(pair)).value());
}

TEST_CASE("input preparation") {
  sim::DatasetConfig dc;
  dc.n_sequences = 1;
  dc.duration = 4.0;
  const sim::Dataset ds = sim::make_dataset(dc);
  const Normalization n = compute_normalization(ds);
  CHECK(n.thermal_mean.size() == 3);
  CHECK(n.thermal_mean[0] == doctest::Approx(0.5).epsilon(0.05));
  CHECK(n.imu_mean[5] > 5.0);
  const auto& s = ds.sequences[0].samples[0];
  const Tensor pair = prepare_pair(s.thermal_pair, n.thermal_mean);
  CHECK(pair.shape() == num::Shape{6, 16, 16});
  CHECK(pair[0] == (*s.thermal_pair.first)[0] - n.thermal_mean[0]);
  CHECK(pair[3 * 256] == (*s.thermal_pair.second)[0] - n.thermal_mean[0]);
  const Tensor imu = prepare_imu(s.imu_window, n);
  CHECK(imu.at(3, 4) == (s.imu_window.at(3, 4) - n.imu_mean[4]) / n.imu_std[4]);

  ModelConfig cfg = config_for(dc);
  CHECK_NOTHROW(check_compatible(cfg, dc));
  cfg.width = 8;
  CHECK_THROWS_AS(check_compatible(cfg, dc), CompatibilityError);
}
