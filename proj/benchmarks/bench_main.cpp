#include <benchmark/benchmark.h>

#include <random>

#include "tio/geo/trajectory.hpp"
#include "tio/model/inputs.hpp"
#include "tio/model/network.hpp"
#include "tio/num/ops.hpp"
#include "tio/sim/dataset.hpp"
#include "tio/sim/render.hpp"
#include "tio/train/trainer.hpp"

using namespace tio;

namespace {

num::Tensor noise(num::Shape shape, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  num::Tensor t(std::move(shape));
  for (auto& v : t.data()) v = n(rng);
  return t;
}

void BM_Conv2dForwardBackward(benchmark::State& state) {
  const auto c_out = static_cast<std::size_t>(state.range(0));
  const num::Tensor x = noise({6, 16, 16}, 1);
  const num::Tensor w = noise({c_out, 6, 3, 3}, 2, 0.1);
  const num::Tensor b = noise({c_out}, 3, 0.1);
  for (auto _ : state) {
    num::Tape tape;
    const num::Var y = num::conv2d(tape.constant(x), tape.leaf(w), tape.leaf(b), 2, 1);
    tape.backward(num::sum(y));
    benchmark::DoNotOptimize(tape.grad(y));
  }
}
BENCHMARK(BM_Conv2dForwardBackward)->Arg(8)->Arg(16)->Arg(32);

void BM_MatmulForwardBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const num::Tensor a = noise({n, n}, 4), v = noise({n, 1}, 5);
  for (auto _ : state) {
    num::Tape tape;
    const num::Var w = tape.leaf(a);
    tape.backward(num::sum(num::matmul(w, tape.constant(v))));
    benchmark::DoNotOptimize(tape.grad(w));
  }
}
BENCHMARK(BM_MatmulForwardBackward)->Arg(64)->Arg(256);

struct StepFixture {
  model::DeepTio net{model::ModelConfig{}};
  model::StudentInput in;
  StepFixture() {
    const auto& c = net.config();
    in.thermal = noise({2 * c.channels, c.height, c.width}, 6);
    in.imu = noise({c.imu_steps, 6}, 7);
  }
};

void BM_StudentStep(benchmark::State& state) {
  StepFixture f;
  const bool train = state.range(0) != 0;
  for (auto _ : state) {
    num::Tape tape;
    model::Binder bind(tape, f.net.params());
    model::HiddenState h = f.net.zero_state(tape);
    const auto out = f.net.step(bind, f.in, h, {model::Mode::Full, train, 1});
    if (train) {
      tape.backward(num::sum(num::add(num::sum(out.t), num::sum(out.r))));
      f.net.params().zero_grad();
    }
    benchmark::DoNotOptimize(out.t.value());
  }
  state.SetLabel(train ? "forward+backward" : "forward");
}
BENCHMARK(BM_StudentStep)->Arg(0)->Arg(1);

void BM_RenderThermal(benchmark::State& state) {
  const sim::World world = sim::generate_world(3);
  const sim::SensorRig rig;
  const geo::Pose6DoF pose({0.1, 0.2, 0.3}, {0.01, -0.02, 0.3});
  for (auto _ : state) benchmark::DoNotOptimize(sim::render(world, pose, sim::Channel::Thermal, rig));
}
BENCHMARK(BM_RenderThermal);

geo::Trajectory random_walk(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> step(0.0, 0.05);
  std::vector<geo::TimedPose> poses;
  geo::Vec3 p = geo::Vec3::Zero(), r = geo::Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    p += geo::Vec3(step(rng), step(rng), step(rng));
    r += geo::Vec3(step(rng), step(rng), step(rng)) * 0.1;
    poses.push_back({0.1 * static_cast<double>(i), geo::Pose6DoF(p, r)});
  }
  return geo::Trajectory(std::move(poses));
}

void BM_AteRpe(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const geo::Trajectory a = random_walk(n, 1), b = random_walk(n, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(geo::ate(a, b));
    benchmark::DoNotOptimize(geo::rpe(a, b));
  }
  state.SetComplexityN(static_cast<benchmark::IterationCount>(n));
}
BENCHMARK(BM_AteRpe)->RangeMultiplier(4)->Range(64, 4096)->Complexity();

void BM_OdometryEpoch(benchmark::State& state) {
  sim::DatasetConfig dc;
  dc.n_sequences = 1;
  dc.duration = 8.0;
  const sim::Dataset ds = sim::make_dataset(dc);
  model::ModelConfig mc = model::config_for(dc);
  mc.norm = model::compute_normalization(ds);
  const auto data = train::prepare(ds, mc.norm);
  train::TrainConfig tc;
  tc.epochs = 1;
  tc.val_every = 0;
  for (auto _ : state) {
    model::DeepTio net(mc);
    train::train_stage2(net, data, tc);
  }
  state.counters["samples"] = static_cast<double>(ds.sample_count());
}
BENCHMARK(BM_OdometryEpoch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
