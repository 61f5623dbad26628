#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "tio/util/config.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli() {
  const char* p = std::getenv("TIO_CLI");
  return p ? p : "";
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tio_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_tio(const std::string& args) {
  const std::string cmd = "TIO_FORGE_THREADS=1 " + cli() + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

const char* kSmall =
    "[dataset]\nn_sequences = 2\nduration = 4\n"
    "[train]\nepochs = 1\nbatch_size = 2\nsubsequence = 4\ncheckpoint_every = 1\n";

bool same_tree(const fs::path& a, const fs::path& b) {
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file() || e.path().filename() == "manifest.ini") continue;
    const fs::path other = b / fs::relative(e.path(), a);
    if (!fs::exists(other) || slurp(e.path()) != slurp(other)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("binary is available") { REQUIRE_FALSE(cli().empty()); }

TEST_CASE("usage errors map to exit code 2") {
  const fs::path dir = scratch("usage");
  CHECK(run_tio("") == 2);
  CHECK(run_tio("frobnicate") == 2);
  CHECK(run_tio("simulate --out " + (dir / "a").string() + " --config /nonexistent.ini") == 2);
  CHECK(run_tio("simulate --out " + (dir / "b").string() + " --set dataset.duration=-1") == 2);
  CHECK(run_tio("simulate --out " + (dir / "c").string() + " --set novalue") == 2);
  CHECK(run_tio("train --stage bogus --data x --out " + (dir / "d").string()) == 2);
  CHECK(run_tio("--version") == 0);
}

TEST_CASE("simulate writes a dataset with a run manifest and is reproducible") {
  const fs::path dir = scratch("simulate");
  write(dir / "small.ini", kSmall);
  const std::string cfg = " --config " + (dir / "small.ini").string();
  REQUIRE(run_tio("simulate" + cfg + " --seed 11 --out " + (dir / "a").string()) == 0);
  REQUIRE(run_tio("simulate" + cfg + " --seed 11 --out " + (dir / "b").string()) == 0);
  REQUIRE(run_tio("simulate" + cfg + " --seed 12 --out " + (dir / "c").string()) == 0);
  CHECK(same_tree(dir / "a", dir / "b"));
  CHECK_FALSE(same_tree(dir / "a", dir / "c"));

  const auto m = tio::util::KeyValueConfig::read(dir / "a" / "manifest.ini");
  CHECK(m.get_string("run.command", "") == "simulate");
  CHECK(m.get_string("run.config_path", "") == (dir / "small.ini").string());
  CHECK_FALSE(m.get_string("run.tool_version", "").empty());
  CHECK(m.get_uint("dataset.world_seed", 0) == 11);
  CHECK(m.get_string("run.artifacts", "").find(".csv") != std::string::npos);

  SUBCASE("non-empty output directory is refused without --force") {
    CHECK(run_tio("simulate" + cfg + " --out " + (dir / "a").string()) == 2);
    CHECK(run_tio("simulate" + cfg + " --seed 11 --force --out " + (dir / "a").string()) == 0);
  }
  SUBCASE("replay reproduces the artifacts") {
    REQUIRE(run_tio("replay --manifest " + (dir / "a" / "manifest.ini").string() + " --out " + (dir / "r").string()) == 0);
    CHECK(same_tree(dir / "a", dir / "r"));
    CHECK(slurp(dir / "a" / "manifest.ini") == slurp(dir / "r" / "manifest.ini"));
  }
  SUBCASE("replay of a missing manifest is a dependency error") {
    CHECK(run_tio("replay --manifest " + (dir / "none.ini").string() + " --out " + (dir / "r2").string()) == 3);
  }
}

TEST_CASE("staged pipeline, stage order and compatibility") {
  const fs::path dir = scratch("pipeline");
  write(dir / "small.ini", kSmall);
  const std::string cfg = " --config " + (dir / "small.ini").string();
  const std::string data = " --data " + (dir / "data").string();
  REQUIRE(run_tio("simulate" + cfg + " --out " + (dir / "data").string()) == 0);

  // missing upstream stages
  CHECK(run_tio("train --stage hallucination" + cfg + data + " --out " + (dir / "x1").string()) == 3);
  CHECK(run_tio("train --stage odometry" + cfg + data + " --from " + (dir / "nothing").string() + " --out " +
            (dir / "x2").string()) == 3);
  CHECK(run_tio("train --stage teacher" + cfg + " --data " + (dir / "nodata").string() + " --out " + (dir / "x3").string()) == 3);

  REQUIRE(run_tio("train --stage teacher" + cfg + data + " --out " + (dir / "teacher").string()) == 0);
  CHECK(fs::exists(dir / "teacher" / "final.ckpt"));
  CHECK(fs::exists(dir / "teacher" / "metrics.csv"));
  CHECK(fs::exists(dir / "teacher" / "manifest.ini"));

  // a teacher is not a hallucination-stage student
  CHECK(run_tio("train --stage odometry" + cfg + data + " --from " + (dir / "teacher").string() + " --out " +
            (dir / "x4").string()) == 3);

  REQUIRE(run_tio("train --stage hallucination" + cfg + data + " --teacher " + (dir / "teacher").string() + " --out " +
              (dir / "halluc").string()) == 0);
  REQUIRE(run_tio("train --stage odometry" + cfg + data + " --from " + (dir / "halluc" / "final.ckpt").string() +
              " --out " + (dir / "odo").string()) == 0);
  REQUIRE(run_tio("train --stage finetune" + cfg + data + " --set train.finetune_epochs=1 --set train.finetune_rounds=1" +
              " --from " + (dir / "odo").string() + " --out " + (dir / "ft").string()) == 0);

  const auto m = tio::util::KeyValueConfig::read(dir / "odo" / "manifest.ini");
  CHECK(m.get_string("run.input_from", "") == (dir / "halluc" / "final.ckpt").string());
  CHECK(m.get_string("run.option_stage", "") == "odometry");

  REQUIRE(run_tio("eval" + data + " --checkpoint " + (dir / "ft").string() + " --mode full --mode imu_only --baseline" +
              " --out " + (dir / "eval").string()) == 0);
  const std::string table = slurp(dir / "eval" / "metrics.csv");
  CHECK(table.rfind("config_hash,", 0) == 0);
  CHECK(table.find("imu_only") != std::string::npos);
  CHECK(table.find("dead_reckoning") != std::string::npos);
  CHECK(fs::exists(dir / "eval" / "trajectories" / "full"));
  CHECK(fs::exists(dir / "eval" / "plots"));

  REQUIRE(run_tio("eval" + data + " --checkpoint " + (dir / "teacher").string() + " --out " + (dir / "eval_t").string()) == 0);
  CHECK(slurp(dir / "eval_t" / "metrics.csv").find("teacher") != std::string::npos);

  CHECK(run_tio("eval" + data + " --checkpoint " + (dir / "ft").string() + " --mode sideways --out " +
            (dir / "x5").string()) == 2);

  SUBCASE("a dataset with different geometry is incompatible") {
    REQUIRE(run_tio("simulate" + cfg + " --set rig.width=48 --set rig.height=48 --out " + (dir / "other").string()) == 0);
    CHECK(run_tio("eval --data " + (dir / "other").string() + " --checkpoint " + (dir / "ft").string() + " --out " +
              (dir / "x6").string()) == 4);
  }
  SUBCASE("training replays bit-exactly") {
    REQUIRE(run_tio("replay --manifest " + (dir / "odo" / "manifest.ini").string() + " --out " + (dir / "odo_r").string()) == 0);
    CHECK(slurp(dir / "odo" / "final.ckpt") == slurp(dir / "odo_r" / "final.ckpt"));
  }
  SUBCASE("validate-hallucination from checkpoints") {
    const std::string exp_cfg = std::string(kSmall) + "[experiment]\ntest_sequences = 1\n";
    write(dir / "exp.ini", exp_cfg);
    const int code = run_tio("validate-hallucination --config " + (dir / "exp.ini").string() + " --teacher " +
                         (dir / "teacher").string() + " --student " + (dir / "halluc").string() + " --assert --out " +
                         (dir / "val").string());
    CHECK((code == 0 || code == 5));
    CHECK(fs::exists(dir / "val" / "validation.csv"));
    CHECK(fs::exists(dir / "val" / "rpe_translation.svg"));
    CHECK(fs::exists(dir / "val" / "checks.txt"));
  }
}

TEST_CASE("experiment commands validate their inputs") {
  const fs::path dir = scratch("experiments");
  write(dir / "exp.ini", kSmall);
  const std::string cfg = " --config " + (dir / "exp.ini").string();
  CHECK(run_tio("ablate" + cfg + " --variants nonsense --out " + (dir / "a").string()) == 2);
  CHECK(run_tio("fps-sweep" + cfg + " --rates 2,x --out " + (dir / "b").string()) == 2);
  CHECK(run_tio("huber-vs-l2" + cfg + " --out " + (dir / "c").string()) == 2);
  CHECK(run_tio("ablate --out " + (dir / "d").string()) == 2);
  CHECK(run_tio("fps-sweep" + cfg + " --checkpoint " + (dir / "none").string() + " --out " + (dir / "e").string()) == 3);
}
