// Copyright 2026 The DKN Filtering Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Runs the command-line binary as a subprocess.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "dkn/image_io.hpp"

namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code = -1;
  std::string out;  // stdout and stderr
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::map<std::string, std::string> key_values(const fs::path& p) {
  std::map<std::string, std::string> m;
  std::istringstream in(slurp(p));
  for (std::string line; std::getline(in, line);) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) m[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return m;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("dkn_test_cli_" +
            std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Outcome run(const std::string& args) {
    const fs::path log = dir_ / "log.txt";
    const std::string cmd = "cd '" + dir_.string() + "' && '" DKN_CLI_PATH "' " + args +
                            " > '" + log.string() + "' 2>&1";
    const int status = std::system(cmd.c_str());
    Outcome r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(log);
    return r;
  }

  // A 6-pair 32 x 32 dataset (4 train, 2 test).
  void synth() {
    const Outcome r = run("synth --out data --count 6 --test-count 2 --size 32");
    ASSERT_EQ(r.code, 0) << r.out;
  }

  fs::path dir_;
};

TEST_F(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("synth --no-such-flag 3").code, 1);
  EXPECT_EQ(run("synth --count x").code, 1);
  EXPECT_EQ(run("synth --count 4 --test-count 5").code, 1);
  EXPECT_EQ(run("synth --size 30 --scale 4").code, 1);
  EXPECT_EQ(run("train").code, 1);  // --data is required
  EXPECT_EQ(run("selftest --inject-fault everything").code, 1);
}

TEST_F(Cli, SelftestPassesAndDetectsAnInjectedFault) {
  const Outcome ok = run("selftest");
  EXPECT_EQ(ok.code, 0) << ok.out;
  EXPECT_NE(ok.out.find("all checks passed"), std::string::npos);
  const Outcome broken = run("selftest --inject-fault mean_subtraction");
  EXPECT_EQ(broken.code, 3) << broken.out;
  EXPECT_NE(broken.out.find("FAIL  mean_subtract constraint"), std::string::npos)
      << broken.out;
}

TEST_F(Cli, SynthWritesDatasetAndRunMetadata) {
  synth();
  const auto meta = key_values(dir_ / "data" / "metadata.txt");
  EXPECT_EQ(meta.at("subcommand"), "synth");
  EXPECT_EQ(meta.at("seed"), "7");
  EXPECT_FALSE(meta.at("dkn_version").empty());
  EXPECT_FALSE(meta.at("eigen_version").empty());
  EXPECT_FALSE(meta.at("cli11_version").empty());
  EXPECT_EQ(meta.at("config.count"), "6");
  EXPECT_EQ(meta.at("source.count"), "flag");
  EXPECT_EQ(meta.at("source.seed"), "default");
  const std::string manifest = slurp(dir_ / "data" / "manifest.txt");
  EXPECT_NE(manifest.find("split=test guidance=rgb_0005.ppm depth=depth_0005.pfm "
                          "protocol=bicubic scale=4 noise_variance=0"),
            std::string::npos)
      << manifest;
  EXPECT_TRUE(fs::exists(dir_ / "data" / "rgb_0000.ppm"));
  EXPECT_TRUE(fs::exists(dir_ / "data" / "depth_0005.pfm"));
}

TEST_F(Cli, FlagsOverrideConfigOverridesDefaults) {
  std::ofstream(dir_ / "s.cfg") << "# synth settings\ncount = 5\ntest_count=1\nsize=16\n";
  const Outcome r = run("synth --config s.cfg --count 3 --out d");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("count=3  # flag"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("test_count=1  # config"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("seed=7  # default"), std::string::npos) << r.out;
  const auto cfg = key_values(dir_ / "d" / "config.txt");
  EXPECT_EQ(cfg.at("count"), "3");
  EXPECT_EQ(cfg.at("size"), "16");
  // The written config reproduces the run.
  const Outcome again = run("synth --config d/config.txt --out e");
  ASSERT_EQ(again.code, 0) << again.out;
  EXPECT_EQ(slurp(dir_ / "d" / "manifest.txt"), slurp(dir_ / "e" / "manifest.txt"));

  std::ofstream(dir_ / "bad.cfg") << "count=3\ncolour=red\n";
  const Outcome bad = run("synth --config bad.cfg");
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.out.find("bad.cfg:2"), std::string::npos) << bad.out;
  EXPECT_EQ(run("synth --config missing.cfg").code, 1);
}

TEST_F(Cli, TrainEvalFilterRoundTrip) {
  synth();
  const std::string train = "train --data data/manifest.txt --iters 3 --crop 2 --log-every 1";
  const Outcome a = run(train + " --out a");
  ASSERT_EQ(a.code, 0) << a.out;
  ASSERT_EQ(run(train + " --out b").code, 0);
  const auto ma = key_values(dir_ / "a" / "metadata.txt");
  const auto mb = key_values(dir_ / "b" / "metadata.txt");
  EXPECT_EQ(ma.at("checkpoint_digest"), mb.at("checkpoint_digest"));
  EXPECT_EQ(slurp(dir_ / "a" / "model.ckpt"), slurp(dir_ / "b" / "model.ckpt"));
  EXPECT_EQ(ma.at("source.scale"), "manifest");
  EXPECT_EQ(ma.at("iterations_done"), "3");
  EXPECT_TRUE(fs::exists(dir_ / "a" / "report.txt"));

  const Outcome e = run("eval --checkpoint a/model.ckpt --data data/manifest.txt --out ev");
  ASSERT_EQ(e.code, 0) << e.out;
  const auto report = key_values(dir_ / "ev" / "report.kv");
  EXPECT_EQ(report.at("images"), "2");
  // Same noise seed as the post-training evaluation.
  EXPECT_EQ(report.at("mean_rmse"), key_values(dir_ / "a" / "report.kv").at("mean_rmse"));

  const Outcome f = run("filter --checkpoint a/model.ckpt --guidance data/rgb_0004.ppm "
                    "--target data/depth_0004.pfm --out fl");
  ASSERT_EQ(f.code, 0) << f.out;
  const dkn::DecodedImage out = dkn::read_image(dir_ / "fl" / "filtered.pfm");
  EXPECT_EQ(out.pixels.shape(), (dkn::Shape{1, 32, 32}));
  EXPECT_TRUE(out.pixels.all_finite());

  const Outcome s = run("filter --checkpoint a/model.ckpt --mode self --iterations 2 "
                    "--target data/rgb_0004.ppm --out sf --output smooth.ppm");
  ASSERT_EQ(s.code, 0) << s.out;
  EXPECT_EQ(dkn::read_image(dir_ / "sf" / "smooth.ppm").pixels.shape(),
            (dkn::Shape{3, 32, 32}));
  EXPECT_EQ(run("filter --checkpoint a/model.ckpt --target data/depth_0004.pfm "
                "--mode sideways").code, 1);
  EXPECT_EQ(run("filter --checkpoint a/model.ckpt --target data/depth_0004.pfm").code,
            1);  // joint mode needs --guidance
}

TEST_F(Cli, DataErrorsExitWithTwo) {
  synth();
  EXPECT_EQ(run("train --data nowhere/manifest.txt").code, 2);
  std::ofstream(dir_ / "bad_manifest.txt") << "split=train guidance=a.ppm\n";
  EXPECT_EQ(run("train --data bad_manifest.txt").code, 2);
  std::ofstream(dir_ / "junk.ckpt") << "not a checkpoint";
  const Outcome r = run("eval --checkpoint junk.ckpt --data data/manifest.txt");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("byte offset"), std::string::npos) << r.out;
  fs::remove(dir_ / "data" / "depth_0001.pfm");
  EXPECT_EQ(run("train --data data/manifest.txt --iters 1 --crop 2").code, 2);
}

TEST_F(Cli, DivergenceExitsWithThree) {
  synth();
  const Outcome r = run("train --data data/manifest.txt --lr 1e30 --iters 8 --crop 2 --out div");
  EXPECT_EQ(r.code, 3) << r.out;
  EXPECT_NE(r.out.find("diverged"), std::string::npos) << r.out;
  EXPECT_FALSE(key_values(dir_ / "div" / "metadata.txt").at("error").empty());
}

}  // namespace
