// Copyright 2026 The DCLS Authors.
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

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dcls/config.hpp"
#include "dcls/experiment.hpp"
#include "dcls/random.hpp"
#include "dcls/snn.hpp"

namespace fs = std::filesystem;

using dcls::Config;
using dcls::ConfigError;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("dcls_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

Config tiny_snn_config() {
  auto c = dcls::snn_default_config();
  for (const char* o : {"task.channels=12", "task.classes=3", "task.steps=20", "task.max_offset=6", "task.noise_spikes=1",
                        "task.train_samples=30", "task.test_samples=15", "model.hidden=6", "model.kernel_size=7",
                        "train.epochs=3", "train.batch_size=10", "train.sigma_anneal_epochs=2", "model.sparsity=0.8"})
    c.set_override(o);
  return c;
}

Config tiny_toy2d_config() {
  auto c = dcls::toy2d_default_config();
  for (const char* o : {"task.image_size=12", "task.train_samples=16", "task.test_samples=8", "model.channels=2",
                        "model.dilated_sizes=1,3", "train.epochs=2", "train.batch_size=8"})
    c.set_override(o);
  return c;
}

}  // namespace

TEST_CASE("config: unknown keys and malformed values are rejected") {
  auto c = dcls::snn_default_config();
  CHECK_THROWS_AS(c.set_override("train.no_such_key=1"), ConfigError);
  CHECK_THROWS_AS(c.set_override("train.epochs"), ConfigError);
  CHECK_THROWS_AS(c.set_override("=3"), ConfigError);
  c.set_override(" train.epochs = 7 ");
  CHECK(c.get_size("train.epochs") == 7);
  c.set_override("train.epochs=seven");
  CHECK_THROWS_AS((void)c.get_size("train.epochs"), ConfigError);
  c.set_override("model.batchnorm=maybe");
  CHECK_THROWS_AS((void)c.get_bool("model.batchnorm"), ConfigError);
  c.set_override("model.hidden=32, 16");
  CHECK(c.get_sizes("model.hidden") == std::vector<std::size_t>{32, 16});
  c.set_override("model.hidden=32,,16");
  CHECK_THROWS_AS((void)c.get_sizes("model.hidden"), ConfigError);
}

TEST_CASE("config: ini files load, and unknown sections or keys fail") {
  const auto dir = fresh_dir("config");
  {
    std::ofstream f(dir / "good.ini");
    f << "[train]\nepochs = 4\nmode = no-delays\n";
  }
  auto c = dcls::snn_default_config();
  c.load(dir / "good.ini");
  CHECK(c.get_size("train.epochs") == 4);
  CHECK(c.get_string("train.mode") == "no-delays");
  {
    std::ofstream f(dir / "bad.ini");
    f << "[train]\nepochz = 4\n";
  }
  CHECK_THROWS_AS(c.load(dir / "bad.ini"), ConfigError);
  {
    std::ofstream f(dir / "broken.ini");
    f << "[train\nepochs = 4\n";
  }
  CHECK_THROWS_AS(c.load(dir / "broken.ini"), ConfigError);
}

TEST_CASE("config: the resolved file written beside a run loads back unchanged") {
  const auto dir = fresh_dir("resolved");
  const auto c = tiny_snn_config();
  (void)dcls::run_snn<double>(c, 5, dir);
  auto reloaded = dcls::snn_default_config();
  reloaded.load(dir / "config.ini");
  CHECK(reloaded.values() == c.values());
  CHECK(slurp(dir / "config.ini").rfind("# seed = 5\n", 0) == 0);
  CHECK_FALSE(slurp(dir / "version.txt").empty());
}

TEST_CASE("histogram: bins, edges and validation") {
  CHECK(dcls::histogram({0.0, 0.1, 0.25, 0.99, 1.0}, 0.0, 1.0) == std::vector<std::size_t>{2, 1, 0, 2});
  CHECK(dcls::histogram({-0.5, 1.5}, 0.0, 1.0) == std::vector<std::size_t>{0, 0, 0, 0});
  CHECK(dcls::histogram({}, 0.0, 0.6).size() == 3);
  CHECK_THROWS_AS(dcls::histogram({}, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(dcls::histogram({}, 0.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("histogram: untrained uniform delays are flat") {
  dcls::Random rng(21);
  dcls::DelayConnection<double> layer(400, 100, 25, rng);
  const auto& delays = layer.delays()->value;
  const std::vector<double> values(delays.values().begin(), delays.values().end());
  const auto counts = dcls::histogram(values, 0.0, 24.0);
  REQUIRE(counts.size() == 96);
  const double expected = static_cast<double>(values.size()) / 96.0;
  double chi2 = 0.0;
  for (auto n : counts) chi2 += (n - expected) * (n - expected) / expected;
  // 95 degrees of freedom; 99.9th percentile is about 145
  CHECK(chi2 < 145.0);
}

TEST_CASE("export_histograms: missing or empty run directories are errors") {
  CHECK_THROWS_AS(dcls::export_histograms(fs::temp_directory_path() / "dcls_test_does_not_exist"), std::runtime_error);
  const auto dir = fresh_dir("empty_run");
  CHECK_THROWS_AS(dcls::export_histograms(dir), std::runtime_error);
  fs::create_directories(dir / "snapshots");
  std::ofstream(dir / "snapshots" / "manifest.csv") << "epoch,layer,file,lo,hi\n";
  CHECK_THROWS_AS(dcls::export_histograms(dir), std::runtime_error);
}

TEST_CASE("export_histograms: rewrites the same table a run produced") {
  const auto dir = fresh_dir("hist_run");
  (void)dcls::run_snn<double>(tiny_snn_config(), 2, dir);
  const auto original = slurp(dir / "histograms.csv");
  CHECK(original.rfind("epoch,layer,bin_lo,bin_hi,count\n", 0) == 0);
  fs::remove(dir / "histograms.csv");
  CHECK(dcls::export_histograms(dir) == dir / "histograms.csv");
  CHECK(slurp(dir / "histograms.csv") == original);
}

TEST_CASE("metrics csv: header and tagged variant column") {
  dcls::EpochMetrics row;
  row.epoch = 1;
  row.loss = 0.5;
  row.accuracy = 0.25;
  CHECK(dcls::metrics_csv({row}) == "epoch,loss,accuracy,position_speed,sigma\n1,0.5,0.25,0,0\n");
  row.tag = "s3";
  CHECK(dcls::metrics_csv({row}).rfind("variant,epoch,", 0) == 0);
}

TEST_CASE("dots dataset: classes encode axis and distance") {
  const auto data = dcls::make_dots_dataset(12, {1, 3}, 40, 0.0, 4);
  REQUIRE(data.classes == 4);
  CHECK(data.images.shape() == dcls::Shape{40, 1, 12, 12});
  for (std::size_t s = 0; s < 40; ++s) {
    const int label = data.labels[s];
    CHECK(label == static_cast<int>(s % 4));
    std::vector<std::pair<std::size_t, std::size_t>> lit;
    double total = 0.0;
    for (std::size_t r = 0; r < 12; ++r)
      for (std::size_t c = 0; c < 12; ++c) {
        const double v = data.images.at(s, 0, r, c);
        total += v;
        if (v != 0.0) lit.emplace_back(r, c);
      }
    CHECK(total == 8.0);
    REQUIRE(lit.size() == 8);
    // lit is row-major; the first lit pixel is the top-left of the first dot
    const auto [r0, c0] = lit.front();
    CHECK(r0 % 2 == 0);
    CHECK(c0 % 2 == 0);
    const std::size_t gap = 2 * (label / 2 == 0 ? 1 : 3);
    const bool vertical = label % 2;
    CHECK(data.images.at(s, 0, r0 + (vertical ? gap : 0), c0 + (vertical ? 0 : gap)) == 1.0);
  }
  CHECK_THROWS_AS(dcls::make_dots_dataset(12, {6}, 4, 0.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(dcls::make_dots_dataset(11, {1}, 4, 0.0, 0), std::invalid_argument);
}

TEST_CASE("determinism: same config and seed give byte-identical outputs") {
  const auto a = fresh_dir("det_a"), b = fresh_dir("det_b");
  const auto snn = tiny_snn_config();
  const auto first = dcls::run_snn<double>(snn, 9, a);
  const auto second = dcls::run_snn<double>(snn, 9, b);
  CHECK(dcls::metrics_csv(first.epochs) == dcls::metrics_csv(second.epochs));
  for (const char* file : {"metrics.csv", "summary.csv", "histograms.csv", "config.ini"})
    CHECK_MESSAGE(slurp(a / file) == slurp(b / file), file);
  const auto other = dcls::run_snn<double>(snn, 10);
  CHECK(dcls::metrics_csv(other.epochs) != dcls::metrics_csv(first.epochs));

  const auto toy = tiny_toy2d_config();
  const auto c = fresh_dir("det_c"), d = fresh_dir("det_d");
  (void)dcls::run_toy2d<float>(toy, 3, c);
  (void)dcls::run_toy2d<float>(toy, 3, d);
  for (const char* file : {"metrics.csv", "summary.csv", "histograms.csv"})
    CHECK_MESSAGE(slurp(c / file) == slurp(d / file), file);
}

TEST_CASE("snn runs: every ablation arm trains and reports both accuracies") {
  auto c = tiny_snn_config();
  for (const char* mode : {"learn-delays", "fixed-random-delays", "no-delays", "fixed-weights", "constant-sigma"}) {
    c.set("train.mode", mode);
    const auto r = dcls::run_snn<float>(c, 1);
    CHECK(r.epochs.size() == 3);
    CHECK(r.accuracy >= 0.0);
    CHECK(r.accuracy <= 1.0);
    CHECK(r.discrete_accuracy >= 0.0);
    if (std::string(mode) == "fixed-random-delays" || std::string(mode) == "no-delays")
      CHECK(r.epochs.back().position_speed == 0.0);
    if (std::string(mode) == "constant-sigma") CHECK(r.epochs.front().sigma == 0.5);
  }
  c.set("train.mode", "bogus");
  CHECK_THROWS_AS((void)dcls::run_snn<double>(c, 1), std::invalid_argument);
}
