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

// Desk-scale training runs: the spiking delay-learning ablations and the
// toy 2D classifier sweeping the dilated kernel size.
//
// A run directory holds:
//   config.ini      resolved settings, including the seed
//   version.txt     source version of the binary
//   metrics.csv     one row per epoch
//   snapshots/      positions (or delays) per epoch and a manifest.csv
//   histograms.csv  position histograms, bin width 0.25
// Nothing written depends on wall-clock time.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dcls/config.hpp"
#include "dcls/tensor.hpp"

namespace dcls {

struct EpochMetrics {
  std::size_t epoch = 0;
  double loss = 0;
  double accuracy = 0;
  double position_speed = 0;  // mean |change| of positions over the epoch
  double sigma = 0;
  std::string tag;  // run variant, e.g. "s7"; empty for single runs
};

/// CSV text with header "epoch,loss,accuracy,position_speed,sigma"
/// (prefixed by "variant," when any row carries a tag). Fixed precision.
std::string metrics_csv(const std::vector<EpochMetrics>& rows);

// ---------------------------------------------------------------------------
// Histograms

/// Counts of `values` in bins [lo + k w, lo + (k+1) w); hi falls in the
/// last bin. Throws std::invalid_argument unless hi > lo and width > 0.
std::vector<std::size_t> histogram(const std::vector<double>& values, double lo, double hi, double width = 0.25);

/// Reads run_dir/snapshots/manifest.csv and writes run_dir/histograms.csv
/// (epoch,layer,bin_lo,bin_hi,count). Returns the path written. Throws
/// std::runtime_error when the directory or the manifest is missing or empty.
std::filesystem::path export_histograms(const std::filesystem::path& run_dir, double width = 0.25);

// ---------------------------------------------------------------------------
// Spiking delay learning

Config snn_default_config();

struct SnnRunResult {
  std::vector<EpochMetrics> epochs;
  double accuracy = 0;           // final eval, continuous kernels
  double discrete_accuracy = 0;  // final eval, rounded single-tap delays
};

/// Trains one ablation arm (train.mode) on the synthetic spike task. Writes
/// the run directory when `out_dir` is set.
template <typename T>
SnnRunResult run_snn(const Config& config, std::uint64_t seed,
                     const std::optional<std::filesystem::path>& out_dir = std::nullopt);

// ---------------------------------------------------------------------------
// Toy 2D classifier

Config toy2d_default_config();

/// 2-dot images [N, 1, size, size]. Dots are 2x2 blocks on the even grid;
/// the class is the axis and distance (in 2-pixel cells) between them, taken
/// from `cell_distances` (classes = 2 * distances).
struct DotsDataset {
  Tensor<double> images;
  std::vector<int> labels;
  std::size_t classes = 0;
};
DotsDataset make_dots_dataset(std::size_t image_size, const std::vector<std::size_t>& cell_distances,
                              std::size_t samples, double noise, std::uint64_t seed);

struct Toy2dSizeResult {
  std::size_t dilated_size = 0;
  double accuracy = 0;
};

struct Toy2dRunResult {
  std::vector<EpochMetrics> epochs;  // tagged "s<size>"
  std::vector<Toy2dSizeResult> sizes;
};

/// Trains stem -> ReLU -> DCLS -> ReLU -> GAP -> linear once per entry of
/// model.dilated_sizes. Each size starts from the same seed.
template <typename T>
Toy2dRunResult run_toy2d(const Config& config, std::uint64_t seed,
                         const std::optional<std::filesystem::path>& out_dir = std::nullopt);

}  // namespace dcls
