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

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dcls/layers.hpp"

namespace dcls {

inline constexpr double kPositionLrScale = 5.0;

template <typename T>
struct ParamGroup {
  std::string name;
  std::vector<ParamPtr<T>> params;
  double lr = 1e-3;        // base rate, rewritten by schedules
  double lr_scale = 1.0;   // 0 freezes the group bit-for-bit
  double weight_decay = 0.0;
};

/// Splits parameters by role: weights/biases/norm get `weight_decay`;
/// positions and sigmas get lr_scale `position_lr_scale` and no decay.
template <typename T>
std::vector<ParamGroup<T>> default_param_groups(const std::vector<ParamPtr<T>>& params, double lr,
                                                double weight_decay, double position_lr_scale = kPositionLrScale);

/// Adam with decoupled weight decay. Every step ends by clamping bounded
/// parameters.
template <typename T>
class Adam {
 public:
  explicit Adam(std::vector<ParamGroup<T>> groups, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step();
  void zero_grad();
  std::vector<ParamGroup<T>>& groups() { return groups_; }
  ParamGroup<T>& group(const std::string& name);
  std::size_t steps() const { return steps_; }

 private:
  struct Moments {
    std::vector<T> first;
    std::vector<T> second;
  };
  std::vector<ParamGroup<T>> groups_;
  std::vector<std::vector<Moments>> state_;
  double beta1_, beta2_, eps_;
  std::size_t steps_ = 0;
};

/// Projects every bounded parameter onto its bounds; idempotent.
template <typename T>
void clamp_positions(const std::vector<ParamPtr<T>>& params);

/// lr_min + (lr0 - lr_min)(1 + cos(pi t / total)) / 2, t clamped to [0, total].
double cosine_annealing(double lr0, double lr_min, std::size_t t, std::size_t total);

/// Warm-up then cosine decay over `total_steps`: starts at max_lr/div_factor,
/// peaks at max_lr after pct_start of the steps, ends at
/// max_lr/(div_factor*final_div_factor).
struct OneCycle {
  double max_lr = 1e-3;
  std::size_t total_steps = 1;
  double pct_start = 0.3;
  double div_factor = 25.0;
  double final_div_factor = 1e4;

  double operator()(std::size_t step) const;
  std::size_t peak_step() const;
};

/// Geometric decay from `start` to `floor` over `total_epochs`.
struct SigmaSchedule {
  double start = 1.0;
  double floor = 0.5;
  std::size_t total_epochs = 1;

  double operator()(double epoch) const;
};

/// Mean absolute change between two position snapshots.
template <typename T>
double position_speed(const Tensor<T>& previous, const Tensor<T>& current);

}  // namespace dcls
