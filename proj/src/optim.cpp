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

#include "dcls/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dcls {

template <typename T>
std::vector<ParamGroup<T>> default_param_groups(const std::vector<ParamPtr<T>>& params, double lr,
                                                double weight_decay, double position_lr_scale) {
  ParamGroup<T> weights{"weights", {}, lr, 1.0, weight_decay};
  ParamGroup<T> positions{"positions", {}, lr, position_lr_scale, 0.0};
  for (const auto& p : params) {
    if (p->role == ParamRole::Position || p->role == ParamRole::Sigma)
      positions.params.push_back(p);
    else
      weights.params.push_back(p);
  }
  std::vector<ParamGroup<T>> groups{std::move(weights)};
  if (!positions.params.empty()) groups.push_back(std::move(positions));
  return groups;
}

template <typename T>
Adam<T>::Adam(std::vector<ParamGroup<T>> groups, double beta1, double beta2, double eps)
    : groups_(std::move(groups)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& g : groups_) {
    std::vector<Moments> m;
    for (const auto& p : g.params) m.push_back({std::vector<T>(p->value.size()), std::vector<T>(p->value.size())});
    state_.push_back(std::move(m));
  }
}

template <typename T>
ParamGroup<T>& Adam<T>::group(const std::string& name) {
  for (auto& g : groups_)
    if (g.name == name) return g;
  throw std::out_of_range("no parameter group '" + name + "'");
}

template <typename T>
void Adam<T>::zero_grad() {
  for (auto& g : groups_) dcls::zero_grad(g.params);
}

template <typename T>
void Adam<T>::step() {
  ++steps_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
    auto& g = groups_[gi];
    if (g.lr_scale == 0.0) continue;
    if (!(g.lr > 0.0)) throw std::invalid_argument("group '" + g.name + "': learning rate must be > 0");
    if (g.lr_scale < 0.0) throw std::invalid_argument("group '" + g.name + "': lr_scale must be >= 0");
    const double lr = g.lr * g.lr_scale;
    for (std::size_t pi = 0; pi < g.params.size(); ++pi) {
      auto& p = *g.params[pi];
      auto& m = state_[gi][pi];
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const double grad = p.grad[i];
        m.first[i] = static_cast<T>(beta1_ * m.first[i] + (1.0 - beta1_) * grad);
        m.second[i] = static_cast<T>(beta2_ * m.second[i] + (1.0 - beta2_) * grad * grad);
        double v = p.value[i];
        if (g.weight_decay != 0.0) v -= lr * g.weight_decay * v;
        v -= lr * (m.first[i] / c1) / (std::sqrt(m.second[i] / c2) + eps_);
        p.value[i] = static_cast<T>(v);
      }
      p.clamp();
    }
  }
}

template <typename T>
void clamp_positions(const std::vector<ParamPtr<T>>& params) {
  for (const auto& p : params) p->clamp();
}

double cosine_annealing(double lr0, double lr_min, std::size_t t, std::size_t total) {
  if (total == 0) return lr0;
  const double frac = static_cast<double>(std::min(t, total)) / static_cast<double>(total);
  return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + std::cos(std::numbers::pi * frac));
}

namespace {

double cos_interp(double from, double to, double pct) {
  return to + (from - to) / 2.0 * (std::cos(std::numbers::pi * pct) + 1.0);
}

}  // namespace

std::size_t OneCycle::peak_step() const {
  const double end = pct_start * static_cast<double>(total_steps) - 1.0;
  return end <= 0.0 ? 0 : static_cast<std::size_t>(end);
}

double OneCycle::operator()(std::size_t step) const {
  if (total_steps == 0) throw std::invalid_argument("one-cycle needs total_steps >= 1");
  const double initial = max_lr / div_factor;
  const double minimum = initial / final_div_factor;
  const double warm_end = pct_start * static_cast<double>(total_steps) - 1.0;
  const double last = static_cast<double>(total_steps) - 1.0;
  const double s = static_cast<double>(std::min(step, total_steps - 1));
  if (warm_end > 0.0 && s <= warm_end) return cos_interp(initial, max_lr, s / warm_end);
  const double span = last - std::max(warm_end, 0.0);
  return span <= 0.0 ? max_lr : cos_interp(max_lr, minimum, (s - std::max(warm_end, 0.0)) / span);
}

double SigmaSchedule::operator()(double epoch) const {
  if (start <= 0.0 || floor <= 0.0) throw std::invalid_argument("sigma schedule endpoints must be > 0");
  if (total_epochs == 0) return floor;
  const double frac = std::clamp(epoch / static_cast<double>(total_epochs), 0.0, 1.0);
  if (frac >= 1.0) return floor;
  return start * std::pow(floor / start, frac);
}

template <typename T>
double position_speed(const Tensor<T>& previous, const Tensor<T>& current) {
  if (previous.shape() != current.shape()) throw std::invalid_argument("position snapshots differ in shape");
  double acc = 0.0;
  for (std::size_t i = 0; i < current.size(); ++i) acc += std::abs(static_cast<double>(current[i]) - previous[i]);
  return current.size() ? acc / static_cast<double>(current.size()) : 0.0;
}

#define DCLS_INSTANTIATE(T)                                                                                  \
  template std::vector<ParamGroup<T>> default_param_groups<T>(const std::vector<ParamPtr<T>>&, double,     \
                                                               double, double);                             \
  template class Adam<T>;                                                                                    \
  template void clamp_positions<T>(const std::vector<ParamPtr<T>>&);                                        \
  template double position_speed<T>(const Tensor<T>&, const Tensor<T>&);

DCLS_INSTANTIATE(float)
DCLS_INSTANTIATE(double)

#undef DCLS_INSTANTIATE

}  // namespace dcls
