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

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dcls/tensor.hpp"

namespace dcls {

/// Central differences of f w.r.t. every entry of theta (perturbed in place,
/// then restored).
std::vector<double> central_difference(const std::function<double()>& f, Tensor<double>& theta, double step = 1e-6);

/// max|a - n| / max(max|a|, max|n|, 1e-6).
double gradient_error(const std::vector<double>& analytic, const std::vector<double>& numeric);

struct GradcheckReport {
  std::string scope;
  std::size_t instances = 0;
  double threshold = 0;
  double worst = 0;
  std::string worst_case;  // which instance and parameter group
  bool pass() const { return worst < threshold; }
};

/// Scopes: dcls1d, dcls2d, dcls3d (bilinear kernels), interp (triangle and
/// gauss in 1D-3D, each counted separately), conv (weight and input), snn
/// (two-layer smooth-spike network, weights and delays). Instances near a
/// non-differentiable point are redrawn. `inject_fault` perturbs every
/// analytic gradient so the check must fail.
GradcheckReport run_gradcheck(const std::string& scope, std::uint64_t seed, std::size_t instances = 200,
                              bool inject_fault = false);

std::vector<std::string> gradcheck_scopes();

}  // namespace dcls
