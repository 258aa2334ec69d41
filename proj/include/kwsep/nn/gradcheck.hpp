// Copyright 2026 The kwsep Authors
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

#include "kwsep/nn/network.hpp"

namespace kwsep::nn {

struct GradcheckOptions {
  double step = 1e-5;                      // central-difference step
  std::size_t max_coords_per_tensor = 0;   // 0 checks every coordinate
  std::uint64_t seed = 0;                  // dropout masks and coordinate sampling
  double denominator_floor = 1e-5;         // see relative_error
  bool check_input = false;                // also check d loss / d input
};

struct GradcheckReport {
  double max_rel_error = 0.0;
  std::string worst;  // "<tensor>[<index>]"
  std::size_t checked = 0;
};

// |a - n| / max(|a|, |n|, floor). The floor keeps gradients that are zero up
// to roundoff from reporting huge relative errors.
double relative_error(double analytic, double numeric, double floor);

// A perturbable tensor with the gradient the analytic pass writes for it.
struct CheckedTensor {
  std::string name;
  Tensor<double>* value;
  const Tensor<double>* grad;
};

// Core comparison: `objective` recomputes the loss from scratch, `analytic`
// refreshes every CheckedTensor::grad. Both must be deterministic.
GradcheckReport compare_gradients(const std::vector<CheckedTensor>& tensors, const std::function<double()>& objective,
                                  const std::function<void()>& analytic, const GradcheckOptions& opts);

// Loss used when checking a whole network.
struct GradcheckLoss {
  std::vector<int> labels;           // cross-entropy on the main output
  Tensor<double> projection;         // sum(projection * main output), for single-layer checks
  Tensor<double> regression_target;  // MSE on the head output
  double regression_weight = 1.0;
  bool freeze_main = false;          // main path in infer mode; only head parameters checked
};

// Compares analytic parameter gradients against central differences at
// 64-bit. Runs in train mode (batch statistics, seeded dropout).
GradcheckReport gradcheck(Network<double>& net, const Tensor<double>& input, const GradcheckLoss& loss,
                          const GradcheckOptions& opts = {});

}  // namespace kwsep::nn
