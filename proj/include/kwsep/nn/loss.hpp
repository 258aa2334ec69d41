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

#include <span>

#include "kwsep/nn/tensor.hpp"

namespace kwsep::nn {

template <typename T>
struct LossResult {
  double loss = 0.0;
  Tensor<T> grad;
};

// Mean cross-entropy of softmax outputs `probs` [N,K] against integer class
// labels. The gradient is taken with respect to the logits feeding the
// softmax: (p - onehot) / N.
template <typename T>
LossResult<T> cross_entropy_loss(const Tensor<T>& probs, std::span<const int> labels);

// Mean over the batch of the per-example mean squared error across the K
// outputs: L = 1/N sum_n 1/K sum_k (pred - target)^2. Gradient with respect
// to `pred`.
template <typename T>
LossResult<T> mse_loss(const Tensor<T>& pred, const Tensor<T>& target);

}  // namespace kwsep::nn
