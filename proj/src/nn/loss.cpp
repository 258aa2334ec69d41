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

#include "kwsep/nn/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kwsep/error.hpp"

namespace kwsep::nn {

template <typename T>
LossResult<T> cross_entropy_loss(const Tensor<T>& probs, std::span<const int> labels) {
  if (probs.rank() != 2 || static_cast<std::size_t>(probs.dim(0)) != labels.size()) {
    throw Error(ErrorCode::kShapeMismatch, "cross_entropy_loss: probs must be [N,K] with N labels");
  }
  const int n = probs.dim(0), k = probs.dim(1);
  LossResult<T> r{0.0, Tensor<T>(probs.shape())};
  const double tiny = std::numeric_limits<double>::min();
  for (int b = 0; b < n; ++b) {
    const int y = labels[b];
    if (y < 0 || y >= k) throw Error(ErrorCode::kInvalidArgument, "cross_entropy_loss: label out of range");
    const T* p = probs.data() + static_cast<std::size_t>(b) * k;
    r.loss -= std::log(std::max(static_cast<double>(p[y]), tiny));
    T* g = r.grad.data() + static_cast<std::size_t>(b) * k;
    for (int i = 0; i < k; ++i) g[i] = (p[i] - (i == y ? T(1) : T(0))) / static_cast<T>(n);
  }
  r.loss /= n;
  return r;
}

template <typename T>
LossResult<T> mse_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  if (pred.shape() != target.shape() || pred.rank() != 2) {
    throw Error(ErrorCode::kShapeMismatch, "mse_loss: pred and target must share an [N,K] shape");
  }
  const int n = pred.dim(0), k = pred.dim(1);
  LossResult<T> r{0.0, Tensor<T>(pred.shape())};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred[i]) - target[i];
    r.loss += d * d;
    r.grad[i] = static_cast<T>(2.0 * d / (static_cast<double>(n) * k));
  }
  r.loss /= static_cast<double>(n) * k;
  return r;
}

template LossResult<float> cross_entropy_loss(const Tensor<float>&, std::span<const int>);
template LossResult<double> cross_entropy_loss(const Tensor<double>&, std::span<const int>);
template LossResult<float> mse_loss(const Tensor<float>&, const Tensor<float>&);
template LossResult<double> mse_loss(const Tensor<double>&, const Tensor<double>&);

}  // namespace kwsep::nn
