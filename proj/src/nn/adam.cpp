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

#include "kwsep/nn/adam.hpp"

#include <cmath>

namespace kwsep::nn {

template <typename T>
void adam_step(std::span<Parameter<T>* const> params, const AdamConfig& cfg) {
  for (Parameter<T>* p : params) {
    if (!p->trainable) continue;
    ++p->step_count;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(p->step_count));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(p->step_count));
    const auto b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
    const auto lr_t = static_cast<T>(cfg.learning_rate / c1);
    const auto inv_c2 = static_cast<T>(1.0 / c2);
    const auto eps = static_cast<T>(cfg.epsilon);
    T* x = p->value.data();
    T* m = p->adam_m.data();
    T* v = p->adam_v.data();
    const T* g = p->grad.data();
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      m[i] = b1 * m[i] + (T(1) - b1) * g[i];
      v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
      x[i] -= lr_t * m[i] / (std::sqrt(v[i] * inv_c2) + eps);
    }
  }
}

template void adam_step<float>(std::span<Parameter<float>* const>, const AdamConfig&);
template void adam_step<double>(std::span<Parameter<double>* const>, const AdamConfig&);

}  // namespace kwsep::nn
