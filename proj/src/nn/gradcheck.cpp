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

#include "kwsep/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kwsep/error.hpp"
#include "kwsep/nn/loss.hpp"

namespace kwsep::nn {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradcheckReport compare_gradients(const std::vector<CheckedTensor>& tensors, const std::function<double()>& objective,
                                  const std::function<void()>& analytic, const GradcheckOptions& opts) {
  analytic();
  // Snapshot analytic gradients before any perturbation.
  std::vector<std::vector<double>> analytic_grads;
  for (const auto& t : tensors) analytic_grads.emplace_back(t.grad->values().begin(), t.grad->values().end());

  Rng pick(derive_seed(opts.seed, 0x67726164));
  GradcheckReport report;
  for (std::size_t ti = 0; ti < tensors.size(); ++ti) {
    auto& values = *tensors[ti].value;
    std::vector<std::size_t> coords(values.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (opts.max_coords_per_tensor > 0 && coords.size() > opts.max_coords_per_tensor) {
      for (std::size_t i = 0; i < opts.max_coords_per_tensor; ++i) {
        const auto j = static_cast<std::size_t>(uniform_int(pick, static_cast<std::int64_t>(i),
                                                            static_cast<std::int64_t>(coords.size()) - 1));
        std::swap(coords[i], coords[j]);
      }
      coords.resize(opts.max_coords_per_tensor);
    }
    for (std::size_t c : coords) {
      const double orig = values[c];
      values[c] = orig + opts.step;
      const double up = objective();
      values[c] = orig - opts.step;
      const double down = objective();
      values[c] = orig;
      const double numeric = (up - down) / (2.0 * opts.step);
      const double err = relative_error(analytic_grads[ti][c], numeric, opts.denominator_floor);
      if (report.checked++ == 0 || err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst = tensors[ti].name + "[" + std::to_string(c) + "]";
      }
    }
  }
  return report;
}

GradcheckReport gradcheck(Network<double>& net, const Tensor<double>& input, const GradcheckLoss& loss,
                          const GradcheckOptions& opts) {
  const bool use_head = !loss.regression_target.empty();
  if (loss.freeze_main && !use_head) {
    throw Error(ErrorCode::kInvalidArgument, "gradcheck: frozen main path needs a head loss");
  }
  if (use_head && !net.has_head()) throw Error(ErrorCode::kInvalidState, "gradcheck: network has no head");
  const bool use_main = !loss.freeze_main && (!loss.labels.empty() || !loss.projection.empty());

  Tensor<double> x = input;
  typename Network<double>::ForwardOptions fo;
  fo.main_mode = loss.freeze_main ? Mode::kInfer : Mode::kTrain;
  fo.run_head = use_head;
  fo.run_main_tail = use_main;

  auto objective = [&]() {
    Rng rng(opts.seed);
    net.forward(x, rng, fo);
    double total = 0.0;
    if (use_main) {
      if (!loss.labels.empty()) total += cross_entropy_loss(net.output(), loss.labels).loss;
      if (!loss.projection.empty()) {
        const auto& out = net.output();
        for (std::size_t i = 0; i < out.size(); ++i) total += loss.projection[i] * out[i];
      }
    }
    if (use_head) total += loss.regression_weight * mse_loss(net.head_output(), loss.regression_target).loss;
    return total;
  };

  auto analytic = [&]() {
    net.zero_grad();
    Rng rng(opts.seed);
    net.forward(x, rng, fo);
    Tensor<double> gm;
    bool logits = false;
    if (use_main) {
      if (!loss.labels.empty()) {
        gm = cross_entropy_loss(net.output(), loss.labels).grad;
        logits = true;
        if (!loss.projection.empty()) throw Error(ErrorCode::kInvalidArgument, "gradcheck: pick labels or projection");
      } else {
        gm = loss.projection;
      }
    }
    Tensor<double> gh;
    if (use_head) {
      gh = mse_loss(net.head_output(), loss.regression_target).grad;
      for (auto& v : gh.values()) v *= loss.regression_weight;
    }
    net.backward(use_main ? &gm : nullptr, logits, use_head ? &gh : nullptr, !loss.freeze_main, true);
  };

  std::vector<CheckedTensor> tensors;
  auto params = loss.freeze_main ? net.head_parameters() : net.parameters();
  for (auto* p : params) tensors.push_back({p->name, &p->value, &p->grad});
  if (opts.check_input && !loss.freeze_main) tensors.push_back({"input", &x, &net.input_grad()});
  return compare_gradients(tensors, objective, analytic, opts);
}

}  // namespace kwsep::nn
