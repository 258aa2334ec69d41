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

#include <memory>
#include <vector>

#include "kwsep/nn/layers.hpp"

namespace kwsep::nn {

// A sequential stack of layers with an optional side branch ("head") that
// reads the output of one intermediate layer (the tap). This covers every
// topology the toolkit needs: plain classifiers, and a classifier with a
// regression head sharing its lower layers.
template <typename T>
class Network {
 public:
  Network() = default;
  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  // Builds and initializes the layers; throws kShapeMismatch naming the
  // offending layer when shapes do not chain.
  static Network build(Shape input_shape, const std::vector<LayerSpec>& specs, Rng& init_rng);

  // Adds a head reading the output of layer `tap_layer`.
  void attach_head(int tap_layer, const std::vector<LayerSpec>& specs, Rng& init_rng);

  bool has_head() const { return !head_.empty(); }
  int tap_layer() const { return tap_; }
  const Shape& input_shape() const { return input_shape_; }
  const Shape& output_shape() const;
  const Shape& layer_output_shape(int i) const { return layers_[i]->output_shape(); }
  const Shape& head_output_shape() const;
  std::size_t layer_count() const { return layers_.size(); }
  std::size_t head_layer_count() const { return head_.size(); }
  const std::vector<LayerSpec>& specs() const { return specs_; }
  const std::vector<LayerSpec>& head_specs() const { return head_specs_; }

  // Stateless inference through the main path; safe to call concurrently.
  Tensor<T> infer(const Tensor<T>& x) const;
  // Main output plus head output (when a head exists) in one pass.
  void infer_both(const Tensor<T>& x, Tensor<T>& main_out, Tensor<T>* head_out) const;

  struct ForwardOptions {
    Mode main_mode = Mode::kTrain;
    bool run_main_tail = true;  // run layers after the tap
    bool run_head = false;
    Mode head_mode = Mode::kTrain;
  };

  // Training-time forward; caches activations for `backward`.
  void forward(const Tensor<T>& x, Rng& rng, const ForwardOptions& options);
  void forward(const Tensor<T>& x, Rng& rng) { forward(x, rng, ForwardOptions{}); }
  const Tensor<T>& output() const { return acts_.back(); }
  const Tensor<T>& head_output() const { return head_acts_.back(); }

  // Accumulates parameter gradients. `grad_main` is the gradient of the loss
  // with respect to the main output, or with respect to the final softmax's
  // input when `main_grad_is_logits` is set. `grad_head` is the gradient with
  // respect to the head output. With `into_main` false, backpropagation stops
  // at the head input. The input gradient is only formed on request.
  void backward(const Tensor<T>* grad_main, bool main_grad_is_logits, const Tensor<T>* grad_head,
                bool into_main = true, bool want_input_grad = false);

  // Gradient with respect to the network input from the last backward call
  // that propagated into the main path.
  const Tensor<T>& input_grad() const { return input_grad_; }

  void zero_grad();

  std::vector<Parameter<T>*> parameters();
  std::vector<const Parameter<T>*> parameters() const;
  std::vector<Parameter<T>*> main_parameters();
  std::vector<Parameter<T>*> head_parameters();
  std::vector<Buffer<T>> buffers();
  std::vector<Buffer<T>> buffers() const;
  std::size_t parameter_count() const;

  // Frozen parameters are skipped by the optimizer.
  void set_main_trainable(bool trainable);

 private:
  std::vector<std::unique_ptr<Layer<T>>> clone_layers(const std::vector<std::unique_ptr<Layer<T>>>& src) const;

  Shape input_shape_;
  std::vector<LayerSpec> specs_;
  std::vector<std::unique_ptr<Layer<T>>> layers_;
  int tap_ = -1;
  std::vector<LayerSpec> head_specs_;
  std::vector<std::unique_ptr<Layer<T>>> head_;

  Tensor<T> input_;
  std::vector<Tensor<T>> acts_;
  std::vector<Tensor<T>> head_acts_;
  int forwarded_main_layers_ = 0;
  bool head_forwarded_ = false;
  Tensor<T> input_grad_;
};

extern template class Network<float>;
extern template class Network<double>;

// Copies architecture, parameters and buffers into another precision.
template <typename U, typename T>
Network<U> network_cast(const Network<T>& src);

}  // namespace kwsep::nn
