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
#include <string>
#include <vector>

#include "kwsep/nn/tensor.hpp"
#include "kwsep/rng.hpp"

namespace kwsep::nn {

enum class LayerKind { kConv2d, kMaxPool2d, kFullyConnected, kRelu, kBatchNorm, kDropout, kSoftmax };

const char* to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& name);

// Declarative description of one layer. Only the fields relevant to `kind`
// are read.
struct LayerSpec {
  LayerKind kind = LayerKind::kRelu;
  std::string name;

  int out_channels = 0;  // conv2d
  int kernel_h = 0;      // conv2d, maxpool2d
  int kernel_w = 0;
  int stride_h = 1;
  int stride_w = 1;
  int pad_h = 0;  // conv2d only
  int pad_w = 0;

  int units = 0;  // fully_connected

  double rate = 0.0;  // dropout

  double epsilon = 1e-5;  // batchnorm
  double momentum = 0.99;

  static LayerSpec conv2d(std::string name, int out_channels, int kh, int kw, int sh = 1, int sw = 1);
  static LayerSpec maxpool2d(std::string name, int kh, int kw, int sh, int sw);
  static LayerSpec fully_connected(std::string name, int units);
  static LayerSpec relu(std::string name);
  static LayerSpec batchnorm(std::string name, double epsilon = 1e-5, double momentum = 0.99);
  static LayerSpec dropout(std::string name, double rate);
  static LayerSpec softmax(std::string name);

  // Hyperparameter checks that do not need the input shape.
  void validate() const;

  bool operator==(const LayerSpec&) const = default;
};

enum class Mode { kTrain, kInfer };

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  Tensor<T> adam_m;
  Tensor<T> adam_v;
  long step_count = 0;
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string n, Shape shape)
      : name(std::move(n)), value(shape), grad(shape), adam_m(shape), adam_v(shape) {}
};

// Non-trainable state that is still part of a checkpoint (batchnorm running
// statistics).
template <typename T>
struct Buffer {
  std::string name;
  Tensor<T>* tensor;
};

// One layer of a sequential network. Shapes passed to the constructor and
// returned by `output_shape` exclude the batch dimension; runtime tensors
// carry the batch as their leading dimension.
template <typename T>
class Layer {
 public:
  Layer(LayerSpec spec, Shape input_shape) : spec_(std::move(spec)), input_shape_(std::move(input_shape)) {}
  virtual ~Layer() = default;

  const LayerSpec& spec() const { return spec_; }
  const Shape& input_shape() const { return input_shape_; }
  const Shape& output_shape() const { return output_shape_; }

  // Stateless inference; safe to call concurrently.
  virtual void infer(const Tensor<T>& in, Tensor<T>& out) const = 0;

  // Caches whatever `backward` needs.
  virtual void forward(const Tensor<T>& in, Tensor<T>& out, Mode mode, Rng& rng) = 0;

  // Accumulates parameter gradients; writes the input gradient when
  // `grad_in` is non-null.
  virtual void backward(const Tensor<T>& grad_out, Tensor<T>* grad_in) = 0;

  virtual std::vector<Parameter<T>*> parameters() { return {}; }
  virtual std::vector<Buffer<T>> buffers() { return {}; }
  virtual void initialize(Rng& /*rng*/) {}
  virtual std::unique_ptr<Layer<T>> clone() const = 0;

 protected:
  LayerSpec spec_;
  Shape input_shape_;
  Shape output_shape_;
};

// Builds a layer for the given per-example input shape. Throws kShapeMismatch
// when the layer cannot be applied to that shape.
template <typename T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& spec, const Shape& input_shape);

// Output extent of a valid (optionally padded) window sweep.
int window_output_extent(int in, int kernel, int stride, int pad);

}  // namespace kwsep::nn
