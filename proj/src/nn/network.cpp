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

#include "kwsep/nn/network.hpp"

#include "kwsep/error.hpp"

namespace kwsep::nn {

template <typename T>
Network<T>::Network(const Network& other)
    : input_shape_(other.input_shape_),
      specs_(other.specs_),
      layers_(clone_layers(other.layers_)),
      tap_(other.tap_),
      head_specs_(other.head_specs_),
      head_(clone_layers(other.head_)) {}

template <typename T>
Network<T>& Network<T>::operator=(const Network& other) {
  if (this != &other) {
    Network tmp(other);
    *this = std::move(tmp);
  }
  return *this;
}

template <typename T>
std::vector<std::unique_ptr<Layer<T>>> Network<T>::clone_layers(
    const std::vector<std::unique_ptr<Layer<T>>>& src) const {
  std::vector<std::unique_ptr<Layer<T>>> out;
  out.reserve(src.size());
  for (const auto& l : src) out.push_back(l->clone());
  return out;
}

template <typename T>
Network<T> Network<T>::build(Shape input_shape, const std::vector<LayerSpec>& specs, Rng& init_rng) {
  if (specs.empty()) throw Error(ErrorCode::kInvalidArgument, "network needs at least one layer");
  Network net;
  net.input_shape_ = std::move(input_shape);
  net.specs_ = specs;
  Shape shape = net.input_shape_;
  for (const auto& spec : specs) {
    auto layer = make_layer<T>(spec, shape);
    layer->initialize(init_rng);
    shape = layer->output_shape();
    net.layers_.push_back(std::move(layer));
  }
  return net;
}

template <typename T>
void Network<T>::attach_head(int tap_layer, const std::vector<LayerSpec>& specs, Rng& init_rng) {
  if (tap_layer < 0 || tap_layer >= static_cast<int>(layers_.size())) {
    throw Error(ErrorCode::kInvalidArgument, "tap layer index out of range");
  }
  if (specs.empty()) throw Error(ErrorCode::kInvalidArgument, "head needs at least one layer");
  std::vector<std::unique_ptr<Layer<T>>> head;
  Shape shape = layers_[tap_layer]->output_shape();
  for (const auto& spec : specs) {
    auto layer = make_layer<T>(spec, shape);
    layer->initialize(init_rng);
    shape = layer->output_shape();
    head.push_back(std::move(layer));
  }
  tap_ = tap_layer;
  head_specs_ = specs;
  head_ = std::move(head);
}

template <typename T>
const Shape& Network<T>::output_shape() const {
  return layers_.back()->output_shape();
}

template <typename T>
const Shape& Network<T>::head_output_shape() const {
  if (head_.empty()) throw Error(ErrorCode::kInvalidState, "network has no head");
  return head_.back()->output_shape();
}

template <typename T>
Tensor<T> Network<T>::infer(const Tensor<T>& x) const {
  Tensor<T> out;
  infer_both(x, out, nullptr);
  return out;
}

template <typename T>
void Network<T>::infer_both(const Tensor<T>& x, Tensor<T>& main_out, Tensor<T>* head_out) const {
  if (head_out && head_.empty()) throw Error(ErrorCode::kInvalidState, "network has no head");
  Tensor<T> a = x, b;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i]->infer(a, b);
    std::swap(a, b);
    if (head_out && static_cast<int>(i) == tap_) {
      Tensor<T> h = a, g;
      for (const auto& layer : head_) {
        layer->infer(h, g);
        std::swap(h, g);
      }
      *head_out = std::move(h);
    }
  }
  main_out = std::move(a);
}

template <typename T>
void Network<T>::forward(const Tensor<T>& x, Rng& rng, const ForwardOptions& options) {
  if (options.run_head && head_.empty()) throw Error(ErrorCode::kInvalidState, "network has no head");
  const int n_layers = static_cast<int>(layers_.size());
  const int last = options.run_main_tail || head_.empty() ? n_layers - 1 : tap_;
  input_ = x;
  acts_.resize(layers_.size());
  for (int i = 0; i <= last; ++i) {
    layers_[i]->forward(i == 0 ? input_ : acts_[i - 1], acts_[i], options.main_mode, rng);
  }
  forwarded_main_layers_ = last + 1;
  head_forwarded_ = false;
  if (options.run_head) {
    head_acts_.resize(head_.size());
    for (std::size_t i = 0; i < head_.size(); ++i) {
      head_[i]->forward(i == 0 ? acts_[tap_] : head_acts_[i - 1], head_acts_[i], options.head_mode, rng);
    }
    head_forwarded_ = true;
  }
}

template <typename T>
void Network<T>::backward(const Tensor<T>* grad_main, bool main_grad_is_logits, const Tensor<T>* grad_head,
                          bool into_main, bool want_input_grad) {
  Tensor<T> head_in_grad;
  if (grad_head) {
    if (!head_forwarded_) throw Error(ErrorCode::kInvalidState, "head backward called before head forward");
    Tensor<T> g = *grad_head, next;
    for (int i = static_cast<int>(head_.size()) - 1; i >= 0; --i) {
      const bool need_in = i > 0 || into_main;
      head_[i]->backward(g, need_in ? &next : nullptr);
      if (need_in) std::swap(g, next);
    }
    if (into_main) head_in_grad = std::move(g);
  }
  if (!into_main) return;

  const int n_layers = static_cast<int>(layers_.size());
  int start;
  Tensor<T> g;
  if (grad_main) {
    if (forwarded_main_layers_ != n_layers) {
      throw Error(ErrorCode::kInvalidState, "main backward needs a full forward pass");
    }
    g = *grad_main;
    start = n_layers - 1;
    if (main_grad_is_logits) {
      if (layers_.back()->spec().kind != LayerKind::kSoftmax) {
        throw Error(ErrorCode::kInvalidState, "logit gradient given but final layer is not softmax");
      }
      start = n_layers - 2;
    }
  } else {
    if (!grad_head) return;
    start = tap_;
    g = std::move(head_in_grad);
    head_in_grad = Tensor<T>();
  }
  if (forwarded_main_layers_ == 0) throw Error(ErrorCode::kInvalidState, "backward called before forward");

  Tensor<T> next;
  for (int i = start; i >= 0; --i) {
    if (i == tap_ && !head_in_grad.empty()) {
      for (std::size_t k = 0; k < g.size(); ++k) g[k] += head_in_grad[k];
    }
    if (i == 0 && !want_input_grad) {
      layers_[i]->backward(g, nullptr);
      break;
    }
    layers_[i]->backward(g, &next);
    std::swap(g, next);
  }
  input_grad_ = want_input_grad ? std::move(g) : Tensor<T>();
}

template <typename T>
void Network<T>::zero_grad() {
  for (auto* p : parameters()) p->grad.fill(T(0));
}

template <typename T>
std::vector<Parameter<T>*> Network<T>::main_parameters() {
  std::vector<Parameter<T>*> out;
  for (auto& l : layers_)
    for (auto* p : l->parameters()) out.push_back(p);
  return out;
}

template <typename T>
std::vector<Parameter<T>*> Network<T>::head_parameters() {
  std::vector<Parameter<T>*> out;
  for (auto& l : head_)
    for (auto* p : l->parameters()) out.push_back(p);
  return out;
}

template <typename T>
std::vector<Parameter<T>*> Network<T>::parameters() {
  auto out = main_parameters();
  for (auto* p : head_parameters()) out.push_back(p);
  return out;
}

template <typename T>
std::vector<const Parameter<T>*> Network<T>::parameters() const {
  auto* self = const_cast<Network*>(this);
  std::vector<const Parameter<T>*> out;
  for (auto* p : self->parameters()) out.push_back(p);
  return out;
}

template <typename T>
std::vector<Buffer<T>> Network<T>::buffers() {
  std::vector<Buffer<T>> out;
  for (auto& l : layers_)
    for (auto b : l->buffers()) out.push_back(b);
  for (auto& l : head_)
    for (auto b : l->buffers()) out.push_back(b);
  return out;
}

template <typename T>
std::vector<Buffer<T>> Network<T>::buffers() const {
  return const_cast<Network*>(this)->buffers();
}

template <typename T>
std::size_t Network<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : parameters()) n += p->value.size();
  return n;
}

template <typename T>
void Network<T>::set_main_trainable(bool trainable) {
  for (auto* p : main_parameters()) p->trainable = trainable;
}

template class Network<float>;
template class Network<double>;

template <typename U, typename T>
Network<U> network_cast(const Network<T>& src) {
  Rng rng(0);
  Network<U> dst = Network<U>::build(src.input_shape(), src.specs(), rng);
  if (src.has_head()) dst.attach_head(src.tap_layer(), src.head_specs(), rng);
  auto sp = src.parameters();
  auto dp = dst.parameters();
  for (std::size_t i = 0; i < sp.size(); ++i) {
    for (std::size_t k = 0; k < sp[i]->value.size(); ++k) dp[i]->value[k] = static_cast<U>(sp[i]->value[k]);
    dp[i]->trainable = sp[i]->trainable;
  }
  auto sb = src.buffers();
  auto db = dst.buffers();
  for (std::size_t i = 0; i < sb.size(); ++i) {
    for (std::size_t k = 0; k < sb[i].tensor->size(); ++k) {
      (*db[i].tensor)[k] = static_cast<U>((*sb[i].tensor)[k]);
    }
  }
  return dst;
}

template Network<double> network_cast<double, float>(const Network<float>&);
template Network<float> network_cast<float, double>(const Network<double>&);
template Network<float> network_cast<float, float>(const Network<float>&);
template Network<double> network_cast<double, double>(const Network<double>&);

}  // namespace kwsep::nn
