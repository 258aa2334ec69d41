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

#include "kwsep/nn/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "kwsep/error.hpp"

namespace kwsep::nn {
namespace {

template <typename T>
using MatrixRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapRM = Eigen::Map<MatrixRM<T>>;
template <typename T>
using ConstMapRM = Eigen::Map<const MatrixRM<T>>;

[[noreturn]] void shape_error(const LayerSpec& spec, const std::string& why) {
  throw Error(ErrorCode::kShapeMismatch, "layer '" + spec.name + "' (" + to_string(spec.kind) + "): " + why);
}

Shape batch_shape(int n, const Shape& per_example) {
  Shape s{n};
  s.insert(s.end(), per_example.begin(), per_example.end());
  return s;
}

// Runs `f` on one example at a time. The GEMM kernels choose their blocking
// from the matrix sizes, so a batched product can round differently from
// the same example run alone; inference goes through here so that results
// do not depend on how windows are batched.
template <typename T, typename F>
void infer_per_example(const Tensor<T>& in, Tensor<T>& out, const Shape& in_shape, const Shape& out_shape, F&& f) {
  const int n = in.dim(0);
  const std::size_t xs = shape_size(in_shape), ys = shape_size(out_shape);
  out.resize(batch_shape(n, out_shape));
  Tensor<T> x(batch_shape(1, in_shape)), y;
  for (int i = 0; i < n; ++i) {
    std::copy_n(in.data() + i * xs, xs, x.data());
    f(x, y);
    std::copy_n(y.data(), ys, out.data() + i * ys);
  }
}

template <typename T>
void init_uniform(Tensor<T>& t, double limit, Rng& rng) {
  for (auto& v : t.values()) v = static_cast<T>(uniform(rng, -limit, limit));
}

// ---------------------------------------------------------------------------
// conv2d

template <typename T>
class Conv2d final : public Layer<T> {
 public:
  Conv2d(const LayerSpec& spec, const Shape& in) : Layer<T>(spec, in) {
    if (in.size() != 3) shape_error(spec, "expects [C,H,W] input, got " + shape_string(in));
    const int oh = window_output_extent(in[1], spec.kernel_h, spec.stride_h, spec.pad_h);
    const int ow = window_output_extent(in[2], spec.kernel_w, spec.stride_w, spec.pad_w);
    if (oh <= 0 || ow <= 0) {
      shape_error(spec, "kernel " + std::to_string(spec.kernel_h) + "x" + std::to_string(spec.kernel_w) +
                            " larger than input " + shape_string(in));
    }
    this->output_shape_ = {spec.out_channels, oh, ow};
    patch_ = in[0] * spec.kernel_h * spec.kernel_w;
    weight_ = Parameter<T>(spec.name + ".weight", {spec.out_channels, in[0], spec.kernel_h, spec.kernel_w});
    bias_ = Parameter<T>(spec.name + ".bias", {spec.out_channels});
  }

  void initialize(Rng& rng) override {
    init_uniform(weight_.value, std::sqrt(6.0 / patch_), rng);
    bias_.value.fill(T(0));
  }

  void infer(const Tensor<T>& in, Tensor<T>& out) const override {
    AlignedVector<T> cols;
    infer_per_example(in, out, this->input_shape_, this->output_shape_, [&](const Tensor<T>& x, Tensor<T>& y) {
      im2col(x, cols);
      compute(cols, 1, y);
    });
  }

  void forward(const Tensor<T>& in, Tensor<T>& out, Mode, Rng&) override {
    batch_ = in.dim(0);
    im2col(in, cols_);
    compute(cols_, batch_, out);
  }

  void backward(const Tensor<T>& grad_out, Tensor<T>* grad_in) override {
    if (batch_ == 0) throw Error(ErrorCode::kInvalidState, "conv2d backward called before forward");
    const int cout = this->spec_.out_channels;
    const int p = positions();
    const long np = static_cast<long>(batch_) * p;

    // Gather grad_out into [Cout, N*P].
    AlignedVector<T> g(static_cast<std::size_t>(cout) * np);
    for (int n = 0; n < batch_; ++n) {
      for (int c = 0; c < cout; ++c) {
        const T* src = grad_out.data() + (static_cast<std::size_t>(n) * cout + c) * p;
        std::copy(src, src + p, g.data() + static_cast<std::size_t>(c) * np + static_cast<std::size_t>(n) * p);
      }
    }
    ConstMapRM<T> gm(g.data(), cout, np);
    ConstMapRM<T> cm(cols_.data(), patch_, np);
    MapRM<T> gw(weight_.grad.data(), cout, patch_);
    gw.noalias() += gm * cm.transpose();
    for (int c = 0; c < cout; ++c) {
      const T* row = g.data() + static_cast<std::size_t>(c) * np;
      T acc = T(0);
      for (long i = 0; i < np; ++i) acc += row[i];
      bias_.grad[c] += acc;
    }

    if (grad_in) {
      ConstMapRM<T> w(weight_.value.data(), cout, patch_);
      AlignedVector<T> dcols(static_cast<std::size_t>(patch_) * np);
      MapRM<T> dc(dcols.data(), patch_, np);
      dc.noalias() = w.transpose() * gm;
      grad_in->resize(batch_shape(batch_, this->input_shape_));
      grad_in->fill(T(0));
      col2im(dcols, *grad_in);
    }
  }

  std::vector<Parameter<T>*> parameters() override { return {&weight_, &bias_}; }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Conv2d>(*this); }

 private:
  int positions() const { return this->output_shape_[1] * this->output_shape_[2]; }

  // cols is [C*kh*kw, N*P] row-major.
  void im2col(const Tensor<T>& in, AlignedVector<T>& cols) const {
    const auto& s = this->spec_;
    const int n_batch = in.dim(0);
    const int c_in = this->input_shape_[0], h = this->input_shape_[1], w = this->input_shape_[2];
    const int oh = this->output_shape_[1], ow = this->output_shape_[2];
    const int p = oh * ow;
    const long np = static_cast<long>(n_batch) * p;
    cols.assign(static_cast<std::size_t>(patch_) * np, T(0));
    for (int n = 0; n < n_batch; ++n) {
      const T* img = in.data() + static_cast<std::size_t>(n) * c_in * h * w;
      for (int c = 0; c < c_in; ++c) {
        for (int ki = 0; ki < s.kernel_h; ++ki) {
          for (int kj = 0; kj < s.kernel_w; ++kj) {
            const int row = (c * s.kernel_h + ki) * s.kernel_w + kj;
            T* dst = cols.data() + static_cast<std::size_t>(row) * np + static_cast<std::size_t>(n) * p;
            for (int oy = 0; oy < oh; ++oy) {
              const int y = oy * s.stride_h + ki - s.pad_h;
              if (y < 0 || y >= h) continue;
              const T* src_row = img + (static_cast<std::size_t>(c) * h + y) * w;
              for (int ox = 0; ox < ow; ++ox) {
                const int x = ox * s.stride_w + kj - s.pad_w;
                if (x >= 0 && x < w) dst[oy * ow + ox] = src_row[x];
              }
            }
          }
        }
      }
    }
  }

  void col2im(const AlignedVector<T>& cols, Tensor<T>& grad_in) const {
    const auto& s = this->spec_;
    const int c_in = this->input_shape_[0], h = this->input_shape_[1], w = this->input_shape_[2];
    const int oh = this->output_shape_[1], ow = this->output_shape_[2];
    const int p = oh * ow;
    const long np = static_cast<long>(batch_) * p;
    for (int n = 0; n < batch_; ++n) {
      T* img = grad_in.data() + static_cast<std::size_t>(n) * c_in * h * w;
      for (int c = 0; c < c_in; ++c) {
        for (int ki = 0; ki < s.kernel_h; ++ki) {
          for (int kj = 0; kj < s.kernel_w; ++kj) {
            const int row = (c * s.kernel_h + ki) * s.kernel_w + kj;
            const T* src = cols.data() + static_cast<std::size_t>(row) * np + static_cast<std::size_t>(n) * p;
            for (int oy = 0; oy < oh; ++oy) {
              const int y = oy * s.stride_h + ki - s.pad_h;
              if (y < 0 || y >= h) continue;
              T* dst_row = img + (static_cast<std::size_t>(c) * h + y) * w;
              for (int ox = 0; ox < ow; ++ox) {
                const int x = ox * s.stride_w + kj - s.pad_w;
                if (x >= 0 && x < w) dst_row[x] += src[oy * ow + ox];
              }
            }
          }
        }
      }
    }
  }

  void compute(const AlignedVector<T>& cols, int n_batch, Tensor<T>& out) const {
    const int cout = this->spec_.out_channels;
    const int p = positions();
    const long np = static_cast<long>(n_batch) * p;
    AlignedVector<T> res(static_cast<std::size_t>(cout) * np);
    ConstMapRM<T> w(weight_.value.data(), cout, patch_);
    ConstMapRM<T> cm(cols.data(), patch_, np);
    MapRM<T> rm(res.data(), cout, np);
    rm.noalias() = w * cm;
    out.resize(batch_shape(n_batch, this->output_shape_));
    for (int n = 0; n < n_batch; ++n) {
      for (int c = 0; c < cout; ++c) {
        const T* src = res.data() + static_cast<std::size_t>(c) * np + static_cast<std::size_t>(n) * p;
        T* dst = out.data() + (static_cast<std::size_t>(n) * cout + c) * p;
        const T b = bias_.value[c];
        for (int i = 0; i < p; ++i) dst[i] = src[i] + b;
      }
    }
  }

  int patch_ = 0;
  int batch_ = 0;
  AlignedVector<T> cols_;
  Parameter<T> weight_;
  Parameter<T> bias_;
};

// ---------------------------------------------------------------------------
// maxpool2d

template <typename T>
class MaxPool2d final : public Layer<T> {
 public:
  MaxPool2d(const LayerSpec& spec, const Shape& in) : Layer<T>(spec, in) {
    if (in.size() != 3) shape_error(spec, "expects [C,H,W] input, got " + shape_string(in));
    const int oh = window_output_extent(in[1], spec.kernel_h, spec.stride_h, 0);
    const int ow = window_output_extent(in[2], spec.kernel_w, spec.stride_w, 0);
    if (oh <= 0 || ow <= 0) shape_error(spec, "pool window larger than input " + shape_string(in));
    this->output_shape_ = {in[0], oh, ow};
  }

  void infer(const Tensor<T>& in, Tensor<T>& out) const override { run(in, out, nullptr); }

  void forward(const Tensor<T>& in, Tensor<T>& out, Mode, Rng&) override {
    batch_ = in.dim(0);
    run(in, out, &argmax_);
  }

  void backward(const Tensor<T>& grad_out, Tensor<T>* grad_in) override {
    if (batch_ == 0) throw Error(ErrorCode::kInvalidState, "maxpool2d backward called before forward");
    if (!grad_in) return;
    grad_in->resize(batch_shape(batch_, this->input_shape_));
    grad_in->fill(T(0));
    for (std::size_t i = 0; i < grad_out.size(); ++i) (*grad_in)[argmax_[i]] += grad_out[i];
  }

  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<MaxPool2d>(*this); }

 private:
  void run(const Tensor<T>& in, Tensor<T>& out, std::vector<std::size_t>* argmax) const {
    const auto& s = this->spec_;
    const int n_batch = in.dim(0);
    const int c_in = this->input_shape_[0], h = this->input_shape_[1], w = this->input_shape_[2];
    const int oh = this->output_shape_[1], ow = this->output_shape_[2];
    out.resize(batch_shape(n_batch, this->output_shape_));
    if (argmax) argmax->resize(out.size());
    std::size_t o = 0;
    for (int n = 0; n < n_batch; ++n) {
      for (int c = 0; c < c_in; ++c) {
        const std::size_t base = (static_cast<std::size_t>(n) * c_in + c) * h * w;
        for (int oy = 0; oy < oh; ++oy) {
          for (int ox = 0; ox < ow; ++ox, ++o) {
            std::size_t best = base + static_cast<std::size_t>(oy * s.stride_h) * w + ox * s.stride_w;
            T best_v = in[best];
            for (int ki = 0; ki < s.kernel_h; ++ki) {
              for (int kj = 0; kj < s.kernel_w; ++kj) {
                const std::size_t idx =
                    base + static_cast<std::size_t>(oy * s.stride_h + ki) * w + ox * s.stride_w + kj;
                if (in[idx] > best_v) {  // strict: ties keep the first index
                  best_v = in[idx];
                  best = idx;
                }
              }
            }
            out[o] = best_v;
            if (argmax) (*argmax)[o] = best;
          }
        }
      }
    }
  }

  int batch_ = 0;
  std::vector<std::size_t> argmax_;
};

// ---------------------------------------------------------------------------
// fully_connected (flattens its input)

template <typename T>
class FullyConnected final : public Layer<T> {
 public:
  FullyConnected(const LayerSpec& spec, const Shape& in) : Layer<T>(spec, in) {
    fan_in_ = static_cast<int>(shape_size(in));
    if (fan_in_ <= 0) shape_error(spec, "empty input");
    this->output_shape_ = {spec.units};
    weight_ = Parameter<T>(spec.name + ".weight", {spec.units, fan_in_});
    bias_ = Parameter<T>(spec.name + ".bias", {spec.units});
  }

  void initialize(Rng& rng) override {
    init_uniform(weight_.value, std::sqrt(6.0 / fan_in_), rng);
    bias_.value.fill(T(0));
  }

  void infer(const Tensor<T>& in, Tensor<T>& out) const override {
    infer_per_example(in, out, this->input_shape_, this->output_shape_,
                      [&](const Tensor<T>& x, Tensor<T>& y) { compute(x, y); });
  }

  void forward(const Tensor<T>& in, Tensor<T>& out, Mode, Rng&) override {
    input_ = in;
    compute(in, out);
  }

  void backward(const Tensor<T>& grad_out, Tensor<T>* grad_in) override {
    if (input_.empty()) throw Error(ErrorCode::kInvalidState, "fully_connected backward called before forward");
    const int n = input_.dim(0);
    const int units = this->spec_.units;
    ConstMapRM<T> g(grad_out.data(), n, units);
    ConstMapRM<T> x(input_.data(), n, fan_in_);
    MapRM<T> gw(weight_.grad.data(), units, fan_in_);
    gw.noalias() += g.transpose() * x;
    for (int i = 0; i < n; ++i) {
      const T* row = grad_out.data() + static_cast<std::size_t>(i) * units;
      for (int u = 0; u < units; ++u) bias_.grad[u] += row[u];
    }
    if (grad_in) {
      grad_in->resize(input_.shape());
      ConstMapRM<T> w(weight_.value.data(), units, fan_in_);
      MapRM<T> gi(grad_in->data(), n, fan_in_);
      gi.noalias() = g * w;
    }
  }

  std::vector<Parameter<T>*> parameters() override { return {&weight_, &bias_}; }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<FullyConnected>(*this); }

 private:
  void compute(const Tensor<T>& in, Tensor<T>& out) const {
    const int n = in.dim(0);
    const int units = this->spec_.units;
    out.resize({n, units});
    ConstMapRM<T> x(in.data(), n, fan_in_);
    ConstMapRM<T> w(weight_.value.data(), units, fan_in_);
    MapRM<T> y(out.data(), n, units);
    y.noalias() = x * w.transpose();
    Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(bias_.value.data(), units);
    y.rowwise() += b;
  }

  int fan_in_ = 0;
  Tensor<T> input_;
  Parameter<T> weight_;
  Parameter<T> bias_;
};

// ---------------------------------------------------------------------------
// relu

template <typename T>
class Relu final : public Layer<T> {
 public:
  Relu(const LayerSpec& spec, const Shape& in) : Layer<T>(spec, in) { this->output_shape_ = in; }

  void infer(const Tensor<T>& in, Tensor<T>& out) const override {
    out.resize(in.shape());
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > T(0) ? in[i] : T(0);
  }

  void forward(const Tensor<T>& in, Tensor<T>& out, Mode, Rng&) override {
    infer(in, out);
    output_ = out;
  }

  void backward(const Tensor<T>& grad_out, Tensor<T>* grad_in) override {
    if (output_.empty()) throw Error(ErrorCode::kInvalidState, "relu backward called before forward");
    if (!grad_in) return;
    grad_in->resize(output_.shape());
    for (std::size_t i = 0; i < output_.size(); ++i) (*grad_in)[i] = output_[i] > T(0) ? grad_out[i] : T(0);
  }

  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Relu>(*this); }

 private:
  Tensor<T> output_;
};

// ---------------------------------------------------------------------------
// dropout (inverted scaling; identity in infer mode)

template <typename T>
class Dropout final : public Layer<T> {
 public:
  Dropout(const LayerSpec& spec, const Shape& in) : Layer<T>(spec, in) { this->output_shape_ = in; }

  void infer(const Tensor<T>& in, Tensor<T>& out) const override { out = in; }

  void forward(const Tensor<T>& in, Tensor<T>& out, Mode mode, Rng& rng) override {
    out.resize(in.shape());
    mask_.resize(in.shape());
    if (mode == Mode::kInfer || this->spec_.rate == 0.0) {
      mask_.fill(T(1));
      out = in;
      return;
    }
    const double keep = 1.0 - this->spec_.rate;
    const T scale = static_cast<T>(1.0 / keep);
    for (std::size_t i = 0; i < in.size(); ++i) {
      mask_[i] = uniform01(rng) < keep ? scale : T(0);
      out[i] = in[i] * mask_[i];
    }
  }

  void backward(const Tensor<T>& grad_out, Tensor<T>* grad_in) override {
    if (mask_.empty()) throw Error(ErrorCode::kInvalidState, "dropout backward called before forward");
    if (!grad_in) return;
    grad_in->resize(mask_.shape());
    for (std::size_t i = 0; i < mask_.size(); ++i) (*grad_in)[i] = grad_out[i] * mask_[i];
  }

  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Dropout>(*this); }

 private:
  Tensor<T> mask_;
};

// ---------------------------------------------------------------------------
// batchnorm: per channel for [C,H,W] inputs, per feature for [F] inputs

template <typename T>
class BatchNorm final : public Layer<T> {
 public:
  BatchNorm(const LayerSpec& spec, const Shape& in) : Layer<T>(spec, in) {
    if (in.empty()) shape_error(spec, "empty input");
    this->output_shape_ = in;
    channels_ = in[0];
    inner_ = static_cast<int>(shape_size(in) / channels_);
    if (in.size() == 1) {
      inner_ = 1;
    }
    gamma_ = Parameter<T>(spec.name + ".gamma", {channels_});
    beta_ = Parameter<T>(spec.name + ".beta", {channels_});
    running_mean_ = Tensor<T>({channels_}, T(0));
    running_var_ = Tensor<T>({channels_}, T(1));
  }

  void initialize(Rng&) override {
    gamma_.value.fill(T(1));
    beta_.value.fill(T(0));
    running_mean_.fill(T(0));
    running_var_.fill(T(1));
  }

  void infer(const Tensor<T>& in, Tensor<T>& out) const override {
    out.resize(in.shape());
    const int n = in.dim(0);
    for (int c = 0; c < channels_; ++c) {
      const T inv = T(1) / std::sqrt(running_var_[c] + static_cast<T>(this->spec_.epsilon));
      const T scale = gamma_.value[c] * inv;
      const T shift = beta_.value[c] - running_mean_[c] * scale;
      for_each_channel(n, c, [&](std::size_t i) { out[i] = in[i] * scale + shift; });
    }
  }

  void forward(const Tensor<T>& in, Tensor<T>& out, Mode mode, Rng&) override {
    if (mode == Mode::kInfer) {
      infer(in, out);
      train_cached_ = false;
      return;
    }
    const int n = in.dim(0);
    if (n < 2) {
      throw Error(ErrorCode::kInvalidArgument, "batchnorm '" + this->spec_.name +
                                                   "': train mode needs a batch of at least 2 examples");
    }
    out.resize(in.shape());
    xhat_.resize(in.shape());
    inv_std_.assign(channels_, T(0));
    const double m = static_cast<double>(n) * inner_;
    const double momentum = this->spec_.momentum;
    for (int c = 0; c < channels_; ++c) {
      double sum = 0.0;
      for_each_channel(n, c, [&](std::size_t i) { sum += in[i]; });
      const double mean = sum / m;
      double sq = 0.0;
      for_each_channel(n, c, [&](std::size_t i) {
        const double d = in[i] - mean;
        sq += d * d;
      });
      const double var = sq / m;
      const T inv = static_cast<T>(1.0 / std::sqrt(var + this->spec_.epsilon));
      inv_std_[c] = inv;
      const T mean_t = static_cast<T>(mean);
      for_each_channel(n, c, [&](std::size_t i) {
        xhat_[i] = (in[i] - mean_t) * inv;
        out[i] = gamma_.value[c] * xhat_[i] + beta_.value[c];
      });
      running_mean_[c] = static_cast<T>(momentum * running_mean_[c] + (1.0 - momentum) * mean);
      running_var_[c] = static_cast<T>(momentum * running_var_[c] + (1.0 - momentum) * var);
    }
    train_cached_ = true;
  }

  void backward(const Tensor<T>& grad_out, Tensor<T>* grad_in) override {
    const int n = grad_out.dim(0);
    if (!train_cached_) {
      if (xhat_.empty()) throw Error(ErrorCode::kInvalidState, "batchnorm backward called before forward");
      throw Error(ErrorCode::kInvalidState, "batchnorm backward after an infer-mode forward");
    }
    if (grad_in) grad_in->resize(grad_out.shape());
    const double m = static_cast<double>(n) * inner_;
    for (int c = 0; c < channels_; ++c) {
      double sum_g = 0.0, sum_gx = 0.0;
      for_each_channel(n, c, [&](std::size_t i) {
        sum_g += grad_out[i];
        sum_gx += static_cast<double>(grad_out[i]) * xhat_[i];
      });
      gamma_.grad[c] += static_cast<T>(sum_gx);
      beta_.grad[c] += static_cast<T>(sum_g);
      if (!grad_in) continue;
      const double k = gamma_.value[c] * inv_std_[c] / m;
      for_each_channel(n, c, [&](std::size_t i) {
        (*grad_in)[i] = static_cast<T>(k * (m * grad_out[i] - sum_g - xhat_[i] * sum_gx));
      });
    }
  }

  std::vector<Parameter<T>*> parameters() override { return {&gamma_, &beta_}; }
  std::vector<Buffer<T>> buffers() override {
    return {{this->spec_.name + ".running_mean", &running_mean_}, {this->spec_.name + ".running_var", &running_var_}};
  }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<BatchNorm>(*this); }

 private:
  template <typename F>
  void for_each_channel(int n, int c, F&& f) const {
    for (int b = 0; b < n; ++b) {
      const std::size_t base = (static_cast<std::size_t>(b) * channels_ + c) * inner_;
      for (int i = 0; i < inner_; ++i) f(base + i);
    }
  }

  int channels_ = 0;
  int inner_ = 1;
  bool train_cached_ = false;
  Tensor<T> xhat_;
  std::vector<T> inv_std_;
  Parameter<T> gamma_;
  Parameter<T> beta_;
  Tensor<T> running_mean_;
  Tensor<T> running_var_;
};

// ---------------------------------------------------------------------------
// softmax over the flattened per-example output

template <typename T>
class Softmax final : public Layer<T> {
 public:
  Softmax(const LayerSpec& spec, const Shape& in) : Layer<T>(spec, in) {
    if (in.size() != 1) shape_error(spec, "expects a flat input, got " + shape_string(in));
    this->output_shape_ = in;
  }

  void infer(const Tensor<T>& in, Tensor<T>& out) const override {
    out.resize(in.shape());
    const int n = in.dim(0);
    const int k = this->input_shape_[0];
    for (int b = 0; b < n; ++b) {
      const T* x = in.data() + static_cast<std::size_t>(b) * k;
      T* y = out.data() + static_cast<std::size_t>(b) * k;
      const T mx = *std::max_element(x, x + k);
      T sum = 0;
      for (int i = 0; i < k; ++i) {
        y[i] = std::exp(x[i] - mx);
        sum += y[i];
      }
      for (int i = 0; i < k; ++i) y[i] /= sum;
    }
  }

  void forward(const Tensor<T>& in, Tensor<T>& out, Mode, Rng&) override {
    infer(in, out);
    output_ = out;
  }

  void backward(const Tensor<T>& grad_out, Tensor<T>* grad_in) override {
    if (output_.empty()) throw Error(ErrorCode::kInvalidState, "softmax backward called before forward");
    if (!grad_in) return;
    grad_in->resize(output_.shape());
    const int n = output_.dim(0);
    const int k = this->input_shape_[0];
    for (int b = 0; b < n; ++b) {
      const T* p = output_.data() + static_cast<std::size_t>(b) * k;
      const T* g = grad_out.data() + static_cast<std::size_t>(b) * k;
      T dot = 0;
      for (int i = 0; i < k; ++i) dot += p[i] * g[i];
      T* gi = grad_in->data() + static_cast<std::size_t>(b) * k;
      for (int i = 0; i < k; ++i) gi[i] = p[i] * (g[i] - dot);
    }
  }

  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Softmax>(*this); }

 private:
  Tensor<T> output_;
};

}  // namespace

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv2d: return "conv2d";
    case LayerKind::kMaxPool2d: return "maxpool2d";
    case LayerKind::kFullyConnected: return "fully_connected";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kBatchNorm: return "batchnorm";
    case LayerKind::kDropout: return "dropout";
    case LayerKind::kSoftmax: return "softmax";
  }
  return "unknown";
}

LayerKind layer_kind_from_string(const std::string& name) {
  for (auto k : {LayerKind::kConv2d, LayerKind::kMaxPool2d, LayerKind::kFullyConnected, LayerKind::kRelu,
                 LayerKind::kBatchNorm, LayerKind::kDropout, LayerKind::kSoftmax}) {
    if (name == to_string(k)) return k;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown layer kind '" + name + "'");
}

LayerSpec LayerSpec::conv2d(std::string name, int out_channels, int kh, int kw, int sh, int sw) {
  LayerSpec s;
  s.kind = LayerKind::kConv2d;
  s.name = std::move(name);
  s.out_channels = out_channels;
  s.kernel_h = kh;
  s.kernel_w = kw;
  s.stride_h = sh;
  s.stride_w = sw;
  return s;
}

LayerSpec LayerSpec::maxpool2d(std::string name, int kh, int kw, int sh, int sw) {
  LayerSpec s;
  s.kind = LayerKind::kMaxPool2d;
  s.name = std::move(name);
  s.kernel_h = kh;
  s.kernel_w = kw;
  s.stride_h = sh;
  s.stride_w = sw;
  return s;
}

LayerSpec LayerSpec::fully_connected(std::string name, int units) {
  LayerSpec s;
  s.kind = LayerKind::kFullyConnected;
  s.name = std::move(name);
  s.units = units;
  return s;
}

LayerSpec LayerSpec::relu(std::string name) {
  LayerSpec s;
  s.kind = LayerKind::kRelu;
  s.name = std::move(name);
  return s;
}

LayerSpec LayerSpec::batchnorm(std::string name, double epsilon, double momentum) {
  LayerSpec s;
  s.kind = LayerKind::kBatchNorm;
  s.name = std::move(name);
  s.epsilon = epsilon;
  s.momentum = momentum;
  return s;
}

LayerSpec LayerSpec::dropout(std::string name, double rate) {
  LayerSpec s;
  s.kind = LayerKind::kDropout;
  s.name = std::move(name);
  s.rate = rate;
  return s;
}

LayerSpec LayerSpec::softmax(std::string name) {
  LayerSpec s;
  s.kind = LayerKind::kSoftmax;
  s.name = std::move(name);
  return s;
}

void LayerSpec::validate() const {
  auto fail = [this](const std::string& why) {
    throw Error(ErrorCode::kInvalidArgument, "layer '" + name + "' (" + to_string(kind) + "): " + why);
  };
  switch (kind) {
    case LayerKind::kConv2d:
      if (out_channels <= 0) fail("out_channels must be > 0");
      [[fallthrough]];
    case LayerKind::kMaxPool2d:
      if (kernel_h <= 0 || kernel_w <= 0) fail("kernel dims must be > 0");
      if (stride_h < 1 || stride_w < 1) fail("stride must be >= 1");
      if (pad_h < 0 || pad_w < 0) fail("padding must be >= 0");
      if (kind == LayerKind::kMaxPool2d && (pad_h != 0 || pad_w != 0)) fail("padding unsupported for pooling");
      break;
    case LayerKind::kFullyConnected:
      if (units <= 0) fail("units must be > 0");
      break;
    case LayerKind::kDropout:
      if (!(rate >= 0.0 && rate < 1.0)) fail("rate must be in [0, 1)");
      break;
    case LayerKind::kBatchNorm:
      if (!(epsilon > 0.0)) fail("epsilon must be > 0");
      if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must be in [0, 1)");
      break;
    case LayerKind::kRelu:
    case LayerKind::kSoftmax:
      break;
  }
}

int window_output_extent(int in, int kernel, int stride, int pad) {
  const int span = in + 2 * pad - kernel;
  if (span < 0) return 0;
  return span / stride + 1;
}

template <typename T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& spec, const Shape& input_shape) {
  spec.validate();
  switch (spec.kind) {
    case LayerKind::kConv2d: return std::make_unique<Conv2d<T>>(spec, input_shape);
    case LayerKind::kMaxPool2d: return std::make_unique<MaxPool2d<T>>(spec, input_shape);
    case LayerKind::kFullyConnected: return std::make_unique<FullyConnected<T>>(spec, input_shape);
    case LayerKind::kRelu: return std::make_unique<Relu<T>>(spec, input_shape);
    case LayerKind::kBatchNorm: return std::make_unique<BatchNorm<T>>(spec, input_shape);
    case LayerKind::kDropout: return std::make_unique<Dropout<T>>(spec, input_shape);
    case LayerKind::kSoftmax: return std::make_unique<Softmax<T>>(spec, input_shape);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown layer kind");
}

template std::unique_ptr<Layer<float>> make_layer<float>(const LayerSpec&, const Shape&);
template std::unique_ptr<Layer<double>> make_layer<double>(const LayerSpec&, const Shape&);

}  // namespace kwsep::nn
