// Copyright 2026 The scene_forge Authors
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

#include "scene_forge/nn/layers.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace scene_forge::nn {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapRow = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMapRow = Eigen::Map<const RowMat<T>>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// ---------------------------------------------------------------------------
// Convolution ("same" zero padding, stride 1, cross-correlation). Conv1D is
// the height-1 case of the 2-D kernel.

template <typename T>
class ConvLayer final : public Layer<T> {
 public:
  ConvLayer(const LayerSpec& spec, const Shape& in, Rng& rng)
      : Layer<T>(spec, in, infer_output_shape(spec, in)) {
    const bool one_d = spec.kind == LayerKind::kConv1D;
    cin_ = in[0];
    h_ = one_d ? 1 : in[1];
    w_ = one_d ? in[1] : in[2];
    kh_ = one_d ? 1 : spec.kernel_h;
    kw_ = spec.kernel_w;
    cout_ = spec.units;
    pad_top_ = (kh_ - 1) / 2;
    pad_left_ = (kw_ - 1) / 2;
    const Shape wshape = one_d ? Shape{cout_, cin_, kw_} : Shape{cout_, cin_, kh_, kw_};
    weight_ = {"weight", Tensor<T>(wshape), Tensor<T>(wshape)};
    bias_ = {"bias", Tensor<T>({cout_}), Tensor<T>({cout_})};
    const double fan_in = static_cast<double>(cin_) * kh_ * kw_;
    const double limit = std::sqrt(6.0 / fan_in);
    for (auto& v : weight_.value.values()) v = static_cast<T>(rng.uniform(-limit, limit));
    init_active_window();
  }

  Tensor<T> forward(const Tensor<T>& x, bool) override {
    const int n = this->check_input(x);
    input_ = x;
    const int hw = h_ * w_;
    const int k = active_taps();
    Tensor<T> y(batched(n, this->output_shape_));
    AlignedVector<T> col(static_cast<std::size_t>(k) * hw);
    const RowMat<T> wm = active_weights();
    Eigen::Map<const Vec<T>> b(bias_.value.data(), cout_);
    for (int s = 0; s < n; ++s) {
      im2col(x.data() + static_cast<std::size_t>(s) * cin_ * hw, col.data());
      MapRow<T> ym(y.data() + static_cast<std::size_t>(s) * cout_ * hw, cout_, hw);
      ym.noalias() = wm * ConstMapRow<T>(col.data(), k, hw);
      ym.colwise() += b;
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    const int n = input_.dim(0);
    const int hw = h_ * w_;
    const int k = active_taps();
    Tensor<T> dx;
    if (this->input_grad_) dx = Tensor<T>(input_.shape());
    AlignedVector<T> col(static_cast<std::size_t>(k) * hw);
    AlignedVector<T> dcol(this->input_grad_ ? col.size() : 0);
    const RowMat<T> wm = active_weights();
    RowMat<T> dwm = RowMat<T>::Zero(cout_, k);
    Eigen::Map<Vec<T>> db(bias_.grad.data(), cout_);
    for (int s = 0; s < n; ++s) {
      ConstMapRow<T> dym(dy.data() + static_cast<std::size_t>(s) * cout_ * hw, cout_, hw);
      im2col(input_.data() + static_cast<std::size_t>(s) * cin_ * hw, col.data());
      dwm.noalias() += dym * ConstMapRow<T>(col.data(), k, hw).transpose();
      db += dym.rowwise().sum();
      if (this->input_grad_) {
        MapRow<T>(dcol.data(), k, hw).noalias() = wm.transpose() * dym;
        col2im(dcol.data(), dx.data() + static_cast<std::size_t>(s) * cin_ * hw);
      }
    }
    scatter_weight_grad(dwm);
    return dx;
  }

  std::vector<Parameter<T>*> parameters() override { return {&weight_, &bias_}; }

 private:
  // Kernel taps whose receptive field can reach the input for some output
  // position; the others only ever multiply padding. With kernels wider
  // than the input this shrinks the GEMMs considerably.
  void init_active_window() {
    i_lo_ = std::max(0, pad_top_ - (h_ - 1));
    i_hi_ = std::min(kh_, pad_top_ + h_);
    j_lo_ = std::max(0, pad_left_ - (w_ - 1));
    j_hi_ = std::min(kw_, pad_left_ + w_);
  }
  int active_taps() const { return cin_ * (i_hi_ - i_lo_) * (j_hi_ - j_lo_); }
  bool full_window() const { return active_taps() == cin_ * kh_ * kw_; }

  std::size_t weight_column(int c, int i, int j) const {
    return (static_cast<std::size_t>(c) * kh_ + i) * kw_ + j;
  }

  RowMat<T> active_weights() const {
    const int k = active_taps();
    if (full_window()) return ConstMapRow<T>(weight_.value.data(), cout_, k);
    RowMat<T> wm(cout_, k);
    ConstMapRow<T> full(weight_.value.data(), cout_, cin_ * kh_ * kw_);
    int a = 0;
    for (int c = 0; c < cin_; ++c)
      for (int i = i_lo_; i < i_hi_; ++i)
        for (int j = j_lo_; j < j_hi_; ++j, ++a) wm.col(a) = full.col(weight_column(c, i, j));
    return wm;
  }

  void scatter_weight_grad(const RowMat<T>& dwm) {
    MapRow<T> full(weight_.grad.data(), cout_, cin_ * kh_ * kw_);
    if (full_window()) {
      full += dwm;
      return;
    }
    int a = 0;
    for (int c = 0; c < cin_; ++c)
      for (int i = i_lo_; i < i_hi_; ++i)
        for (int j = j_lo_; j < j_hi_; ++j, ++a) full.col(weight_column(c, i, j)) += dwm.col(a);
  }

  // Valid output columns for kernel column j: [x0, x1).
  void column_range(int j, int& x0, int& x1) const {
    x0 = std::min(w_, std::max(0, pad_left_ - j));
    x1 = std::min(w_, w_ + pad_left_ - j);
    if (x1 < x0) x1 = x0;
  }

  void im2col(const T* x, T* col) const {
    const int hw = h_ * w_;
    T* dst = col;
    for (int c = 0; c < cin_; ++c)
      for (int i = i_lo_; i < i_hi_; ++i)
        for (int j = j_lo_; j < j_hi_; ++j, dst += hw) {
          int x0, x1;
          column_range(j, x0, x1);
          for (int y = 0; y < h_; ++y) {
            T* d = dst + static_cast<std::size_t>(y) * w_;
            const int sy = y + i - pad_top_;
            if (sy < 0 || sy >= h_) {
              std::fill(d, d + w_, T(0));
              continue;
            }
            const T* src = x + (static_cast<std::size_t>(c) * h_ + sy) * w_ + (j - pad_left_);
            std::fill(d, d + x0, T(0));
            std::copy(src + x0, src + x1, d + x0);
            std::fill(d + x1, d + w_, T(0));
          }
        }
  }

  void col2im(const T* col, T* dx) const {
    const int hw = h_ * w_;
    const T* src = col;
    for (int c = 0; c < cin_; ++c)
      for (int i = i_lo_; i < i_hi_; ++i)
        for (int j = j_lo_; j < j_hi_; ++j, src += hw) {
          int x0, x1;
          column_range(j, x0, x1);
          for (int y = 0; y < h_; ++y) {
            const int sy = y + i - pad_top_;
            if (sy < 0 || sy >= h_) continue;
            T* d = dx + (static_cast<std::size_t>(c) * h_ + sy) * w_ + (j - pad_left_);
            const T* s = src + static_cast<std::size_t>(y) * w_;
            for (int xx = x0; xx < x1; ++xx) d[xx] += s[xx];
          }
        }
  }

  int cin_, h_, w_, kh_, kw_, cout_, pad_top_, pad_left_;
  int i_lo_ = 0, i_hi_ = 0, j_lo_ = 0, j_hi_ = 0;
  Parameter<T> weight_, bias_;
  Tensor<T> input_;
};

// ---------------------------------------------------------------------------
// Batch normalization over the batch and all trailing axes, per feature
// (first sample axis).

template <typename T>
class BatchNormLayer final : public Layer<T> {
 public:
  BatchNormLayer(const LayerSpec& spec, const Shape& in)
      : Layer<T>(spec, in, in) {
    features_ = in[0];
    inner_ = static_cast<int>(shape_size(in) / features_);
    gamma_ = {"gamma", Tensor<T>({features_}, T(1)), Tensor<T>({features_})};
    beta_ = {"beta", Tensor<T>({features_}), Tensor<T>({features_})};
    running_mean_ = Tensor<T>({features_});
    running_var_ = Tensor<T>({features_}, T(1));
  }

  Tensor<T> forward(const Tensor<T>& x, bool training) override {
    const int n = this->check_input(x);
    Tensor<T> y(x.shape());
    if (!training) {
      for (int f = 0; f < features_; ++f) {
        const T scale = gamma_.value[f] /
                        std::sqrt(running_var_[f] + static_cast<T>(kBatchNormEpsilon));
        const T shift = beta_.value[f] - running_mean_[f] * scale;
        for (int s = 0; s < n; ++s) block(y.data(), s, f) = block(x.data(), s, f) * scale + shift;
      }
      return y;
    }
    if (n < 2) {
      fail(ErrorCode::kInvalidArgument, "batch normalization needs a batch of at least 2 in training");
    }
    xhat_ = Tensor<T>(x.shape());
    inv_std_.assign(features_, T(0));
    const double count = static_cast<double>(n) * inner_;
    const T momentum = static_cast<T>(kBatchNormMomentum);
    for (int f = 0; f < features_; ++f) {
      double sum = 0.0;
      for (int s = 0; s < n; ++s) sum += static_cast<double>(block(x.data(), s, f).sum());
      const double mean = sum / count;
      double sq = 0.0;
      for (int s = 0; s < n; ++s) {
        sq += static_cast<double>((block(x.data(), s, f) - static_cast<T>(mean)).square().sum());
      }
      const double var = sq / count;
      const double inv_std = 1.0 / std::sqrt(var + kBatchNormEpsilon);
      inv_std_[f] = static_cast<T>(inv_std);
      for (int s = 0; s < n; ++s) {
        auto xh = block(xhat_.data(), s, f);
        xh = (block(x.data(), s, f) - static_cast<T>(mean)) * static_cast<T>(inv_std);
        block(y.data(), s, f) = gamma_.value[f] * xh + beta_.value[f];
      }
      running_mean_[f] = momentum * running_mean_[f] + (1 - momentum) * static_cast<T>(mean);
      running_var_[f] = momentum * running_var_[f] + (1 - momentum) * static_cast<T>(var);
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    const int n = xhat_.dim(0);
    const double count = static_cast<double>(n) * inner_;
    Tensor<T> dx(xhat_.shape());
    for (int f = 0; f < features_; ++f) {
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (int s = 0; s < n; ++s) {
        const auto g = block(dy.data(), s, f);
        sum_dy += static_cast<double>(g.sum());
        sum_dy_xhat += static_cast<double>((g * block(xhat_.data(), s, f)).sum());
      }
      gamma_.grad[f] += static_cast<T>(sum_dy_xhat);
      beta_.grad[f] += static_cast<T>(sum_dy);
      if (!this->input_grad_) continue;
      const double scale = gamma_.value[f] * inv_std_[f] / count;
      for (int s = 0; s < n; ++s) {
        block(dx.data(), s, f) =
            static_cast<T>(scale) *
            (static_cast<T>(count) * block(dy.data(), s, f) - static_cast<T>(sum_dy) -
             block(xhat_.data(), s, f) * static_cast<T>(sum_dy_xhat));
      }
    }
    return dx;
  }

  std::vector<Parameter<T>*> parameters() override { return {&gamma_, &beta_}; }
  std::vector<Tensor<T>*> buffers() override { return {&running_mean_, &running_var_}; }

 private:
  // Contiguous values of feature f in sample s.
  Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>> block(T* base, int s, int f) const {
    return {base + (static_cast<std::size_t>(s) * features_ + f) * inner_, inner_};
  }
  Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>> block(const T* base, int s, int f) const {
    return {base + (static_cast<std::size_t>(s) * features_ + f) * inner_, inner_};
  }

  int features_ = 0;
  int inner_ = 0;
  Parameter<T> gamma_, beta_;
  Tensor<T> running_mean_, running_var_;
  Tensor<T> xhat_;
  std::vector<T> inv_std_;
};

// ---------------------------------------------------------------------------

template <typename T>
class ReluLayer final : public Layer<T> {
 public:
  ReluLayer(const LayerSpec& spec, const Shape& in) : Layer<T>(spec, in, in) {}

  Tensor<T> forward(const Tensor<T>& x, bool) override {
    this->check_input(x);
    output_ = Tensor<T>(x.shape());
    T* y = output_.data();
    const T* xs = x.data();
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::max(xs[i], T(0));
    return output_;
  }

  // The output is positive exactly where the input was.
  Tensor<T> backward(const Tensor<T>& dy) override {
    Tensor<T> dx(output_.shape());
    const T* y = output_.data();
    const T* g = dy.data();
    T* d = dx.data();
    for (std::size_t i = 0; i < dx.size(); ++i) d[i] = y[i] > T(0) ? g[i] : T(0);
    return dx;
  }

 private:
  Tensor<T> output_;
};

// ---------------------------------------------------------------------------

template <typename T>
class MaxPoolLayer final : public Layer<T> {
 public:
  MaxPoolLayer(const LayerSpec& spec, const Shape& in)
      : Layer<T>(spec, in, infer_output_shape(spec, in)) {}

  Tensor<T> forward(const Tensor<T>& x, bool) override {
    const int n = this->check_input(x);
    const int c = this->input_shape_[0], h = this->input_shape_[1], w = this->input_shape_[2];
    const int ph = this->spec_.pool_h, pw = this->spec_.pool_w;
    const int oh = h / ph, ow = w / pw;
    Tensor<T> y(batched(n, this->output_shape_));
    argmax_.assign(y.size(), 0);
    in_shape_ = x.shape();
    std::size_t o = 0;
    for (int s = 0; s < n; ++s)
      for (int ch = 0; ch < c; ++ch) {
        const std::size_t base = (static_cast<std::size_t>(s) * c + ch) * h * w;
        for (int oy = 0; oy < oh; ++oy)
          for (int ox = 0; ox < ow; ++ox, ++o) {
            std::size_t best = base + static_cast<std::size_t>(oy * ph) * w + ox * pw;
            for (int i = 0; i < ph; ++i)
              for (int j = 0; j < pw; ++j) {
                const std::size_t idx = base + static_cast<std::size_t>(oy * ph + i) * w + ox * pw + j;
                if (x[idx] > x[best]) best = idx;  // strict: first occurrence wins ties
              }
            y[o] = x[best];
            argmax_[o] = best;
          }
      }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    Tensor<T> dx(in_shape_);
    for (std::size_t o = 0; o < dy.size(); ++o) dx[argmax_[o]] += dy[o];
    return dx;
  }

 private:
  std::vector<std::size_t> argmax_;
  Shape in_shape_;
};

// ---------------------------------------------------------------------------

template <typename T>
class DropoutLayer final : public Layer<T> {
 public:
  DropoutLayer(const LayerSpec& spec, const Shape& in, std::uint64_t seed)
      : Layer<T>(spec, in, in), rng_(seed) {}

  Tensor<T> forward(const Tensor<T>& x, bool training) override {
    this->check_input(x);
    active_ = training && this->spec_.drop_prob > 0.0;
    if (!active_) return x;
    if (!frozen_ || mask_.size() != x.size()) {
      const T keep_scale = static_cast<T>(1.0 / (1.0 - this->spec_.drop_prob));
      mask_.resize(x.size());
      for (auto& m : mask_) m = rng_.uniform() < this->spec_.drop_prob ? T(0) : keep_scale;
    }
    Tensor<T> y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * mask_[i];
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    if (!active_) return dy;
    Tensor<T> dx(dy.shape());
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = dy[i] * mask_[i];
    return dx;
  }

  void set_mask_frozen(bool frozen) override { frozen_ = frozen; }
  void reseed(std::uint64_t seed) override { rng_ = Rng(seed); }

 private:
  Rng rng_;
  std::vector<T> mask_;
  bool frozen_ = false;
  bool active_ = false;
};

// ---------------------------------------------------------------------------

template <typename T>
class GlobalAvgPoolLayer final : public Layer<T> {
 public:
  GlobalAvgPoolLayer(const LayerSpec& spec, const Shape& in)
      : Layer<T>(spec, in, infer_output_shape(spec, in)) {}

  Tensor<T> forward(const Tensor<T>& x, bool) override {
    const int n = this->check_input(x);
    const int c = this->input_shape_[0];
    const int area = this->input_shape_[1] * this->input_shape_[2];
    Tensor<T> y({n, c});
    for (int s = 0; s < n; ++s)
      for (int ch = 0; ch < c; ++ch) {
        const T* p = x.data() + (static_cast<std::size_t>(s) * c + ch) * area;
        double sum = 0.0;
        for (int i = 0; i < area; ++i) sum += p[i];
        y[static_cast<std::size_t>(s) * c + ch] = static_cast<T>(sum / area);
      }
    batch_ = n;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    const int c = this->input_shape_[0];
    const int area = this->input_shape_[1] * this->input_shape_[2];
    Tensor<T> dx(batched(batch_, this->input_shape_));
    for (int s = 0; s < batch_; ++s)
      for (int ch = 0; ch < c; ++ch) {
        const T g = dy[static_cast<std::size_t>(s) * c + ch] / static_cast<T>(area);
        T* p = dx.data() + (static_cast<std::size_t>(s) * c + ch) * area;
        std::fill(p, p + area, g);
      }
    return dx;
  }

 private:
  int batch_ = 0;
};

// ---------------------------------------------------------------------------

template <typename T>
class DenseLayer final : public Layer<T> {
 public:
  DenseLayer(const LayerSpec& spec, const Shape& in, Rng& rng)
      : Layer<T>(spec, in, infer_output_shape(spec, in)) {
    in_ = in[0];
    out_ = spec.units;
    weight_ = {"weight", Tensor<T>({out_, in_}), Tensor<T>({out_, in_})};
    bias_ = {"bias", Tensor<T>({out_}), Tensor<T>({out_})};
    const double limit = std::sqrt(6.0 / in_);
    for (auto& v : weight_.value.values()) v = static_cast<T>(rng.uniform(-limit, limit));
  }

  Tensor<T> forward(const Tensor<T>& x, bool) override {
    const int n = this->check_input(x);
    input_ = x;
    Tensor<T> y({n, out_});
    MapRow<T> ym(y.data(), n, out_);
    ym.noalias() = ConstMapRow<T>(x.data(), n, in_) *
                   ConstMapRow<T>(weight_.value.data(), out_, in_).transpose();
    ym.rowwise() += Eigen::Map<const Vec<T>>(bias_.value.data(), out_).transpose();
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    const int n = input_.dim(0);
    ConstMapRow<T> dym(dy.data(), n, out_);
    MapRow<T>(weight_.grad.data(), out_, in_).noalias() +=
        dym.transpose() * ConstMapRow<T>(input_.data(), n, in_);
    Eigen::Map<Vec<T>>(bias_.grad.data(), out_) += dym.colwise().sum().transpose();
    Tensor<T> dx;
    if (!this->input_grad_) return dx;
    dx = Tensor<T>({n, in_});
    MapRow<T>(dx.data(), n, in_).noalias() =
        dym * ConstMapRow<T>(weight_.value.data(), out_, in_);
    return dx;
  }

  std::vector<Parameter<T>*> parameters() override { return {&weight_, &bias_}; }

 private:
  int in_ = 0, out_ = 0;
  Parameter<T> weight_, bias_;
  Tensor<T> input_;
};

// ---------------------------------------------------------------------------

template <typename T>
class SoftmaxLayer final : public Layer<T> {
 public:
  SoftmaxLayer(const LayerSpec& spec, const Shape& in) : Layer<T>(spec, in, in) {}

  Tensor<T> forward(const Tensor<T>& x, bool) override {
    const int n = this->check_input(x);
    output_ = Tensor<T>(x.shape());
    softmax_rows(x.data(), output_.data(), n, this->input_shape_[0]);
    return output_;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    const int n = output_.dim(0), k = output_.dim(1);
    Tensor<T> dx(output_.shape());
    for (int s = 0; s < n; ++s) {
      const T* p = output_.data() + static_cast<std::size_t>(s) * k;
      const T* g = dy.data() + static_cast<std::size_t>(s) * k;
      double dot = 0.0;
      for (int i = 0; i < k; ++i) dot += static_cast<double>(p[i]) * g[i];
      for (int i = 0; i < k; ++i) {
        dx[static_cast<std::size_t>(s) * k + i] = static_cast<T>(p[i] * (g[i] - dot));
      }
    }
    return dx;
  }

 private:
  Tensor<T> output_;
};

// ---------------------------------------------------------------------------
// Mean and standard deviation over time (population divisor), concatenated
// as [means..., stds...].

template <typename T>
class StatsPoolLayer final : public Layer<T> {
 public:
  StatsPoolLayer(const LayerSpec& spec, const Shape& in)
      : Layer<T>(spec, in, infer_output_shape(spec, in)) {}

  Tensor<T> forward(const Tensor<T>& x, bool) override {
    const int n = this->check_input(x);
    const int c = this->input_shape_[0], t = this->input_shape_[1];
    input_ = x;
    mean_.assign(static_cast<std::size_t>(n) * c, 0.0);
    std_.assign(static_cast<std::size_t>(n) * c, 0.0);
    Tensor<T> y({n, 2 * c});
    for (int s = 0; s < n; ++s)
      for (int ch = 0; ch < c; ++ch) {
        const T* p = x.data() + (static_cast<std::size_t>(s) * c + ch) * t;
        double sum = 0.0;
        for (int i = 0; i < t; ++i) sum += p[i];
        const double mean = sum / t;
        double sq = 0.0;
        for (int i = 0; i < t; ++i) sq += (p[i] - mean) * (p[i] - mean);
        const double sd = std::sqrt(sq / t + kStatsPoolVarianceFloor);
        const std::size_t k = static_cast<std::size_t>(s) * c + ch;
        mean_[k] = mean;
        std_[k] = sd;
        y[static_cast<std::size_t>(s) * 2 * c + ch] = static_cast<T>(mean);
        y[static_cast<std::size_t>(s) * 2 * c + c + ch] = static_cast<T>(sd);
      }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    const int n = input_.dim(0);
    const int c = this->input_shape_[0], t = this->input_shape_[1];
    Tensor<T> dx(input_.shape());
    for (int s = 0; s < n; ++s)
      for (int ch = 0; ch < c; ++ch) {
        const std::size_t k = static_cast<std::size_t>(s) * c + ch;
        const double g_mean = dy[static_cast<std::size_t>(s) * 2 * c + ch];
        const double g_std = dy[static_cast<std::size_t>(s) * 2 * c + c + ch];
        const T* p = input_.data() + k * t;
        T* d = dx.data() + k * t;
        for (int i = 0; i < t; ++i) {
          d[i] = static_cast<T>(g_mean / t + g_std * (p[i] - mean_[k]) / (t * std_[k]));
        }
      }
    return dx;
  }

 private:
  Tensor<T> input_;
  std::vector<double> mean_, std_;
};

}  // namespace

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv2D: return "Conv2D";
    case LayerKind::kConv1D: return "Conv1D";
    case LayerKind::kBatchNorm: return "BatchNorm";
    case LayerKind::kReLU: return "ReLU";
    case LayerKind::kMaxPool2D: return "MaxPool2D";
    case LayerKind::kDropout: return "Dropout";
    case LayerKind::kGlobalAvgPool2D: return "GlobalAvgPool2D";
    case LayerKind::kDense: return "Dense";
    case LayerKind::kSoftmax: return "Softmax";
    case LayerKind::kStatsPool: return "StatsPool";
  }
  return "?";
}

LayerSpec LayerSpec::conv2d(int filters, int kernel_h, int kernel_w) {
  LayerSpec s;
  s.kind = LayerKind::kConv2D;
  s.units = filters;
  s.kernel_h = kernel_h;
  s.kernel_w = kernel_w;
  return s;
}
LayerSpec LayerSpec::conv1d(int filters, int kernel) {
  LayerSpec s;
  s.kind = LayerKind::kConv1D;
  s.units = filters;
  s.kernel_w = kernel;
  return s;
}
LayerSpec LayerSpec::batch_norm() { return {.kind = LayerKind::kBatchNorm}; }
LayerSpec LayerSpec::relu() { return {.kind = LayerKind::kReLU}; }
LayerSpec LayerSpec::max_pool2d(int pool_h, int pool_w) {
  LayerSpec s;
  s.kind = LayerKind::kMaxPool2D;
  s.pool_h = pool_h;
  s.pool_w = pool_w;
  return s;
}
LayerSpec LayerSpec::dropout(double p) {
  LayerSpec s;
  s.kind = LayerKind::kDropout;
  s.drop_prob = p;
  return s;
}
LayerSpec LayerSpec::global_avg_pool2d() { return {.kind = LayerKind::kGlobalAvgPool2D}; }
LayerSpec LayerSpec::dense(int units) {
  LayerSpec s;
  s.kind = LayerKind::kDense;
  s.units = units;
  return s;
}
LayerSpec LayerSpec::softmax() { return {.kind = LayerKind::kSoftmax}; }
LayerSpec LayerSpec::stats_pool() { return {.kind = LayerKind::kStatsPool}; }

void LayerSpec::validate() const {
  const auto bad = [&](const std::string& why) {
    fail(ErrorCode::kInvalidArgument, to_string(kind) + ": " + why);
  };
  switch (kind) {
    case LayerKind::kConv2D:
      if (units < 1 || kernel_h < 1 || kernel_w < 1) bad("filters and kernel must be positive");
      break;
    case LayerKind::kConv1D:
      if (units < 1 || kernel_w < 1) bad("filters and kernel must be positive");
      break;
    case LayerKind::kDense:
      if (units < 1) bad("units must be positive");
      break;
    case LayerKind::kMaxPool2D:
      if (pool_h < 1 || pool_w < 0) bad("pool window must be positive");
      break;
    case LayerKind::kDropout:
      if (!(drop_prob >= 0.0 && drop_prob < 1.0)) bad("drop probability must lie in [0, 1)");
      break;
    default:
      break;
  }
}

std::string LayerSpec::describe() const {
  switch (kind) {
    case LayerKind::kConv2D:
      return "Conv2D(" + std::to_string(kernel_h) + "x" + std::to_string(kernel_w) + ")-" +
             std::to_string(units);
    case LayerKind::kConv1D:
      return "Conv1D(" + std::to_string(kernel_w) + ")-" + std::to_string(units);
    case LayerKind::kMaxPool2D:
      return "MaxPool2D(" + std::to_string(pool_h) + "x" +
             (pool_w == 0 ? std::string("T") : std::to_string(pool_w)) + ")";
    case LayerKind::kDropout: {
      std::string p = std::to_string(drop_prob);
      p.erase(p.find_last_not_of('0') + 1);
      return "Dropout(" + p + ")";
    }
    case LayerKind::kDense:
      return "Dense-" + std::to_string(units);
    default:
      return to_string(kind);
  }
}

Shape infer_output_shape(const LayerSpec& spec, const Shape& in) {
  spec.validate();
  const auto need_rank = [&](std::size_t r) {
    if (in.size() != r) {
      fail(ErrorCode::kShapeMismatch, spec.describe() + " expects a rank-" +
                                          std::to_string(r) + " sample, got " +
                                          shape_string(in));
    }
  };
  switch (spec.kind) {
    case LayerKind::kConv2D:
      need_rank(3);
      return {spec.units, in[1], in[2]};
    case LayerKind::kConv1D:
      need_rank(2);
      return {spec.units, in[1]};
    case LayerKind::kMaxPool2D: {
      need_rank(3);
      const int pw = spec.pool_w == 0 ? in[2] : spec.pool_w;
      if (spec.pool_h > in[1] || pw > in[2]) {
        fail(ErrorCode::kShapeMismatch, spec.describe() + " window larger than input " +
                                            shape_string(in));
      }
      return {in[0], in[1] / spec.pool_h, in[2] / pw};
    }
    case LayerKind::kGlobalAvgPool2D:
      need_rank(3);
      return {in[0]};
    case LayerKind::kDense:
      need_rank(1);
      return {spec.units};
    case LayerKind::kSoftmax:
      need_rank(1);
      return in;
    case LayerKind::kStatsPool:
      need_rank(2);
      if (in[1] < 2) fail(ErrorCode::kShapeMismatch, "StatsPool needs at least 2 frames");
      return {2 * in[0]};
    case LayerKind::kBatchNorm:
    case LayerKind::kReLU:
    case LayerKind::kDropout:
      if (in.empty()) fail(ErrorCode::kShapeMismatch, spec.describe() + " on a scalar");
      return in;
  }
  return in;
}

template <typename T>
int Layer<T>::check_input(const Tensor<T>& x) const {
  if (x.rank() != static_cast<int>(input_shape_.size()) + 1 ||
      sample_shape(x.shape()) != input_shape_) {
    fail(ErrorCode::kShapeMismatch, spec_.describe() + " expects samples of " +
                                        shape_string(input_shape_) + ", got batch " +
                                        shape_string(x.shape()));
  }
  return x.dim(0);
}

template <typename T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& spec, const Shape& input,
                                     Rng& init_rng) {
  LayerSpec resolved = spec;
  if (spec.kind == LayerKind::kMaxPool2D && spec.pool_w == 0) {
    if (input.size() != 3) fail(ErrorCode::kShapeMismatch, "MaxPool2D expects a rank-3 sample");
    resolved.pool_w = input[2];
  }
  infer_output_shape(resolved, input);
  switch (resolved.kind) {
    case LayerKind::kConv2D:
    case LayerKind::kConv1D:
      return std::make_unique<ConvLayer<T>>(resolved, input, init_rng);
    case LayerKind::kBatchNorm:
      return std::make_unique<BatchNormLayer<T>>(resolved, input);
    case LayerKind::kReLU:
      return std::make_unique<ReluLayer<T>>(resolved, input);
    case LayerKind::kMaxPool2D:
      return std::make_unique<MaxPoolLayer<T>>(resolved, input);
    case LayerKind::kDropout:
      return std::make_unique<DropoutLayer<T>>(resolved, input, init_rng.next());
    case LayerKind::kGlobalAvgPool2D:
      return std::make_unique<GlobalAvgPoolLayer<T>>(resolved, input);
    case LayerKind::kDense:
      return std::make_unique<DenseLayer<T>>(resolved, input, init_rng);
    case LayerKind::kSoftmax:
      return std::make_unique<SoftmaxLayer<T>>(resolved, input);
    case LayerKind::kStatsPool:
      return std::make_unique<StatsPoolLayer<T>>(resolved, input);
  }
  fail(ErrorCode::kInvalidArgument, "unknown layer kind");
}

template <typename T>
void softmax_rows(const T* logits, T* probs, int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    const T* x = logits + static_cast<std::size_t>(r) * cols;
    T* p = probs + static_cast<std::size_t>(r) * cols;
    const T peak = *std::max_element(x, x + cols);
    double sum = 0.0;
    for (int i = 0; i < cols; ++i) sum += std::exp(static_cast<double>(x[i] - peak));
    for (int i = 0; i < cols; ++i) {
      p[i] = static_cast<T>(std::exp(static_cast<double>(x[i] - peak)) / sum);
    }
  }
}

double cross_entropy(std::span<const double> probs, int label) {
  if (label < 0 || label >= static_cast<int>(probs.size())) {
    fail(ErrorCode::kInvalidArgument, "label " + std::to_string(label) + " out of range");
  }
  return -std::log(probs[label]);
}

template class Layer<float>;
template class Layer<double>;
template std::unique_ptr<Layer<float>> make_layer<float>(const LayerSpec&, const Shape&, Rng&);
template std::unique_ptr<Layer<double>> make_layer<double>(const LayerSpec&, const Shape&, Rng&);
template void softmax_rows<float>(const float*, float*, int, int);
template void softmax_rows<double>(const double*, double*, int, int);

}  // namespace scene_forge::nn
