#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "augkd/kernels.hpp"
#include "augkd/tensor.hpp"

namespace augkd::nn {

// Layer primitives with explicit forward/backward. Layers stash whatever the
// backward pass needs when `record` is set; backward accumulates parameter
// gradients and returns the input gradient. Activations are NCHW.

template <typename T>
struct Parameter {
  Tensor<T> value;
  Tensor<T> grad;

  explicit Parameter(std::vector<int> shape = {})
      : value(std::move(shape)), grad(value.shape()) {}

  void zero_grad() { grad.zero(); }
};

template <typename T>
struct ParamRef {
  std::string name;
  Parameter<T>* param;
};

template <typename T>
struct BufferRef {
  std::string name;
  Tensor<T>* value;
};

using Rng = std::mt19937_64;

template <typename T>
void init_conv_weight(Tensor<T>& w, int out_ch, int ksize, Rng& rng) {
  // He init scaled by fan-out, the usual residual-net choice.
  const double std = std::sqrt(2.0 / (static_cast<double>(out_ch) * ksize * ksize));
  std::normal_distribution<double> dist(0.0, std);
  for (int64_t i = 0; i < w.numel(); ++i) w[i] = static_cast<T>(dist(rng));
}

template <typename T>
void init_linear(Tensor<T>& w, Tensor<T>& b, int in_features, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_features));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (int64_t i = 0; i < w.numel(); ++i) w[i] = static_cast<T>(dist(rng));
  for (int64_t i = 0; i < b.numel(); ++i) b[i] = static_cast<T>(dist(rng));
}

// ---------------------------------------------------------------------------

template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(int in_ch, int out_ch, int ksize, int stride, int pad, Rng& rng)
      : in_ch_(in_ch), out_ch_(out_ch), ksize_(ksize), stride_(stride), pad_(pad),
        weight_({out_ch, in_ch * ksize * ksize}) {
    init_conv_weight(weight_.value, out_ch, ksize, rng);
  }

  Tensor<T> forward(const Tensor<T>& x, bool record) {
    check_shape(x.ndim() == 4 && x.dim(1) == in_ch_,
                "Conv2d: expected [N," + std::to_string(in_ch_) + ",H,W], got " +
                    Tensor<T>::shape_str(x.shape()));
    const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
    const int oh = out_dim(h), ow = out_dim(w);
    check_shape(oh > 0 && ow > 0, "Conv2d: input smaller than kernel");
    Tensor<T> y({n, out_ch_, oh, ow});
    const int ckk = in_ch_ * ksize_ * ksize_;
    const int span = oh * ow;
    col_.assign(static_cast<size_t>(ckk) * span, T(0));
    for (int b = 0; b < n; ++b) {
      im2col(x.data() + x.offset(b, 0, 0, 0), h, w, oh, ow);
      kernels::gemm_nn(out_ch_, span, ckk, weight_.value.data(), col_.data(),
                       y.data() + y.offset(b, 0, 0, 0), T(0));
    }
    if (record) x_ = x;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    const int n = x_.dim(0), h = x_.dim(2), w = x_.dim(3);
    const int oh = dy.dim(2), ow = dy.dim(3);
    const int ckk = in_ch_ * ksize_ * ksize_;
    const int span = oh * ow;
    Tensor<T> dx(x_.shape());
    col_.assign(static_cast<size_t>(ckk) * span, T(0));
    dcol_.assign(static_cast<size_t>(ckk) * span, T(0));
    for (int b = 0; b < n; ++b) {
      im2col(x_.data() + x_.offset(b, 0, 0, 0), h, w, oh, ow);
      const T* dyb = dy.data() + dy.offset(b, 0, 0, 0);
      // dW += dy_b * col^T
      kernels::gemm_nt(out_ch_, ckk, span, dyb, col_.data(), weight_.grad.data(), T(1));
      // dcol = W^T * dy_b
      kernels::gemm_tn(ckk, span, out_ch_, weight_.value.data(), dyb, dcol_.data(), T(0));
      col2im(dx.data() + dx.offset(b, 0, 0, 0), h, w, oh, ow);
    }
    return dx;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& ps,
               std::vector<BufferRef<T>>&) {
    ps.push_back({prefix + ".weight", &weight_});
  }

  int64_t param_count() const { return weight_.value.numel(); }
  int64_t macs(int h, int w) const {
    return static_cast<int64_t>(out_dim(h)) * out_dim(w) * out_ch_ * in_ch_ * ksize_ * ksize_;
  }
  int out_dim(int d) const { return (d + 2 * pad_ - ksize_) / stride_ + 1; }
  int stride() const { return stride_; }
  int out_channels() const { return out_ch_; }

 private:
  void im2col(const T* x, int h, int w, int oh, int ow) {
    const int span = oh * ow;
    T* col = col_.data();
    for (int c = 0; c < in_ch_; ++c)
      for (int kr = 0; kr < ksize_; ++kr)
        for (int kc = 0; kc < ksize_; ++kc) {
          T* row = col + static_cast<int64_t>((c * ksize_ + kr) * ksize_ + kc) * span;
          for (int r = 0; r < oh; ++r) {
            const int ir = r * stride_ - pad_ + kr;
            if (ir < 0 || ir >= h) {
              for (int q = 0; q < ow; ++q) row[r * ow + q] = T(0);
              continue;
            }
            const T* src = x + (static_cast<int64_t>(c) * h + ir) * w;
            for (int q = 0; q < ow; ++q) {
              const int ic = q * stride_ - pad_ + kc;
              row[r * ow + q] = (ic >= 0 && ic < w) ? src[ic] : T(0);
            }
          }
        }
  }

  void col2im(T* dx, int h, int w, int oh, int ow) {
    const int span = oh * ow;
    const T* col = dcol_.data();
    for (int c = 0; c < in_ch_; ++c)
      for (int kr = 0; kr < ksize_; ++kr)
        for (int kc = 0; kc < ksize_; ++kc) {
          const T* row = col + static_cast<int64_t>((c * ksize_ + kr) * ksize_ + kc) * span;
          for (int r = 0; r < oh; ++r) {
            const int ir = r * stride_ - pad_ + kr;
            if (ir < 0 || ir >= h) continue;
            T* dst = dx + (static_cast<int64_t>(c) * h + ir) * w;
            for (int q = 0; q < ow; ++q) {
              const int ic = q * stride_ - pad_ + kc;
              if (ic >= 0 && ic < w) dst[ic] += row[r * ow + q];
            }
          }
        }
  }

  int in_ch_ = 0, out_ch_ = 0, ksize_ = 0, stride_ = 1, pad_ = 0;
  Parameter<T> weight_;  // [out_ch, in_ch*k*k]
  Tensor<T> x_;
  std::vector<T> col_, dcol_;
};

// ---------------------------------------------------------------------------

template <typename T>
class BatchNorm2d {
 public:
  BatchNorm2d() = default;
  explicit BatchNorm2d(int channels)
      : ch_(channels), gamma_({channels}), beta_({channels}), running_mean_({channels}),
        running_var_({channels}) {
    gamma_.value.fill(T(1));
    running_var_.fill(T(1));
  }

  // train_stats: normalize with batch statistics (and optionally refresh the
  // running buffers); otherwise use the running statistics.
  Tensor<T> forward(const Tensor<T>& x, bool train_stats, bool record,
                    bool update_running = true) {
    check_shape(x.ndim() == 4 && x.dim(1) == ch_, "BatchNorm2d: channel mismatch");
    const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
    const int64_t plane = static_cast<int64_t>(h) * w;
    const int64_t count = static_cast<int64_t>(n) * plane;
    Tensor<T> y(x.shape());
    mean_.assign(static_cast<size_t>(ch_), T(0));
    invstd_.assign(static_cast<size_t>(ch_), T(0));
    for (int c = 0; c < ch_; ++c) {
      T mean, var;
      if (train_stats) {
        T s = 0;
        for (int b = 0; b < n; ++b)
          s += kernels::reduce_sum(x.data() + x.offset(b, c, 0, 0), plane);
        mean = s / static_cast<T>(count);
        T ss = 0;
        for (int b = 0; b < n; ++b)
          ss += kernels::reduce_sumsq_centered(x.data() + x.offset(b, c, 0, 0), mean, plane);
        var = ss / static_cast<T>(count);  // biased, used for normalization
        if (update_running) {
          const T unbiased = count > 1 ? ss / static_cast<T>(count - 1) : var;
          running_mean_[c] = (T(1) - momentum_) * running_mean_[c] + momentum_ * mean;
          running_var_[c] = (T(1) - momentum_) * running_var_[c] + momentum_ * unbiased;
        }
      } else {
        mean = running_mean_[c];
        var = running_var_[c];
      }
      const T invstd = T(1) / std::sqrt(var + eps_);
      mean_[static_cast<size_t>(c)] = mean;
      invstd_[static_cast<size_t>(c)] = invstd;
      const T g = gamma_.value[c], bta = beta_.value[c];
      for (int b = 0; b < n; ++b) {
        const T* xp = x.data() + x.offset(b, c, 0, 0);
        T* yp = y.data() + y.offset(b, c, 0, 0);
        for (int64_t i = 0; i < plane; ++i) yp[i] = (xp[i] - mean) * invstd * g + bta;
      }
    }
    if (record) {
      x_ = x;
      train_stats_ = train_stats;
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    const int n = x_.dim(0), h = x_.dim(2), w = x_.dim(3);
    const int64_t plane = static_cast<int64_t>(h) * w;
    const int64_t count = static_cast<int64_t>(n) * plane;
    Tensor<T> dx(x_.shape());
    for (int c = 0; c < ch_; ++c) {
      const T mean = mean_[static_cast<size_t>(c)], invstd = invstd_[static_cast<size_t>(c)];
      const T g = gamma_.value[c];
      // dbeta = sum dy, dgamma = sum dy * xhat
      T dbeta = 0, dgamma = 0;
      for (int b = 0; b < n; ++b) {
        const T* dyp = dy.data() + dy.offset(b, c, 0, 0);
        const T* xp = x_.data() + x_.offset(b, c, 0, 0);
        dbeta += kernels::reduce_sum(dyp, plane);
        for (int64_t i = 0; i < plane; ++i) dgamma += dyp[i] * (xp[i] - mean) * invstd;
      }
      gamma_.grad[c] += dgamma;
      beta_.grad[c] += dbeta;
      if (train_stats_) {
        const T k1 = g * invstd / static_cast<T>(count);
        for (int b = 0; b < n; ++b) {
          const T* dyp = dy.data() + dy.offset(b, c, 0, 0);
          const T* xp = x_.data() + x_.offset(b, c, 0, 0);
          T* dxp = dx.data() + dx.offset(b, c, 0, 0);
          for (int64_t i = 0; i < plane; ++i) {
            const T xhat = (xp[i] - mean) * invstd;
            dxp[i] = k1 * (static_cast<T>(count) * dyp[i] - dbeta - xhat * dgamma);
          }
        }
      } else {
        const T k = g * invstd;
        for (int b = 0; b < n; ++b) {
          const T* dyp = dy.data() + dy.offset(b, c, 0, 0);
          T* dxp = dx.data() + dx.offset(b, c, 0, 0);
          for (int64_t i = 0; i < plane; ++i) dxp[i] = k * dyp[i];
        }
      }
    }
    return dx;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& ps,
               std::vector<BufferRef<T>>& bs) {
    ps.push_back({prefix + ".gamma", &gamma_});
    ps.push_back({prefix + ".beta", &beta_});
    bs.push_back({prefix + ".running_mean", &running_mean_});
    bs.push_back({prefix + ".running_var", &running_var_});
  }

  int64_t param_count() const { return 2 * ch_; }

 private:
  int ch_ = 0;
  T eps_ = static_cast<T>(1e-5);
  T momentum_ = static_cast<T>(0.1);
  Parameter<T> gamma_, beta_;
  Tensor<T> running_mean_, running_var_;
  Tensor<T> x_;
  std::vector<T> mean_, invstd_;
  bool train_stats_ = true;
};

// ---------------------------------------------------------------------------

template <typename T>
class ReLU {
 public:
  Tensor<T> forward(const Tensor<T>& x, bool record) {
    Tensor<T> y(x.shape());
    kernels::relu_fwd(x.data(), y.data(), x.numel());
    if (record) x_ = x;
    return y;
  }
  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> dx(x_.shape());
    kernels::relu_bwd(x_.data(), dy.data(), dx.data(), dy.numel());
    return dx;
  }

 private:
  Tensor<T> x_;
};

template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(int in_features, int out_features, Rng& rng)
      : in_(in_features), out_(out_features), weight_({out_features, in_features}),
        bias_({out_features}) {
    init_linear(weight_.value, bias_.value, in_features, rng);
  }

  Tensor<T> forward(const Tensor<T>& x, bool record) {
    check_shape(x.ndim() == 2 && x.dim(1) == in_, "Linear: feature width mismatch");
    const int n = x.dim(0);
    Tensor<T> y({n, out_});
    kernels::gemm_nt(n, out_, in_, x.data(), weight_.value.data(), y.data(), T(0));
    for (int b = 0; b < n; ++b)
      kernels::axpy(T(1), bias_.value.data(), y.data() + static_cast<int64_t>(b) * out_, out_);
    if (record) x_ = x;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    const int n = x_.dim(0);
    kernels::gemm_tn(out_, in_, n, dy.data(), x_.data(), weight_.grad.data(), T(1));
    for (int b = 0; b < n; ++b)
      kernels::axpy(T(1), dy.data() + static_cast<int64_t>(b) * out_, bias_.grad.data(), out_);
    Tensor<T> dx({n, in_});
    kernels::gemm_nn(n, in_, out_, dy.data(), weight_.value.data(), dx.data(), T(0));
    return dx;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& ps,
               std::vector<BufferRef<T>>&) {
    ps.push_back({prefix + ".weight", &weight_});
    ps.push_back({prefix + ".bias", &bias_});
  }

  int64_t param_count() const { return weight_.value.numel() + bias_.value.numel(); }
  int64_t macs() const { return static_cast<int64_t>(in_) * out_; }
  int out_features() const { return out_; }

 private:
  int in_ = 0, out_ = 0;
  Parameter<T> weight_, bias_;
  Tensor<T> x_;
};

template <typename T>
class GlobalAvgPool {
 public:
  Tensor<T> forward(const Tensor<T>& x, bool record) {
    check_shape(x.ndim() == 4, "GlobalAvgPool: expected [N,C,H,W]");
    const int n = x.dim(0), c = x.dim(1);
    const int64_t plane = static_cast<int64_t>(x.dim(2)) * x.dim(3);
    Tensor<T> y({n, c});
    for (int b = 0; b < n; ++b)
      for (int ci = 0; ci < c; ++ci)
        y(b, ci) = kernels::reduce_sum(x.data() + x.offset(b, ci, 0, 0), plane) /
                   static_cast<T>(plane);
    if (record) in_shape_ = x.shape();
    return y;
  }
  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> dx(in_shape_);
    const int n = in_shape_[0], c = in_shape_[1];
    const int64_t plane = static_cast<int64_t>(in_shape_[2]) * in_shape_[3];
    for (int b = 0; b < n; ++b)
      for (int ci = 0; ci < c; ++ci) {
        const T v = dy(b, ci) / static_cast<T>(plane);
        T* p = dx.data() + dx.offset(b, ci, 0, 0);
        for (int64_t i = 0; i < plane; ++i) p[i] = v;
      }
    return dx;
  }

 private:
  std::vector<int> in_shape_;
};

// ---------------------------------------------------------------------------
// Residual blocks. Two styles: conv-bn-relu with post-addition activation,
// and the pre-activation ordering used by wide residual networks.

template <typename T>
struct FwdFlags {
  bool train_stats = true;
  bool record = true;
  bool update_running = true;
};

template <typename T>
class BlockBase {
 public:
  virtual ~BlockBase() = default;
  virtual Tensor<T> forward(const Tensor<T>& x, const FwdFlags<T>& f) = 0;
  virtual Tensor<T> backward(const Tensor<T>& dy) = 0;
  virtual void collect(const std::string& prefix, std::vector<ParamRef<T>>& ps,
                       std::vector<BufferRef<T>>& bs) = 0;
  virtual int64_t param_count() const = 0;
  virtual int64_t macs(int h, int w) const = 0;
  virtual int stride() const = 0;
};

template <typename T>
class PostActBlock : public BlockBase<T> {
 public:
  PostActBlock(int in_ch, int out_ch, int stride, Rng& rng)
      : conv1_(in_ch, out_ch, 3, stride, 1, rng), bn1_(out_ch),
        conv2_(out_ch, out_ch, 3, 1, 1, rng), bn2_(out_ch),
        has_proj_(stride != 1 || in_ch != out_ch) {
    if (has_proj_) {
      proj_ = Conv2d<T>(in_ch, out_ch, 1, stride, 0, rng);
      proj_bn_ = BatchNorm2d<T>(out_ch);
    }
  }

  Tensor<T> forward(const Tensor<T>& x, const FwdFlags<T>& f) override {
    Tensor<T> h = bn1_.forward(conv1_.forward(x, f.record), f.train_stats, f.record,
                               f.update_running);
    h = relu1_.forward(h, f.record);
    h = bn2_.forward(conv2_.forward(h, f.record), f.train_stats, f.record, f.update_running);
    Tensor<T> s = has_proj_ ? proj_bn_.forward(proj_.forward(x, f.record), f.train_stats,
                                               f.record, f.update_running)
                            : x;
    Tensor<T> sum(h.shape());
    kernels::vadd(h.data(), s.data(), sum.data(), sum.numel());
    return relu_out_.forward(sum, f.record);
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    Tensor<T> dsum = relu_out_.backward(dy);
    Tensor<T> dx =
        conv1_.backward(bn1_.backward(relu1_.backward(conv2_.backward(bn2_.backward(dsum)))));
    if (has_proj_) {
      Tensor<T> dproj = proj_.backward(proj_bn_.backward(dsum));
      kernels::axpy(T(1), dproj.data(), dx.data(), dx.numel());
    } else {
      kernels::axpy(T(1), dsum.data(), dx.data(), dx.numel());
    }
    return dx;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& ps,
               std::vector<BufferRef<T>>& bs) override {
    conv1_.collect(prefix + ".conv1", ps, bs);
    bn1_.collect(prefix + ".bn1", ps, bs);
    conv2_.collect(prefix + ".conv2", ps, bs);
    bn2_.collect(prefix + ".bn2", ps, bs);
    if (has_proj_) {
      proj_.collect(prefix + ".proj", ps, bs);
      proj_bn_.collect(prefix + ".proj_bn", ps, bs);
    }
  }

  int64_t param_count() const override {
    int64_t n = conv1_.param_count() + bn1_.param_count() + conv2_.param_count() +
                bn2_.param_count();
    if (has_proj_) n += proj_.param_count() + proj_bn_.param_count();
    return n;
  }

  int64_t macs(int h, int w) const override {
    const int oh = conv1_.out_dim(h), ow = conv1_.out_dim(w);
    int64_t m = conv1_.macs(h, w) + conv2_.macs(oh, ow);
    if (has_proj_) m += proj_.macs(h, w);
    return m;
  }

  int stride() const override { return conv1_.stride(); }

 private:
  Conv2d<T> conv1_;
  BatchNorm2d<T> bn1_;
  ReLU<T> relu1_;
  Conv2d<T> conv2_;
  BatchNorm2d<T> bn2_;
  bool has_proj_ = false;
  Conv2d<T> proj_;
  BatchNorm2d<T> proj_bn_;
  ReLU<T> relu_out_;
};

// Pre-activation ordering: bn-relu-conv twice; the projection (when present)
// reads the post-activation tensor and carries no batch norm of its own.
template <typename T>
class PreActBlock : public BlockBase<T> {
 public:
  PreActBlock(int in_ch, int out_ch, int stride, Rng& rng)
      : bn1_(in_ch), conv1_(in_ch, out_ch, 3, stride, 1, rng), bn2_(out_ch),
        conv2_(out_ch, out_ch, 3, 1, 1, rng),
        has_proj_(stride != 1 || in_ch != out_ch) {
    if (has_proj_) proj_ = Conv2d<T>(in_ch, out_ch, 1, stride, 0, rng);
  }

  Tensor<T> forward(const Tensor<T>& x, const FwdFlags<T>& f) override {
    Tensor<T> a =
        relu1_.forward(bn1_.forward(x, f.train_stats, f.record, f.update_running), f.record);
    Tensor<T> h = conv1_.forward(a, f.record);
    h = relu2_.forward(bn2_.forward(h, f.train_stats, f.record, f.update_running), f.record);
    h = conv2_.forward(h, f.record);
    Tensor<T> s = has_proj_ ? proj_.forward(a, f.record) : x;
    Tensor<T> sum(h.shape());
    kernels::vadd(h.data(), s.data(), sum.data(), sum.numel());
    return sum;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    Tensor<T> da = conv1_.backward(bn2_.backward(relu2_.backward(conv2_.backward(dy))));
    if (has_proj_) {
      Tensor<T> dproj = proj_.backward(dy);
      kernels::axpy(T(1), dproj.data(), da.data(), da.numel());
    }
    Tensor<T> dx = bn1_.backward(relu1_.backward(da));
    if (!has_proj_) kernels::axpy(T(1), dy.data(), dx.data(), dx.numel());
    return dx;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& ps,
               std::vector<BufferRef<T>>& bs) override {
    bn1_.collect(prefix + ".bn1", ps, bs);
    conv1_.collect(prefix + ".conv1", ps, bs);
    bn2_.collect(prefix + ".bn2", ps, bs);
    conv2_.collect(prefix + ".conv2", ps, bs);
    if (has_proj_) proj_.collect(prefix + ".proj", ps, bs);
  }

  int64_t param_count() const override {
    int64_t n = bn1_.param_count() + conv1_.param_count() + bn2_.param_count() +
                conv2_.param_count();
    if (has_proj_) n += proj_.param_count();
    return n;
  }

  int64_t macs(int h, int w) const override {
    const int oh = conv1_.out_dim(h), ow = conv1_.out_dim(w);
    int64_t m = conv1_.macs(h, w) + conv2_.macs(oh, ow);
    if (has_proj_) m += proj_.macs(h, w);
    return m;
  }

  int stride() const override { return conv1_.stride(); }

 private:
  BatchNorm2d<T> bn1_;
  ReLU<T> relu1_;
  Conv2d<T> conv1_;
  BatchNorm2d<T> bn2_;
  ReLU<T> relu2_;
  Conv2d<T> conv2_;
  bool has_proj_ = false;
  Conv2d<T> proj_;
};

enum class BlockStyle { postact, preact };

template <typename T>
std::unique_ptr<BlockBase<T>> make_block(BlockStyle style, int in_ch, int out_ch, int stride,
                                         Rng& rng) {
  if (style == BlockStyle::postact)
    return std::make_unique<PostActBlock<T>>(in_ch, out_ch, stride, rng);
  return std::make_unique<PreActBlock<T>>(in_ch, out_ch, stride, rng);
}

/// A group of residual blocks; the first may change channels and stride.
template <typename T>
class Stage {
 public:
  Stage() = default;
  Stage(BlockStyle style, int in_ch, int out_ch, int blocks, int stride, Rng& rng) {
    for (int i = 0; i < blocks; ++i)
      blocks_.push_back(
          make_block<T>(style, i == 0 ? in_ch : out_ch, out_ch, i == 0 ? stride : 1, rng));
  }

  Tensor<T> forward(const Tensor<T>& x, const FwdFlags<T>& f) {
    Tensor<T> h = x;
    for (auto& b : blocks_) h = b->forward(h, f);
    return h;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> g = dy;
    for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) g = (*it)->backward(g);
    return g;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& ps,
               std::vector<BufferRef<T>>& bs) {
    for (size_t i = 0; i < blocks_.size(); ++i)
      blocks_[i]->collect(prefix + ".block" + std::to_string(i), ps, bs);
  }

  int64_t param_count() const {
    int64_t n = 0;
    for (const auto& b : blocks_) n += b->param_count();
    return n;
  }

  int64_t macs(int h, int w, int* oh = nullptr, int* ow = nullptr) const {
    int64_t m = 0;
    int ch = h, cw = w;
    for (const auto& b : blocks_) {
      m += b->macs(ch, cw);
      ch = (ch + b->stride() - 1) / b->stride();
      cw = (cw + b->stride() - 1) / b->stride();
    }
    if (oh) *oh = ch;
    if (ow) *ow = cw;
    return m;
  }

  int downsamples() const {
    int n = 0;
    for (const auto& b : blocks_) n += b->stride() > 1 ? 1 : 0;
    return n;
  }

 private:
  std::vector<std::unique_ptr<BlockBase<T>>> blocks_;
};

}  // namespace augkd::nn
