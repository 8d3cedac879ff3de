#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wenets/common.hpp"
#include "wenets/nn/kernels_omp.hpp"
#include "wenets/nn/kernels_serial.hpp"
#include "wenets/tensor.hpp"

namespace wenets::nn {

// Named view of one learnable group: value + gradient storage.
template <typename T>
struct ParamRef {
  std::string name;
  Tensor<T>* value = nullptr;
  Tensor<T>* grad = nullptr;
  bool apply_l2 = true;
};

// Fan-out Kaiming: i.i.d. N(0, 2/fan_out).
template <typename T>
void kaiming_init(Tensor<T>& w, size_t fan_out, Rng& rng) {
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_out));
  for (auto& x : w.v) x = static_cast<T>(rng.normal(0.0, stddev));
}

namespace detail {
// Views a rank-2 [N, F] tensor as [N, C=F, L=1] so the channel kernels
// cover both conv and dense activations.
template <typename T>
inline void ncl_dims(const Tensor<T>& x, size_t& n, size_t& c, size_t& l) {
  if (x.rank() == 3) {
    n = x.dim(0), c = x.dim(1), l = x.dim(2);
  } else if (x.rank() == 2) {
    n = x.dim(0), c = x.dim(1), l = 1;
  } else {
    throw ShapeError("expected rank-2 or rank-3 tensor, got " + x.shape_str());
  }
}
}  // namespace detail

// 1-D convolution, stride 1, zero padding K/2 (same-length output).
template <typename T>
class Conv1d {
 public:
  Conv1d(size_t in_channels, size_t out_channels, size_t kernel)
      : w({out_channels, in_channels, kernel}),
        b({out_channels}),
        dw(w.shape),
        db(b.shape),
        in_(in_channels),
        out_(out_channels),
        k_(kernel) {}

  void init(Rng& rng) {
    kaiming_init(w, out_ * k_, rng);  // conv fan-out = f_n * f_l
    b.fill(T(0));
  }

  const Tensor<T>& forward(const Tensor<T>& x, Phase phase, ExecMode exec) {
    if (x.rank() != 3 || x.dim(1) != in_) {
      throw ShapeError("conv1d: input " + x.shape_str() + " does not match " +
                       std::to_string(in_) + " channels");
    }
    const size_t N = x.dim(0), L = x.dim(2);
    y_.resize({N, out_, L});
    if (exec == ExecMode::Parallel) {
      par::conv1d_forward(x.data(), N, in_, L, w.data(), b.data(), out_, k_, y_.data());
    } else {
      serial::conv1d_forward(x.data(), N, in_, L, w.data(), b.data(), out_, k_, y_.data());
    }
    if (phase == Phase::Train) x_ = x;
    return y_;
  }

  const Tensor<T>& backward(const Tensor<T>& dy, ExecMode exec) {
    const size_t N = x_.dim(0), L = x_.dim(2);
    dx_.resize(x_.shape);
    if (exec == ExecMode::Parallel) {
      par::conv1d_backward_filter(x_.data(), dy.data(), N, in_, out_, L, k_, dw.data(), db.data());
      par::conv1d_backward_data(dy.data(), N, out_, L, w.data(), in_, k_, dx_.data());
    } else {
      serial::conv1d_backward_filter(x_.data(), dy.data(), N, in_, out_, L, k_, dw.data(), db.data());
      serial::conv1d_backward_data(dy.data(), N, out_, L, w.data(), in_, k_, dx_.data());
    }
    return dx_;
  }

  size_t in_channels() const { return in_; }
  size_t out_channels() const { return out_; }
  size_t kernel() const { return k_; }

  Tensor<T> w, b, dw, db;

 private:
  size_t in_, out_, k_;
  Tensor<T> x_, y_, dx_;
};

// Per-channel batch normalization over the N and L axes. Batch variance is
// biased (1/m); running_var gets the unbiased correction m/(m-1).
template <typename T>
class BatchNorm1d {
 public:
  explicit BatchNorm1d(size_t channels, T momentum = T(0.1), T eps = T(1e-5))
      : gamma({channels}),
        beta({channels}),
        running_mean({channels}),
        running_var({channels}),
        dgamma(gamma.shape),
        dbeta(beta.shape),
        c_(channels),
        momentum_(momentum),
        eps_(eps) {
    gamma.fill(T(1));
    beta.fill(T(0));
    running_mean.fill(T(0));
    running_var.fill(T(1));
  }

  const Tensor<T>& forward(const Tensor<T>& x, Phase phase, ExecMode exec) {
    size_t N, C, L;
    detail::ncl_dims(x, N, C, L);
    if (C != c_) throw ShapeError("batchnorm: channel mismatch");
    y_.resize(x.shape);
    if (phase == Phase::Train) {
      const size_t m = N * L;
      if (m < 2) {
        throw ShapeError("batchnorm: train mode needs at least 2 values per channel");
      }
      mean_.resize({C});
      var_.resize({C});
      xhat_.resize(x.shape);
      if (exec == ExecMode::Parallel) {
        par::batchnorm_stats(x.data(), N, C, L, mean_.data(), var_.data());
        par::batchnorm_apply(x.data(), N, C, L, mean_.data(), var_.data(), gamma.data(),
                             beta.data(), eps_, y_.data(), xhat_.data());
      } else {
        serial::batchnorm_stats(x.data(), N, C, L, mean_.data(), var_.data());
        serial::batchnorm_apply(x.data(), N, C, L, mean_.data(), var_.data(), gamma.data(),
                                beta.data(), eps_, y_.data(), xhat_.data());
      }
      const T unbias = static_cast<T>(m) / static_cast<T>(m - 1);
      for (size_t c = 0; c < C; ++c) {
        running_mean[c] = (T(1) - momentum_) * running_mean[c] + momentum_ * mean_[c];
        running_var[c] = (T(1) - momentum_) * running_var[c] + momentum_ * var_[c] * unbias;
      }
      dims_ = {N, C, L};
    } else {
      if (exec == ExecMode::Parallel) {
        par::batchnorm_apply(x.data(), N, C, L, running_mean.data(), running_var.data(),
                             gamma.data(), beta.data(), eps_, y_.data(),
                             static_cast<T*>(nullptr));
      } else {
        serial::batchnorm_apply(x.data(), N, C, L, running_mean.data(), running_var.data(),
                                gamma.data(), beta.data(), eps_, y_.data(),
                                static_cast<T*>(nullptr));
      }
    }
    return y_;
  }

  const Tensor<T>& backward(const Tensor<T>& dy, ExecMode exec) {
    const auto [N, C, L] = dims_;
    dx_.resize(xhat_.shape);
    if (exec == ExecMode::Parallel) {
      par::batchnorm_backward(xhat_.data(), dy.data(), N, C, L, gamma.data(), var_.data(),
                              eps_, dx_.data(), dgamma.data(), dbeta.data());
    } else {
      serial::batchnorm_backward(xhat_.data(), dy.data(), N, C, L, gamma.data(),
                                 var_.data(), eps_, dx_.data(), dgamma.data(), dbeta.data());
    }
    return dx_;
  }

  size_t channels() const { return c_; }

  Tensor<T> gamma, beta, running_mean, running_var, dgamma, dbeta;

 private:
  size_t c_;
  T momentum_, eps_;
  Tensor<T> mean_, var_, xhat_, y_, dx_;
  struct {
    size_t N, C, L;
  } dims_{};
};

template <typename T>
class PReLU {
 public:
  explicit PReLU(size_t channels, T initial_slope = T(0.25))
      : a({channels}), da(a.shape), c_(channels) {
    a.fill(initial_slope);
  }

  const Tensor<T>& forward(const Tensor<T>& x, Phase phase, ExecMode exec) {
    size_t N, C, L;
    detail::ncl_dims(x, N, C, L);
    if (C != c_) throw ShapeError("prelu: channel mismatch");
    y_.resize(x.shape);
    if (exec == ExecMode::Parallel) {
      par::prelu_forward(x.data(), N, C, L, a.data(), y_.data());
    } else {
      serial::prelu_forward(x.data(), N, C, L, a.data(), y_.data());
    }
    if (phase == Phase::Train) x_ = x;
    return y_;
  }

  const Tensor<T>& backward(const Tensor<T>& dy, ExecMode exec) {
    size_t N, C, L;
    detail::ncl_dims(x_, N, C, L);
    dx_.resize(x_.shape);
    if (exec == ExecMode::Parallel) {
      par::prelu_backward(x_.data(), dy.data(), N, C, L, a.data(), dx_.data(), da.data());
    } else {
      serial::prelu_backward(x_.data(), dy.data(), N, C, L, a.data(), dx_.data(), da.data());
    }
    return dx_;
  }

  size_t channels() const { return c_; }

  Tensor<T> a, da;

 private:
  size_t c_;
  Tensor<T> x_, y_, dx_;
};

template <typename T>
class AvgPool1d {
 public:
  explicit AvgPool1d(size_t k) : k_(k) {}

  const Tensor<T>& forward(const Tensor<T>& x, Phase, ExecMode exec) {
    const size_t N = x.dim(0), C = x.dim(1), L = x.dim(2);
    if (L % k_ != 0) {
      throw ShapeError("avgpool: length " + std::to_string(L) +
                       " not divisible by k=" + std::to_string(k_));
    }
    in_shape_ = x.shape;
    y_.resize({N, C, L / k_});
    if (exec == ExecMode::Parallel) {
      par::avgpool_forward(x.data(), N, C, L, k_, y_.data());
    } else {
      serial::avgpool_forward(x.data(), N, C, L, k_, y_.data());
    }
    return y_;
  }

  const Tensor<T>& backward(const Tensor<T>& dy, ExecMode exec) {
    dx_.resize(in_shape_);
    const size_t N = in_shape_[0], C = in_shape_[1], L = in_shape_[2];
    if (exec == ExecMode::Parallel) {
      par::avgpool_backward(dy.data(), N, C, L, k_, dx_.data());
    } else {
      serial::avgpool_backward(dy.data(), N, C, L, k_, dx_.data());
    }
    return dx_;
  }

  size_t k() const { return k_; }

 private:
  size_t k_;
  std::vector<size_t> in_shape_;
  Tensor<T> y_, dx_;
};

template <typename T>
class MaxPool1d {
 public:
  explicit MaxPool1d(size_t k) : k_(k) {}

  const Tensor<T>& forward(const Tensor<T>& x, Phase, ExecMode exec) {
    const size_t N = x.dim(0), C = x.dim(1), L = x.dim(2);
    if (L % k_ != 0) {
      throw ShapeError("maxpool: length " + std::to_string(L) +
                       " not divisible by k=" + std::to_string(k_));
    }
    in_shape_ = x.shape;
    y_.resize({N, C, L / k_});
    argmax_.resize(y_.numel());
    if (exec == ExecMode::Parallel) {
      par::maxpool_forward(x.data(), N, C, L, k_, y_.data(), argmax_.data());
    } else {
      serial::maxpool_forward(x.data(), N, C, L, k_, y_.data(), argmax_.data());
    }
    return y_;
  }

  const Tensor<T>& backward(const Tensor<T>& dy, ExecMode exec) {
    dx_.resize(in_shape_);
    const size_t N = in_shape_[0], C = in_shape_[1], L = in_shape_[2];
    if (exec == ExecMode::Parallel) {
      par::maxpool_backward(dy.data(), N, C, L, k_, argmax_.data(), dx_.data());
    } else {
      serial::maxpool_backward(dy.data(), N, C, L, k_, argmax_.data(), dx_.data());
    }
    return dx_;
  }

  size_t k() const { return k_; }
  const std::vector<uint32_t>& argmax() const { return argmax_; }

 private:
  size_t k_;
  std::vector<size_t> in_shape_;
  std::vector<uint32_t> argmax_;
  Tensor<T> y_, dx_;
};

// Fully connected: y = x W^T + b with W stored [d_o, d_i].
template <typename T>
class Dense {
 public:
  Dense(size_t in, size_t out)
      : w({out, in}), b({out}), dw(w.shape), db(b.shape), in_(in), out_(out) {}

  void init(Rng& rng) {
    kaiming_init(w, out_, rng);  // dense fan-out = d_o
    b.fill(T(0));
  }

  const Tensor<T>& forward(const Tensor<T>& x, Phase phase, ExecMode exec) {
    if (x.rank() != 2 || x.dim(1) != in_) {
      throw ShapeError("dense: input " + x.shape_str() + " does not match d_i=" +
                       std::to_string(in_));
    }
    const size_t N = x.dim(0);
    y_.resize({N, out_});
    if (exec == ExecMode::Parallel) {
      par::dense_forward(x.data(), N, in_, w.data(), b.data(), out_, y_.data());
    } else {
      serial::dense_forward(x.data(), N, in_, w.data(), b.data(), out_, y_.data());
    }
    if (phase == Phase::Train) x_ = x;
    return y_;
  }

  const Tensor<T>& backward(const Tensor<T>& dy, ExecMode exec) {
    const size_t N = x_.dim(0);
    dx_.resize(x_.shape);
    if (exec == ExecMode::Parallel) {
      par::dense_backward_filter(x_.data(), dy.data(), N, in_, out_, dw.data(), db.data());
      par::dense_backward_data(dy.data(), N, out_, w.data(), in_, dx_.data());
    } else {
      serial::dense_backward_filter(x_.data(), dy.data(), N, in_, out_, dw.data(), db.data());
      serial::dense_backward_data(dy.data(), N, out_, w.data(), in_, dx_.data());
    }
    return dx_;
  }

  size_t in_features() const { return in_; }
  size_t out_features() const { return out_; }

  Tensor<T> w, b, dw, db;

 private:
  size_t in_, out_;
  Tensor<T> x_, y_, dx_;
};

// Inverted dropout: train scales survivors by 1/(1-p) so eval is identity.
template <typename T>
class Dropout {
 public:
  explicit Dropout(double p) : p_(p) {
    if (p < 0.0 || p >= 1.0) throw DataError("dropout: p must be in [0, 1)");
  }

  // Train mode draws a fresh mask from rng; freeze_mask reuses the cached
  // one (finite-difference checks need the same mask on both evaluations).
  const Tensor<T>& forward(const Tensor<T>& x, Phase phase, ExecMode exec,
                           Rng* rng = nullptr, bool freeze_mask = false) {
    if (phase == Phase::Eval) {
      y_ = x;  // bitwise identity
      return y_;
    }
    const size_t n = x.numel();
    y_.resize(x.shape);
    if (p_ == 0.0) {
      y_ = x;
      mask_.assign(n, 1);
      return y_;
    }
    if (!freeze_mask) {
      if (rng == nullptr) throw DataError("dropout: train mode needs an rng");
      mask_.resize(n);
      for (size_t i = 0; i < n; ++i) mask_[i] = rng->uniform() >= p_ ? 1 : 0;
    }
    const T keep_inv = static_cast<T>(1.0 / (1.0 - p_));
    if (exec == ExecMode::Parallel) {
      par::dropout_apply(x.data(), mask_.data(), n, keep_inv, y_.data());
    } else {
      serial::dropout_apply(x.data(), mask_.data(), n, keep_inv, y_.data());
    }
    return y_;
  }

  const Tensor<T>& backward(const Tensor<T>& dy, ExecMode exec) {
    dx_.resize(dy.shape);
    if (p_ == 0.0) {
      dx_ = dy;
      return dx_;
    }
    const T keep_inv = static_cast<T>(1.0 / (1.0 - p_));
    if (exec == ExecMode::Parallel) {
      par::dropout_apply(dy.data(), mask_.data(), dy.numel(), keep_inv, dx_.data());
    } else {
      serial::dropout_apply(dy.data(), mask_.data(), dy.numel(), keep_inv, dx_.data());
    }
    return dx_;
  }

  double p() const { return p_; }
  const std::vector<uint8_t>& mask() const { return mask_; }

 private:
  double p_;
  std::vector<uint8_t> mask_;
  Tensor<T> y_, dx_;
};

}  // namespace wenets::nn
