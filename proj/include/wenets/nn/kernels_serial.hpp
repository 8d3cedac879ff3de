#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>

// Reference kernels: one lane, fixed summation order. These are the
// deterministic-mode implementations and the oracle the OpenMP kernels
// are tested against.

namespace wenets::nn::serial {

// y[n,o,i] = b[o] + sum_{c,k} w[o,c,k] * x[n,c,i+k-P], zero outside [0,L).
// Same-padding, stride 1, P = K/2.
template <typename T>
void conv1d_forward(const T* x, size_t N, size_t Cin, size_t L, const T* w,
                    const T* b, size_t Co, size_t K, T* y) {
  const size_t P = K / 2;
  for (size_t n = 0; n < N; ++n) {
    for (size_t o = 0; o < Co; ++o) {
      T* yo = y + (n * Co + o) * L;
      std::fill(yo, yo + L, b[o]);
      for (size_t c = 0; c < Cin; ++c) {
        const T* xc = x + (n * Cin + c) * L;
        const T* wk = w + (o * Cin + c) * K;
        for (size_t k = 0; k < K; ++k) {
          // valid output range for this tap: 0 <= i+k-P < L
          const ptrdiff_t shift = static_cast<ptrdiff_t>(k) - static_cast<ptrdiff_t>(P);
          const size_t i0 = shift < 0 ? static_cast<size_t>(-shift) : 0;
          const size_t i1 = shift > 0 ? L - static_cast<size_t>(shift) : L;
          const T wv = wk[k];
          const T* xs = xc + shift;
          for (size_t i = i0; i < i1; ++i) yo[i] += wv * xs[i];
        }
      }
    }
  }
}

// dx[n,c,i] = sum_{o,k} w[o,c,k] * dy[n,o,i+P-k]
template <typename T>
void conv1d_backward_data(const T* dy, size_t N, size_t Co, size_t L, const T* w,
                          size_t Cin, size_t K, T* dx) {
  const size_t P = K / 2;
  for (size_t n = 0; n < N; ++n) {
    for (size_t c = 0; c < Cin; ++c) {
      T* dxc = dx + (n * Cin + c) * L;
      std::fill(dxc, dxc + L, T(0));
      for (size_t o = 0; o < Co; ++o) {
        const T* dyo = dy + (n * Co + o) * L;
        const T* wk = w + (o * Cin + c) * K;
        for (size_t k = 0; k < K; ++k) {
          const ptrdiff_t shift = static_cast<ptrdiff_t>(P) - static_cast<ptrdiff_t>(k);
          const size_t i0 = shift < 0 ? static_cast<size_t>(-shift) : 0;
          const size_t i1 = shift > 0 ? L - static_cast<size_t>(shift) : L;
          const T wv = wk[k];
          const T* dys = dyo + shift;
          for (size_t i = i0; i < i1; ++i) dxc[i] += wv * dys[i];
        }
      }
    }
  }
}

// dw[o,c,k] = sum_{n,j} dy[n,o,j] * x[n,c,j+k-P];  db[o] = sum_{n,j} dy[n,o,j]
template <typename T>
void conv1d_backward_filter(const T* x, const T* dy, size_t N, size_t Cin,
                            size_t Co, size_t L, size_t K, T* dw, T* db) {
  const size_t P = K / 2;
  std::fill(dw, dw + Co * Cin * K, T(0));
  std::fill(db, db + Co, T(0));
  for (size_t o = 0; o < Co; ++o) {
    for (size_t n = 0; n < N; ++n) {
      const T* dyo = dy + (n * Co + o) * L;
      T acc = 0;
      for (size_t j = 0; j < L; ++j) acc += dyo[j];
      db[o] += acc;
      for (size_t c = 0; c < Cin; ++c) {
        const T* xc = x + (n * Cin + c) * L;
        T* dwk = dw + (o * Cin + c) * K;
        for (size_t k = 0; k < K; ++k) {
          const ptrdiff_t shift = static_cast<ptrdiff_t>(k) - static_cast<ptrdiff_t>(P);
          const size_t j0 = shift < 0 ? static_cast<size_t>(-shift) : 0;
          const size_t j1 = shift > 0 ? L - static_cast<size_t>(shift) : L;
          const T* xs = xc + shift;
          T s = 0;
          for (size_t j = j0; j < j1; ++j) s += dyo[j] * xs[j];
          dwk[k] += s;
        }
      }
    }
  }
}

// Per-channel batch statistics over the N and L axes, biased (1/m) variance.
template <typename T>
void batchnorm_stats(const T* x, size_t N, size_t C, size_t L, T* mean, T* var) {
  const T m = static_cast<T>(N * L);
  for (size_t c = 0; c < C; ++c) {
    T s = 0;
    for (size_t n = 0; n < N; ++n) {
      const T* xc = x + (n * C + c) * L;
      for (size_t l = 0; l < L; ++l) s += xc[l];
    }
    const T mu = s / m;
    T q = 0;
    for (size_t n = 0; n < N; ++n) {
      const T* xc = x + (n * C + c) * L;
      for (size_t l = 0; l < L; ++l) {
        const T d = xc[l] - mu;
        q += d * d;
      }
    }
    mean[c] = mu;
    var[c] = q / m;
  }
}

// y = gamma * (x - mean) / sqrt(var + eps) + beta; optionally keep xhat.
template <typename T>
void batchnorm_apply(const T* x, size_t N, size_t C, size_t L, const T* mean,
                     const T* var, const T* gamma, const T* beta, T eps, T* y,
                     T* xhat) {
  for (size_t n = 0; n < N; ++n) {
    for (size_t c = 0; c < C; ++c) {
      const T inv = T(1) / std::sqrt(var[c] + eps);
      const T g = gamma[c], mu = mean[c], bb = beta[c];
      const T* xc = x + (n * C + c) * L;
      T* yc = y + (n * C + c) * L;
      if (xhat) {
        T* hc = xhat + (n * C + c) * L;
        for (size_t l = 0; l < L; ++l) {
          hc[l] = (xc[l] - mu) * inv;
          yc[l] = g * hc[l] + bb;
        }
      } else {
        for (size_t l = 0; l < L; ++l) yc[l] = g * (xc[l] - mu) * inv + bb;
      }
    }
  }
}

// Train-mode backward through the batch statistics, m = N*L per channel:
// dx = inv/m * (m*dxhat - sum(dxhat) - xhat*sum(dxhat*xhat)), dxhat = dy*gamma.
template <typename T>
void batchnorm_backward(const T* xhat, const T* dy, size_t N, size_t C, size_t L,
                        const T* gamma, const T* var, T eps, T* dx, T* dgamma,
                        T* dbeta) {
  const T m = static_cast<T>(N * L);
  for (size_t c = 0; c < C; ++c) {
    T sum_dy = 0, sum_dy_xhat = 0;
    for (size_t n = 0; n < N; ++n) {
      const size_t base = (n * C + c) * L;
      for (size_t l = 0; l < L; ++l) {
        sum_dy += dy[base + l];
        sum_dy_xhat += dy[base + l] * xhat[base + l];
      }
    }
    dgamma[c] = sum_dy_xhat;
    dbeta[c] = sum_dy;
    const T inv = T(1) / std::sqrt(var[c] + eps);
    const T g = gamma[c];
    for (size_t n = 0; n < N; ++n) {
      const size_t base = (n * C + c) * L;
      for (size_t l = 0; l < L; ++l) {
        dx[base + l] = g * inv / m *
                       (m * dy[base + l] - sum_dy - xhat[base + l] * sum_dy_xhat);
      }
    }
  }
}

// out = x if x >= 0 else a_c * x, one slope per channel.
template <typename T>
void prelu_forward(const T* x, size_t N, size_t C, size_t L, const T* a, T* y) {
  for (size_t n = 0; n < N; ++n) {
    for (size_t c = 0; c < C; ++c) {
      const T ac = a[c];
      const T* xc = x + (n * C + c) * L;
      T* yc = y + (n * C + c) * L;
      for (size_t l = 0; l < L; ++l) yc[l] = xc[l] >= T(0) ? xc[l] : ac * xc[l];
    }
  }
}

template <typename T>
void prelu_backward(const T* x, const T* dy, size_t N, size_t C, size_t L,
                    const T* a, T* dx, T* da) {
  std::fill(da, da + C, T(0));
  for (size_t c = 0; c < C; ++c) {
    const T ac = a[c];
    T acc = 0;
    for (size_t n = 0; n < N; ++n) {
      const size_t base = (n * C + c) * L;
      for (size_t l = 0; l < L; ++l) {
        if (x[base + l] >= T(0)) {
          dx[base + l] = dy[base + l];
        } else {
          dx[base + l] = ac * dy[base + l];
          acc += dy[base + l] * x[base + l];
        }
      }
    }
    da[c] = acc;
  }
}

template <typename T>
void avgpool_forward(const T* x, size_t N, size_t C, size_t L, size_t k, T* y) {
  const size_t Lo = L / k;
  const T inv = T(1) / static_cast<T>(k);
  for (size_t nc = 0; nc < N * C; ++nc) {
    const T* xc = x + nc * L;
    T* yc = y + nc * Lo;
    for (size_t j = 0; j < Lo; ++j) {
      T s = 0;
      for (size_t t = 0; t < k; ++t) s += xc[j * k + t];
      yc[j] = s * inv;
    }
  }
}

template <typename T>
void avgpool_backward(const T* dy, size_t N, size_t C, size_t L, size_t k, T* dx) {
  const size_t Lo = L / k;
  const T inv = T(1) / static_cast<T>(k);
  for (size_t nc = 0; nc < N * C; ++nc) {
    const T* dyc = dy + nc * Lo;
    T* dxc = dx + nc * L;
    for (size_t j = 0; j < Lo; ++j) {
      const T g = dyc[j] * inv;
      for (size_t t = 0; t < k; ++t) dxc[j * k + t] = g;
    }
  }
}

// Ties resolve to the lowest index; argmax stores absolute input positions.
template <typename T>
void maxpool_forward(const T* x, size_t N, size_t C, size_t L, size_t k, T* y,
                     uint32_t* argmax) {
  const size_t Lo = L / k;
  for (size_t nc = 0; nc < N * C; ++nc) {
    const T* xc = x + nc * L;
    T* yc = y + nc * Lo;
    uint32_t* am = argmax + nc * Lo;
    for (size_t j = 0; j < Lo; ++j) {
      size_t best = j * k;
      T bv = xc[best];
      for (size_t t = 1; t < k; ++t) {
        if (xc[j * k + t] > bv) {
          bv = xc[j * k + t];
          best = j * k + t;
        }
      }
      yc[j] = bv;
      am[j] = static_cast<uint32_t>(best);
    }
  }
}

template <typename T>
void maxpool_backward(const T* dy, size_t N, size_t C, size_t L, size_t k,
                      const uint32_t* argmax, T* dx) {
  const size_t Lo = L / k;
  for (size_t nc = 0; nc < N * C; ++nc) {
    const T* dyc = dy + nc * Lo;
    const uint32_t* am = argmax + nc * Lo;
    T* dxc = dx + nc * L;
    std::fill(dxc, dxc + L, T(0));
    for (size_t j = 0; j < Lo; ++j) dxc[am[j]] += dyc[j];
  }
}

// y = x W^T + b, W is [Do, Di].
template <typename T>
void dense_forward(const T* x, size_t N, size_t Di, const T* w, const T* b,
                   size_t Do, T* y) {
  for (size_t n = 0; n < N; ++n) {
    const T* xn = x + n * Di;
    T* yn = y + n * Do;
    for (size_t o = 0; o < Do; ++o) {
      const T* wo = w + o * Di;
      T s = b[o];
      for (size_t i = 0; i < Di; ++i) s += wo[i] * xn[i];
      yn[o] = s;
    }
  }
}

template <typename T>
void dense_backward_data(const T* dy, size_t N, size_t Do, const T* w, size_t Di,
                         T* dx) {
  for (size_t n = 0; n < N; ++n) {
    T* dxn = dx + n * Di;
    std::fill(dxn, dxn + Di, T(0));
    const T* dyn = dy + n * Do;
    for (size_t o = 0; o < Do; ++o) {
      const T g = dyn[o];
      const T* wo = w + o * Di;
      for (size_t i = 0; i < Di; ++i) dxn[i] += g * wo[i];
    }
  }
}

template <typename T>
void dense_backward_filter(const T* x, const T* dy, size_t N, size_t Di, size_t Do,
                           T* dw, T* db) {
  std::fill(dw, dw + Do * Di, T(0));
  for (size_t o = 0; o < Do; ++o) {
    T s = 0;
    for (size_t n = 0; n < N; ++n) s += dy[n * Do + o];
    db[o] = s;
    T* dwo = dw + o * Di;
    for (size_t n = 0; n < N; ++n) {
      const T g = dy[n * Do + o];
      const T* xn = x + n * Di;
      for (size_t i = 0; i < Di; ++i) dwo[i] += g * xn[i];
    }
  }
}

// Inverted dropout: survivors scaled by 1/(1-p), mask is 0/1 per element.
template <typename T>
void dropout_apply(const T* x, const uint8_t* mask, size_t n, T keep_inv, T* y) {
  for (size_t i = 0; i < n; ++i) y[i] = mask[i] ? x[i] * keep_inv : T(0);
}

// Coupled L2: g' = g + l2*w, then the standard bias-corrected Adam update.
template <typename T>
void adam_step(T* w, const T* g, T* m, T* v, size_t n, T lr, T beta1, T beta2,
               T eps, T l2, T bias1, T bias2) {
  for (size_t i = 0; i < n; ++i) {
    const T gi = g[i] + l2 * w[i];
    m[i] = beta1 * m[i] + (T(1) - beta1) * gi;
    v[i] = beta2 * v[i] + (T(1) - beta2) * gi * gi;
    const T mhat = m[i] / bias1;
    const T vhat = v[i] / bias2;
    w[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace wenets::nn::serial
