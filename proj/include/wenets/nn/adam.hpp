#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wenets/common.hpp"
#include "wenets/nn/kernels_omp.hpp"
#include "wenets/nn/kernels_serial.hpp"
#include "wenets/nn/layers.hpp"

namespace wenets::nn {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double l2 = 0.0;  // coupled: g' = g + l2*w
};

// One first/second-moment buffer pair per parameter group, step counter
// shared by all groups.
template <typename T>
class Adam {
 public:
  Adam(std::span<const ParamRef<T>> params, AdamConfig cfg) : cfg_(cfg) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const auto& p : params) {
      m_.emplace_back(p.value->shape);
      v_.emplace_back(p.value->shape);
      m_.back().fill(T(0));
      v_.back().fill(T(0));
    }
  }

  void step(std::span<const ParamRef<T>> params, ExecMode exec, bool check_finite = false) {
    ++t_;
    const T bias1 = static_cast<T>(1.0 - std::pow(cfg_.beta1, static_cast<double>(t_)));
    const T bias2 = static_cast<T>(1.0 - std::pow(cfg_.beta2, static_cast<double>(t_)));
    for (size_t i = 0; i < params.size(); ++i) {
      const auto& p = params[i];
      if (check_finite && !p.grad->all_finite()) {
        throw NumericError("adam: non-finite gradient in group " + p.name);
      }
      const T l2 = p.apply_l2 ? static_cast<T>(cfg_.l2) : T(0);
      if (exec == ExecMode::Parallel) {
        par::adam_step(p.value->data(), p.grad->data(), m_[i].data(), v_[i].data(),
                       p.value->numel(), static_cast<T>(cfg_.lr),
                       static_cast<T>(cfg_.beta1), static_cast<T>(cfg_.beta2),
                       static_cast<T>(cfg_.eps), l2, bias1, bias2);
      } else {
        serial::adam_step(p.value->data(), p.grad->data(), m_[i].data(), v_[i].data(),
                          p.value->numel(), static_cast<T>(cfg_.lr),
                          static_cast<T>(cfg_.beta1), static_cast<T>(cfg_.beta2),
                          static_cast<T>(cfg_.eps), l2, bias1, bias2);
      }
    }
  }

  int64_t steps() const { return t_; }
  double lr() const { return cfg_.lr; }
  void set_lr(double lr) { cfg_.lr = lr; }
  const Tensor<T>& first_moment(size_t i) const { return m_[i]; }
  const Tensor<T>& second_moment(size_t i) const { return v_[i]; }

 private:
  AdamConfig cfg_;
  int64_t t_ = 0;
  std::vector<Tensor<T>> m_, v_;
};

}  // namespace wenets::nn
