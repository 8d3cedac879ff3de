#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "wenets/common.hpp"
#include "wenets/model/config.hpp"
#include "wenets/nn/layers.hpp"
#include "wenets/targets.hpp"
#include "wenets/tensor.hpp"

namespace wenets::model {

// The assembled network: S1..S5 (convs, batch norm, PReLU, pool per
// section), flatten, then L1 -> PReLU -> dropout -> L2 -> PReLU ->
// dropout -> L3. The head emits a raw scalar per segment; report-time
// clamping is the caller's business.
template <typename T>
class Nawenet {
 public:
  struct Section {
    std::vector<nn::Conv1d<T>> convs;
    std::unique_ptr<nn::BatchNorm1d<T>> bn;
    std::unique_ptr<nn::PReLU<T>> act;
    std::unique_ptr<nn::AvgPool1d<T>> avg;
    std::unique_ptr<nn::MaxPool1d<T>> max;
  };

  Nawenet(NetworkConfig cfg, uint64_t seed) : cfg_(std::move(cfg)), seed_(seed) {
    cfg_.validate();
    Rng rng(mix_seed(seed, /*stream=*/0x1217));
    size_t chan = 1;
    for (const auto& sec_cfg : cfg_.sections) {
      Section sec;
      for (const auto& conv : sec_cfg.convs) {
        sec.convs.emplace_back(chan, conv.filters, conv.length);
        sec.convs.back().init(rng);
        chan = conv.filters;
      }
      sec.bn = std::make_unique<nn::BatchNorm1d<T>>(chan);
      sec.act = std::make_unique<nn::PReLU<T>>(chan);
      if (sec_cfg.pool == PoolKind::Average) {
        sec.avg = std::make_unique<nn::AvgPool1d<T>>(sec_cfg.pool_k);
      } else {
        sec.max = std::make_unique<nn::MaxPool1d<T>>(sec_cfg.pool_k);
      }
      sections_.push_back(std::move(sec));
    }
    size_t d_in = cfg_.flatten_size();
    for (size_t li = 0; li < cfg_.dense_out.size(); ++li) {
      dense_.emplace_back(d_in, cfg_.dense_out[li]);
      dense_.back().init(rng);
      if (li + 1 < cfg_.dense_out.size()) {
        dense_act_.emplace_back(cfg_.dense_out[li]);
        dropout_.emplace_back(cfg_.dropout_p);
      }
      d_in = cfg_.dense_out[li];
    }
  }

  const NetworkConfig& config() const { return cfg_; }
  uint64_t seed() const { return seed_; }

  // One scalar per batch element. Train mode needs N >= 2 (batch norm)
  // and an rng for the dropout masks. freeze_dropout reuses the masks
  // from the previous train forward (gradient checking).
  std::vector<T> forward(const Tensor<T>& x, Phase phase, ExecMode exec,
                         Rng* dropout_rng = nullptr, bool freeze_dropout = false) {
    if (x.rank() != 3 || x.dim(1) != 1 || x.dim(2) != cfg_.input_length) {
      throw ShapeError("nawenet: input " + x.shape_str() + " != [N,1," +
                       std::to_string(cfg_.input_length) + "]");
    }
    if (phase == Phase::Train && x.dim(0) < 2) {
      throw ShapeError("nawenet: train mode needs a batch of at least 2");
    }
    const Tensor<T>* cur = &x;
    for (auto& sec : sections_) {
      for (auto& conv : sec.convs) cur = &conv.forward(*cur, phase, exec);
      cur = &sec.bn->forward(*cur, phase, exec);
      cur = &sec.act->forward(*cur, phase, exec);
      cur = sec.avg ? &sec.avg->forward(*cur, phase, exec)
                    : &sec.max->forward(*cur, phase, exec);
    }
    // Flatten [N, C, L] -> [N, C*L]; same storage order, so just copy the
    // buffer under the 2-D shape.
    flat_.resize({cur->dim(0), cur->dim(1) * cur->dim(2)});
    flat_.v = cur->v;
    cur = &flat_;
    for (size_t li = 0; li < dense_.size(); ++li) {
      cur = &dense_[li].forward(*cur, phase, exec);
      if (li < dense_act_.size()) {
        cur = &dense_act_[li].forward(*cur, phase, exec);
        cur = &dropout_[li].forward(*cur, phase, exec, dropout_rng, freeze_dropout);
      }
    }
    last_batch_ = x.dim(0);
    std::vector<T> out(last_batch_);
    for (size_t n = 0; n < last_batch_; ++n) out[n] = (*cur)(n, size_t{0});
    return out;
  }

  // Gradients for every parameter, from the caches of the last train-mode
  // forward. d_predictions is dLoss/d(output scalar) per batch element.
  void backward(const std::vector<T>& d_predictions, ExecMode exec) {
    if (d_predictions.size() != last_batch_) {
      throw ShapeError("nawenet: upstream gradient size mismatch");
    }
    Tensor<T> g({last_batch_, size_t{1}});
    for (size_t n = 0; n < last_batch_; ++n) g(n, size_t{0}) = d_predictions[n];
    const Tensor<T>* cur = &g;
    for (size_t li = dense_.size(); li-- > 0;) {
      if (li < dense_act_.size()) {
        cur = &dropout_[li].backward(*cur, exec);
        cur = &dense_act_[li].backward(*cur, exec);
      }
      cur = &dense_[li].backward(*cur, exec);
    }
    // Unflatten back to the last section's output shape.
    const auto tr = cfg_.trace();
    const size_t c = tr.back().channels_out, l = tr.back().l_out;
    unflat_.resize({last_batch_, c, l});
    unflat_.v = cur->v;
    cur = &unflat_;
    for (size_t si = sections_.size(); si-- > 0;) {
      auto& sec = sections_[si];
      cur = sec.avg ? &sec.avg->backward(*cur, exec) : &sec.max->backward(*cur, exec);
      cur = &sec.act->backward(*cur, exec);
      cur = &sec.bn->backward(*cur, exec);
      for (size_t ci = sec.convs.size(); ci-- > 0;) {
        cur = &sec.convs[ci].backward(*cur, exec);
      }
    }
    input_grad_ = *cur;
  }

  // Fixed topological order; also the serialization order of the groups.
  std::vector<nn::ParamRef<T>> parameters() {
    std::vector<nn::ParamRef<T>> out;
    for (size_t si = 0; si < sections_.size(); ++si) {
      auto& sec = sections_[si];
      const std::string sn = "S" + std::to_string(si + 1);
      for (size_t ci = 0; ci < sec.convs.size(); ++ci) {
        const std::string cn = sn + ".conv" + std::to_string(ci + 1);
        out.push_back({cn + ".w", &sec.convs[ci].w, &sec.convs[ci].dw});
        out.push_back({cn + ".b", &sec.convs[ci].b, &sec.convs[ci].db});
      }
      out.push_back({sn + ".bn.gamma", &sec.bn->gamma, &sec.bn->dgamma});
      out.push_back({sn + ".bn.beta", &sec.bn->beta, &sec.bn->dbeta});
      out.push_back({sn + ".prelu.a", &sec.act->a, &sec.act->da});
    }
    for (size_t li = 0; li < dense_.size(); ++li) {
      const std::string ln = "L" + std::to_string(li + 1);
      out.push_back({ln + ".w", &dense_[li].w, &dense_[li].dw});
      out.push_back({ln + ".b", &dense_[li].b, &dense_[li].db});
      if (li < dense_act_.size()) {
        out.push_back({ln + ".prelu.a", &dense_act_[li].a, &dense_act_[li].da});
      }
    }
    return out;
  }

  // Batch-norm running statistics, serialized with the model but never
  // touched by the optimizer.
  std::vector<nn::ParamRef<T>> buffers() {
    std::vector<nn::ParamRef<T>> out;
    for (size_t si = 0; si < sections_.size(); ++si) {
      const std::string sn = "S" + std::to_string(si + 1);
      out.push_back({sn + ".bn.running_mean", &sections_[si].bn->running_mean, nullptr});
      out.push_back({sn + ".bn.running_var", &sections_[si].bn->running_var, nullptr});
    }
    return out;
  }

  size_t param_count() {
    size_t n = 0;
    for (const auto& p : parameters()) n += p.value->numel();
    return n;
  }

  const Tensor<T>& input_grad() const { return input_grad_; }
  std::vector<Section>& sections() { return sections_; }
  std::vector<nn::Dense<T>>& dense_layers() { return dense_; }

  TargetMetric metric = TargetMetric::Pesq;
  TargetMapper mapper;

 private:
  NetworkConfig cfg_;
  uint64_t seed_;
  std::vector<Section> sections_;
  std::vector<nn::Dense<T>> dense_;
  std::vector<nn::PReLU<T>> dense_act_;
  std::vector<nn::Dropout<T>> dropout_;
  Tensor<T> flat_, unflat_, input_grad_;
  size_t last_batch_ = 0;
};

}  // namespace wenets::model
