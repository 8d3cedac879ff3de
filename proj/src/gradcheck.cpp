#include "wenets/gradcheck.hpp"

namespace wenets::gradcheck {

using Tensor = wenets::Tensor<double>;
using detail::random_tensor;
using detail::weighted_sum;

namespace {

void check_conv(Checker& ck, Report& report) {
  const size_t N = 2, Cin = 3, Co = 4, L = 9, K = 5;
  nn::Conv1d<double> layer(Cin, Co, K);
  layer.init(ck.rng());
  Tensor x = random_tensor(ck.rng(), {N, Cin, L});
  Tensor r = random_tensor(ck.rng(), {N, Co, L});

  auto loss = [&] { return weighted_sum(layer.forward(x, Phase::Eval, ExecMode::Serial), r); };
  layer.forward(x, Phase::Train, ExecMode::Serial);
  const Tensor dx = layer.backward(r, ExecMode::Serial);

  ck.check_group(report, "conv1d.w", layer.w.data(), layer.w.numel(), layer.dw.data(), loss);
  ck.check_group(report, "conv1d.b", layer.b.data(), layer.b.numel(), layer.db.data(), loss);
  ck.check_group(report, "conv1d.input", x.data(), x.numel(), dx.data(), loss);
}

void check_batchnorm(Checker& ck, Report& report) {
  const size_t N = 3, C = 4, L = 6;
  nn::BatchNorm1d<double> layer(C);
  for (auto& g : layer.gamma.v) g = ck.rng().uniform(0.5, 1.5);
  for (auto& b : layer.beta.v) b = ck.rng().uniform(-0.5, 0.5);
  Tensor x = random_tensor(ck.rng(), {N, C, L});
  Tensor r = random_tensor(ck.rng(), {N, C, L});

  // Train-mode loss: gradients flow through the batch statistics. The
  // running-stat update inside forward does not affect the output.
  auto loss = [&] { return weighted_sum(layer.forward(x, Phase::Train, ExecMode::Serial), r); };
  layer.forward(x, Phase::Train, ExecMode::Serial);
  const Tensor dx = layer.backward(r, ExecMode::Serial);

  ck.check_group(report, "batchnorm.gamma", layer.gamma.data(), layer.gamma.numel(),
                 layer.dgamma.data(), loss);
  ck.check_group(report, "batchnorm.beta", layer.beta.data(), layer.beta.numel(),
                 layer.dbeta.data(), loss);
  ck.check_group(report, "batchnorm.input", x.data(), x.numel(), dx.data(), loss);
}

void check_prelu(Checker& ck, Report& report) {
  const size_t N = 2, C = 5, L = 7;
  nn::PReLU<double> layer(C);
  for (auto& a : layer.a.v) a = ck.rng().uniform(0.1, 0.4);
  Tensor x = random_tensor(ck.rng(), {N, C, L});
  Tensor r = random_tensor(ck.rng(), {N, C, L});

  auto loss = [&] { return weighted_sum(layer.forward(x, Phase::Eval, ExecMode::Serial), r); };
  layer.forward(x, Phase::Train, ExecMode::Serial);
  const Tensor dx = layer.backward(r, ExecMode::Serial);

  ck.check_group(report, "prelu.a", layer.a.data(), layer.a.numel(), layer.da.data(), loss);
  ck.check_group(report, "prelu.input", x.data(), x.numel(), dx.data(), loss);
}

void check_avgpool(Checker& ck, Report& report) {
  const size_t N = 2, C = 3, L = 12, k = 4;
  nn::AvgPool1d<double> layer(k);
  Tensor x = random_tensor(ck.rng(), {N, C, L});
  Tensor r = random_tensor(ck.rng(), {N, C, L / k});

  auto loss = [&] { return weighted_sum(layer.forward(x, Phase::Eval, ExecMode::Serial), r); };
  layer.forward(x, Phase::Train, ExecMode::Serial);
  const Tensor dx = layer.backward(r, ExecMode::Serial);

  ck.check_group(report, "avgpool.input", x.data(), x.numel(), dx.data(), loss);
}

void check_maxpool(Checker& ck, Report& report) {
  const size_t N = 2, C = 3, L = 12, k = 3;
  nn::MaxPool1d<double> layer(k);
  // Random values are far enough apart that +/-h never flips an argmax.
  Tensor x = random_tensor(ck.rng(), {N, C, L});
  Tensor r = random_tensor(ck.rng(), {N, C, L / k});

  auto loss = [&] { return weighted_sum(layer.forward(x, Phase::Eval, ExecMode::Serial), r); };
  layer.forward(x, Phase::Train, ExecMode::Serial);
  const Tensor dx = layer.backward(r, ExecMode::Serial);

  ck.check_group(report, "maxpool.input", x.data(), x.numel(), dx.data(), loss);
}

void check_dense(Checker& ck, Report& report) {
  const size_t N = 3, Di = 6, Do = 4;
  nn::Dense<double> layer(Di, Do);
  layer.init(ck.rng());
  Tensor x = random_tensor(ck.rng(), {N, Di});
  Tensor r = random_tensor(ck.rng(), {N, Do});

  auto loss = [&] { return weighted_sum(layer.forward(x, Phase::Eval, ExecMode::Serial), r); };
  layer.forward(x, Phase::Train, ExecMode::Serial);
  const Tensor dx = layer.backward(r, ExecMode::Serial);

  ck.check_group(report, "dense.w", layer.w.data(), layer.w.numel(), layer.dw.data(), loss);
  ck.check_group(report, "dense.b", layer.b.data(), layer.b.numel(), layer.db.data(), loss);
  ck.check_group(report, "dense.input", x.data(), x.numel(), dx.data(), loss);
}

void check_dropout(Checker& ck, Report& report) {
  const size_t N = 4, F = 10;
  nn::Dropout<double> layer(0.5);
  Tensor x = random_tensor(ck.rng(), {N, F});
  Tensor r = random_tensor(ck.rng(), {N, F});

  // Draw the mask once, then differentiate with it frozen.
  layer.forward(x, Phase::Train, ExecMode::Serial, &ck.rng());
  const Tensor dx = layer.backward(r, ExecMode::Serial);
  auto loss = [&] {
    return weighted_sum(
        layer.forward(x, Phase::Train, ExecMode::Serial, nullptr, /*freeze_mask=*/true), r);
  };

  ck.check_group(report, "dropout.input", x.data(), x.numel(), dx.data(), loss);
}

}  // namespace

Report check_layers(uint64_t seed) {
  Checker ck(seed);
  Report report;
  check_conv(ck, report);
  check_batchnorm(ck, report);
  check_prelu(ck, report);
  check_avgpool(ck, report);
  check_maxpool(ck, report);
  check_dense(ck, report);
  check_dropout(ck, report);
  return report;
}

Report check_network(const model::NetworkConfig& cfg, uint64_t seed, bool inject_fault) {
  Checker ck(seed);
  model::Nawenet<double> net(cfg, seed);

  const size_t N = 2;
  Tensor x = random_tensor(ck.rng(), {N, 1, cfg.input_length});
  std::vector<double> r(N);
  for (auto& v : r) v = ck.rng().uniform(-1.0, 1.0);

  // Analytic pass: fresh dropout masks, then backward. The loss closure
  // reuses those masks so finite differences see the same map.
  Rng dropout_rng(mix_seed(seed, 0xDD));
  net.forward(x, Phase::Train, ExecMode::Serial, &dropout_rng);
  net.backward(r, ExecMode::Serial);

  auto loss = [&] {
    const auto pred =
        net.forward(x, Phase::Train, ExecMode::Serial, nullptr, /*freeze_dropout=*/true);
    double s = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) s += pred[i] * r[i];
    return s;
  };

  Report report;
  auto params = net.parameters();
  // Stash analytic grads: backward buffers are overwritten by the FD
  // forward passes? They are not (loss() never calls backward), but the
  // fault injection below edits them, so copy first.
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(*p.grad);
  if (inject_fault && !analytic.empty()) {
    for (auto& v : analytic[0].v) v = -v;
  }
  for (size_t i = 0; i < params.size(); ++i) {
    ck.check_group(report, params[i].name, params[i].value->data(),
                   params[i].value->numel(), analytic[i].data(), loss);
  }
  const Tensor input_grad = net.input_grad();
  ck.check_group(report, "input", x.data(), x.numel(), input_grad.data(), loss);
  return report;
}

}  // namespace wenets::gradcheck
