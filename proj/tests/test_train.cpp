#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "wenets/corpus/fixture.hpp"
#include "wenets/model/serialize.hpp"
#include "wenets/train/metrics.hpp"
#include "wenets/train/scheduler.hpp"
#include "wenets/train/trainer.hpp"

using namespace wenets;
using namespace wenets::train;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "wenets_train_tests";
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

model::NetworkConfig micro_config() {
  return model::tiny_variant_config(1.0 / 64.0, 384.0 / 24000.0);
}

struct FixtureData {
  corpus::Manifest manifest;
  std::vector<size_t> all_ids;
};

FixtureData make_fixture(size_t count, uint64_t seed, const std::string& tag) {
  corpus::FixtureOptions opt;
  opt.count = count;
  opt.seed = seed;
  const auto store = (temp_dir() / (tag + ".weseg")).string();
  const auto manifest_path = (temp_dir() / (tag + ".csv")).string();
  FixtureData out;
  out.manifest = corpus::synth_fixture(opt, store, manifest_path);
  for (size_t i = 0; i < count; ++i) out.all_ids.push_back(i);
  return out;
}

}  // namespace

TEST_CASE("pearson oracles") {
  const std::vector<double> a{1, 2, 3}, b{1, 2, 4};
  CHECK(pearson(a, b) == doctest::Approx(std::sqrt(27.0 / 28.0)).epsilon(1e-9));

  // independent two-pass formula
  auto direct = [](const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
      sx += x[i];
      sy += y[i];
      sxx += x[i] * x[i];
      syy += y[i] * y[i];
      sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) /
           std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
  };
  CHECK(pearson(a, b) == doctest::Approx(direct(a, b)).epsilon(1e-12));

  CHECK(pearson(a, a) == doctest::Approx(1.0));
  std::vector<double> neg{-1, -2, -3};
  CHECK(pearson(a, neg) == doctest::Approx(-1.0));

  std::vector<double> constant{2, 2, 2};
  CHECK_THROWS_AS(pearson(a, constant), DataError);
  std::vector<double> one{1};
  CHECK_THROWS_AS(pearson(one, one), DataError);
}

TEST_CASE("pearson is invariant under positive affine maps, flips under negation") {
  Rng rng(60);
  std::vector<double> a(40), b(40), a2(40);
  for (size_t i = 0; i < a.size(); ++i) {
    a[i] = rng.uniform(-2.0, 2.0);
    b[i] = a[i] * 0.5 + rng.uniform(-1.0, 1.0);
    a2[i] = 3.7 * a[i] + 11.0;
  }
  CHECK(pearson(a2, b) == doctest::Approx(pearson(a, b)).epsilon(1e-9));
  std::vector<double> an(a.size());
  for (size_t i = 0; i < a.size(); ++i) an[i] = -a[i];
  CHECK(pearson(an, b) == doctest::Approx(-pearson(a, b)).epsilon(1e-9));
}

TEST_CASE("rmse oracles") {
  const std::vector<double> a{1, 2}, same{1, 2};
  CHECK(rmse(a, same) == 0.0);
  const std::vector<double> b{2, 1};  // residuals 1, -1
  CHECK(rmse(a, b) == doctest::Approx(1.0).epsilon(1e-12));
  const std::vector<double> c{4, 6}, d{1, 2};  // residuals 3, 4
  CHECK(rmse(c, d) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-12));
}

TEST_CASE("plateau scheduler: strict improvement never decays") {
  PlateauScheduler sched(1e-4, 1e-4, 5, 0.1);
  double loss = 1.0;
  for (int epoch = 0; epoch < 20; ++epoch) {
    CHECK_FALSE(sched.step(loss));
    loss -= 0.01;  // improves by much more than the threshold
  }
  CHECK(sched.lr() == 1e-4);
  CHECK(sched.decays() == 0);
}

TEST_CASE("plateau scheduler: flat loss decays exactly after the 5th bad epoch") {
  PlateauScheduler sched(1e-4, 1e-4, 5, 0.1);
  CHECK_FALSE(sched.step(1.0));  // epoch 1 improves over +inf
  CHECK_FALSE(sched.step(1.0));  // bad 1
  CHECK_FALSE(sched.step(1.0));  // bad 2
  CHECK_FALSE(sched.step(1.0));  // bad 3
  CHECK_FALSE(sched.step(1.0));  // bad 4
  CHECK(sched.step(1.0));        // bad 5 -> decay at epoch 6
  CHECK(sched.lr() == doctest::Approx(1e-5).epsilon(1e-15));
}

TEST_CASE("plateau scheduler: improvement of exactly the threshold is non-improving") {
  PlateauScheduler sched(1e-4, 1e-4, 5, 0.1);
  sched.step(1.0);
  // best stays 1.0: a loss of exactly best - threshold never strictly beats it
  for (int i = 0; i < 4; ++i) {
    CHECK_FALSE(sched.step(1.0 - 1e-4));
    CHECK(sched.best() == 1.0);
  }
  CHECK(sched.step(1.0 - 1e-4));  // 5th non-improving epoch fires the decay
}

TEST_CASE("plateau scheduler: lr after k decays is initial * 10^-k exactly") {
  PlateauScheduler sched(1e-4, 1e-4, 5, 0.1);
  sched.step(1.0);
  for (int k = 1; k <= 3; ++k) {
    for (int i = 0; i < 5; ++i) sched.step(1.0);
    CHECK(sched.decays() == k);
    // recomputed from the decay count, so no cumulative drift
    CHECK(sched.lr() == 1e-4 * std::pow(0.1, k));
    CHECK(sched.lr() == doctest::Approx(1e-4 * std::pow(10.0, -k)).epsilon(1e-15));
  }
  // best is retained across decays
  CHECK(sched.best() == 1.0);
}

TEST_CASE("training improves the loss on a small fixture and is deterministic") {
  const auto fixture = make_fixture(16, 42, "train_smoke");
  corpus::SegmentSource source(fixture.manifest);

  TrainConfig cfg;
  cfg.lr = 2e-3;
  cfg.epochs = 60;
  cfg.batch_size = 8;
  cfg.seed = 1;
  cfg.val_on_train = true;
  cfg.log_wall_time = false;

  model::Nawenet<float> net(micro_config(), 1);
  net.metric = TargetMetric::Pesq;
  net.mapper = TargetMapper::affine_quality();
  const auto logs = wenets::train::train(net, source, fixture.all_ids, {}, cfg);
  REQUIRE(logs.size() == 60);
  CHECK(logs.back().val_rmse < logs.front().val_rmse);
  for (const auto& log : logs) {
    CHECK(log.train_rmse >= 0.0);
    CHECK(log.seconds == 0.0);
  }

  // same seed, fresh model: bitwise-identical logs and parameters
  model::Nawenet<float> net2(micro_config(), 1);
  net2.metric = TargetMetric::Pesq;
  net2.mapper = TargetMapper::affine_quality();
  const auto logs2 = wenets::train::train(net2, source, fixture.all_ids, {}, cfg);
  REQUIRE(logs2.size() == logs.size());
  for (size_t i = 0; i < logs.size(); ++i) {
    CHECK(logs[i].train_rmse == logs2[i].train_rmse);
    CHECK(logs[i].val_rmse == logs2[i].val_rmse);
    CHECK(logs[i].val_rho == logs2[i].val_rho);
    CHECK(logs[i].lr == logs2[i].lr);
  }
  auto pa = net.parameters(), pb = net2.parameters();
  for (size_t g = 0; g < pa.size(); ++g) CHECK(pa[g].value->v == pb[g].value->v);
}

TEST_CASE("lr column only moves by exact decade steps") {
  const auto fixture = make_fixture(8, 43, "lr_steps");
  corpus::SegmentSource source(fixture.manifest);
  TrainConfig cfg;
  cfg.lr = 1e-4;
  cfg.epochs = 14;
  cfg.batch_size = 8;
  cfg.plateau_patience = 3;
  cfg.seed = 2;
  cfg.val_on_train = true;
  cfg.log_wall_time = false;

  model::Nawenet<float> net(micro_config(), 2);
  net.metric = TargetMetric::Stoi;
  net.mapper = corpus::fit_mapper(TargetMetric::Stoi, fixture.manifest, fixture.all_ids);
  const auto logs = wenets::train::train(net, source, fixture.all_ids, {}, cfg);
  for (size_t i = 0; i < logs.size(); ++i) {
    bool is_decade = false;
    for (int k = 0; k < 6; ++k) {
      if (logs[i].lr == 1e-4 * std::pow(0.1, k)) is_decade = true;
    }
    CHECK(is_decade);
    if (i > 0) CHECK(logs[i].lr <= logs[i - 1].lr);
  }
}

TEST_CASE("validation pass leaves batch-norm running statistics untouched") {
  const auto fixture = make_fixture(6, 44, "val_pure");
  corpus::SegmentSource source(fixture.manifest);
  model::Nawenet<float> net(micro_config(), 3);
  net.metric = TargetMetric::Pesq;
  net.mapper = TargetMapper::affine_quality();

  // push the model off its initialization first
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 6;
  cfg.val_on_train = true;
  cfg.log_wall_time = false;
  wenets::train::train(net, source, fixture.all_ids, {}, cfg);

  std::vector<std::vector<float>> stats_before;
  for (const auto& b : net.buffers()) stats_before.push_back(b.value->v);
  predict_mapped(net, source, fixture.all_ids, 4, ExecMode::Serial);
  size_t i = 0;
  for (const auto& b : net.buffers()) {
    CHECK(b.value->v == stats_before[i]);
    ++i;
  }
}

TEST_CASE("train aborts with a numerical error on divergence") {
  const auto fixture = make_fixture(6, 45, "nan_abort");
  corpus::SegmentSource source(fixture.manifest);
  model::Nawenet<float> net(micro_config(), 4);
  net.metric = TargetMetric::Pesq;
  net.mapper = TargetMapper::affine_quality();
  TrainConfig cfg;
  cfg.lr = 1e25;  // guaranteed blow-up
  cfg.epochs = 20;
  cfg.batch_size = 6;
  cfg.val_on_train = true;
  cfg.log_wall_time = false;
  CHECK_THROWS_AS(wenets::train::train(net, source, fixture.all_ids, {}, cfg), NumericError);
}

TEST_CASE("train requires non-empty splits") {
  const auto fixture = make_fixture(4, 46, "empty_splits");
  corpus::SegmentSource source(fixture.manifest);
  model::Nawenet<float> net(micro_config(), 5);
  net.mapper = TargetMapper::affine_quality();
  TrainConfig cfg;
  cfg.log_wall_time = false;
  CHECK_THROWS_AS(wenets::train::train(net, source, {}, fixture.all_ids, cfg), DataError);
  CHECK_THROWS_AS(wenets::train::train(net, source, fixture.all_ids, {}, cfg), DataError);
}

TEST_CASE("evaluate pools pairs; combined metrics are not per-dataset averages") {
  // two datasets of different sizes and error scales
  corpus::FixtureOptions opt_a;
  opt_a.count = 10;
  opt_a.seed = 47;
  opt_a.dataset_name = "alpha";
  const auto store_a = (temp_dir() / "eval_a.weseg").string();
  const auto manifest_a = (temp_dir() / "eval_a.csv").string();
  auto manifest = corpus::synth_fixture(opt_a, store_a, manifest_a);

  corpus::FixtureOptions opt_b;
  opt_b.count = 4;
  opt_b.seed = 48;
  opt_b.dataset_name = "beta";
  const auto store_b = (temp_dir() / "eval_b.weseg").string();
  const auto manifest_b = (temp_dir() / "eval_b.csv").string();
  const auto mb = corpus::synth_fixture(opt_b, store_b, manifest_b);
  for (auto e : mb.entries) {
    e.segment_path = "eval_b.weseg";
    manifest.entries.push_back(e);
  }

  corpus::SegmentSource source(manifest);
  model::Nawenet<float> net(micro_config(), 6);
  net.metric = TargetMetric::Pesq;
  net.mapper = TargetMapper::affine_quality();

  std::vector<size_t> ids(manifest.size());
  for (size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  const auto report = evaluate(net, source, ids, 5, ExecMode::Serial);

  REQUIRE(report.per_dataset.size() == 2);
  REQUIRE(report.pairs.size() == ids.size());

  // pooled recomputation from the exported pairs
  std::vector<double> pred, tgt;
  for (const auto& [p, t] : report.pairs) {
    pred.push_back(p);
    tgt.push_back(t);
  }
  CHECK(report.combined.rmse_native == doctest::Approx(rmse(pred, tgt)).epsilon(1e-12));
  REQUIRE(report.combined.rho.has_value());
  CHECK(*report.combined.rho == doctest::Approx(pearson(pred, tgt)).epsilon(1e-12));

  // and it differs from the mean of per-dataset rmses here
  const double averaged =
      (report.per_dataset[0].rmse_native + report.per_dataset[1].rmse_native) / 2.0;
  CHECK(report.combined.rmse_native != doctest::Approx(averaged).epsilon(1e-6));
}

TEST_CASE("evaluate reports rmse for constant predictors, rho undefined") {
  const auto fixture = make_fixture(6, 49, "const_model");
  corpus::SegmentSource source(fixture.manifest);
  model::Nawenet<float> net(micro_config(), 7);
  net.metric = TargetMetric::Pesq;
  net.mapper = TargetMapper::affine_quality();
  // zero the output layer: predictions become exactly constant
  auto& l3 = net.dense_layers().back();
  l3.w.fill(0.0f);
  l3.b.fill(0.0f);

  const auto report = evaluate(net, source, fixture.all_ids, 3, ExecMode::Serial);
  CHECK_FALSE(report.combined.rho.has_value());
  CHECK(report.combined.rmse_native > 0.0);
}

TEST_CASE("native rmse equals mapped rmse times the affine scale") {
  // the affine quality map contracts by 1/1.75, so native errors are
  // mapped errors times 1.75
  const auto mapper = TargetMapper::affine_quality();
  Rng rng(50);
  std::vector<double> pred_m(20), tgt_m(20), pred_n(20), tgt_n(20);
  for (size_t i = 0; i < 20; ++i) {
    pred_m[i] = rng.uniform(-1.0, 1.0);
    tgt_m[i] = rng.uniform(-1.0, 1.0);
    pred_n[i] = mapper.unmap(pred_m[i]);
    tgt_n[i] = mapper.unmap(tgt_m[i]);
  }
  CHECK(rmse(pred_n, tgt_n) == doctest::Approx(rmse(pred_m, tgt_m) * 1.75).epsilon(1e-12));
}

TEST_CASE("epoch log CSV has the documented columns") {
  std::vector<EpochLog> logs(2);
  logs[0] = {1, 0.5, 0.6, 0.1, 1e-4, 0.0};
  logs[1] = {2, 0.4, 0.5, 0.2, 1e-4, 0.0};
  const auto path = (temp_dir() / "log.csv").string();
  write_epoch_log_csv(logs, path);
  std::ifstream is(path);
  std::string header;
  std::getline(is, header);
  CHECK(header == "epoch,train_rmse,val_rmse,val_rho,lr,seconds");
  std::string row;
  size_t rows = 0;
  while (std::getline(is, row)) {
    if (!row.empty()) ++rows;
  }
  CHECK(rows == 2);
}
