#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "wenets/model/config.hpp"
#include "wenets/model/network.hpp"
#include "wenets/model/serialize.hpp"

using namespace wenets;
using namespace wenets::model;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "wenets_model_tests";
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

NetworkConfig micro_config() { return tiny_variant_config(1.0 / 64.0, 384.0 / 24000.0); }

Tensor<float> random_input(Rng& rng, size_t n, size_t len) {
  Tensor<float> x({n, 1, len});
  for (auto& v : x.v) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return x;
}

}  // namespace

TEST_CASE("canonical trace matches the published l_out chain") {
  const auto cfg = NetworkConfig::canonical();
  const auto trace = cfg.trace();
  REQUIRE(trace.size() == 5);
  const size_t want_out[] = {6000, 3000, 750, 250, 125};
  const size_t want_in[] = {24000, 6000, 3000, 750, 250};
  const double want_rate[] = {8000, 2000, 1000, 250, 250.0 / 3.0};
  const double want_spacing[] = {0.125, 0.5, 1.0, 4.0, 12.0};
  for (size_t s = 0; s < 5; ++s) {
    CHECK(trace[s].l_in == want_in[s]);
    CHECK(trace[s].l_out == want_out[s]);
    CHECK(trace[s].rate_in_hz == doctest::Approx(want_rate[s]));
    CHECK(trace[s].spacing_ms == doctest::Approx(want_spacing[s]).epsilon(0.001));
  }
  CHECK(cfg.flatten_size() == 64000);
  CHECK(trace.back().channels_out == 512);
}

TEST_CASE("canonical parameter counts") {
  const auto pc = count_params(NetworkConfig::canonical());
  CHECK(pc.conv_total == 7034432);
  CHECK(pc.total == 40067137);
  // first dense layer weights + bias
  size_t l1 = 0;
  for (const auto& [name, count] : pc.groups) {
    if (name == "L1.w" || name == "L1.b") l1 += count;
  }
  CHECK(l1 == 32768512);
  CHECK(pc.dense_total == 40067137 - 7034432);
}

TEST_CASE("count_params agrees with an instantiated model") {
  const auto cfg = tiny_variant_config(1.0 / 16.0, 0.12);
  Nawenet<float> net(cfg, 0);
  CHECK(net.param_count() == count_params(cfg).total);
  CHECK(count_params(cfg).total < 100000);  // desk-scale variant stays small
}

TEST_CASE("tiny_variant_config validates scales") {
  // 24000/20 = 1200 -> 300 -> 150 -> 37.5: not pool-divisible
  CHECK_THROWS_AS(tiny_variant_config(1.0 / 24.0, 1.0 / 20.0), DataError);
  // width 1/10 leaves 192/10 non-integral
  CHECK_THROWS_AS(tiny_variant_config(1.0 / 10.0, 0.12), DataError);

  // full scale reproduces the canonical configuration
  const auto full = tiny_variant_config(1.0, 1.0);
  CHECK(format_config(full) == format_config(NetworkConfig::canonical()));

  const auto tiny = tiny_variant_config(1.0 / 16.0, 0.12);
  CHECK(tiny.input_length == 2880);
  const auto trace = tiny.trace();
  CHECK(trace[0].l_out == 720);
  CHECK(trace[1].l_out == 360);
  CHECK(trace[2].l_out == 90);
  CHECK(trace[3].l_out == 30);
  CHECK(trace[4].l_out == 15);
}

TEST_CASE("config rejects non-divisible pools") {
  auto cfg = NetworkConfig::canonical();
  cfg.sections[2].pool_k = 5;  // 3000/5=600, then 600/3=200, 200/2=100: fine...
  cfg.sections[3].pool_k = 7;  // ...so break S4 instead
  CHECK_THROWS_AS(cfg.validate(), DataError);
  CHECK_THROWS_AS((Nawenet<float>{cfg, 0}), DataError);
}

TEST_CASE("config string round-trips") {
  for (const auto& cfg : {NetworkConfig::canonical(), tiny_variant_config(1.0 / 16.0, 0.12),
                          micro_config()}) {
    const auto parsed = parse_config(format_config(cfg));
    CHECK(format_config(parsed) == format_config(cfg));
    CHECK(config_hash(parsed) == config_hash(cfg));
  }
  CHECK_THROWS_AS(parse_config("in=100;p=0.5"), DataError);
  CHECK_THROWS_AS(parse_config("garbage"), DataError);
}

TEST_CASE("build is deterministic per seed") {
  const auto cfg = micro_config();
  Nawenet<float> a(cfg, 123), b(cfg, 123), c(cfg, 124);
  auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
  REQUIRE(pa.size() == pb.size());
  bool identical = true, differs_somewhere = false;
  for (size_t g = 0; g < pa.size(); ++g) {
    identical = identical && (pa[g].value->v == pb[g].value->v);
    differs_somewhere = differs_somewhere || (pa[g].value->v != pc[g].value->v);
  }
  CHECK(identical);
  CHECK(differs_somewhere);
}

TEST_CASE("forward accepts exactly [N,1,input_length]") {
  const auto cfg = micro_config();
  Nawenet<float> net(cfg, 0);
  Rng rng(1);
  auto x = random_input(rng, 2, cfg.input_length);
  const auto pred = net.forward(x, Phase::Eval, ExecMode::Serial);
  CHECK(pred.size() == 2);

  Tensor<float> wrong({2, 1, cfg.input_length + 1});
  CHECK_THROWS_AS(net.forward(wrong, Phase::Eval, ExecMode::Serial), ShapeError);
  Tensor<float> single({1, 1, cfg.input_length});
  CHECK_THROWS_AS(net.forward(single, Phase::Train, ExecMode::Serial), ShapeError);
}

TEST_CASE("eval forward is bitwise repeatable and phase-sensitive at init") {
  const auto cfg = micro_config();
  Nawenet<float> net(cfg, 7);
  Rng rng(2);
  auto x = random_input(rng, 3, cfg.input_length);

  const auto p1 = net.forward(x, Phase::Eval, ExecMode::Serial);
  const auto p2 = net.forward(x, Phase::Eval, ExecMode::Serial);
  CHECK(p1 == p2);

  // an untrained network is generally not phase-invariant
  Tensor<float> neg = x;
  for (auto& v : neg.v) v = -v;
  const auto pn = net.forward(neg, Phase::Eval, ExecMode::Serial);
  bool any_different = false;
  for (size_t i = 0; i < p1.size(); ++i) {
    any_different = any_different || p1[i] != pn[i];
  }
  CHECK(any_different);
}

TEST_CASE("serial and parallel forward agree within 1e-6 relative") {
  const auto cfg = micro_config();
  Nawenet<float> net(cfg, 3);
  Rng rng(4);
  auto x = random_input(rng, 2, cfg.input_length);
  const auto ps = net.forward(x, Phase::Eval, ExecMode::Serial);
  const auto pp = net.forward(x, Phase::Eval, ExecMode::Parallel);
  for (size_t i = 0; i < ps.size(); ++i) {
    CHECK(std::abs(ps[i] - pp[i]) <=
          1e-6 * std::max({std::abs(ps[i]), std::abs(pp[i]), 1.0f}));
  }
}

TEST_CASE("zero upstream gradient gives zero parameter gradients") {
  const auto cfg = micro_config();
  Nawenet<double> net(cfg, 5);
  Rng rng(6), drop_rng(7);
  Tensor<double> x({2, 1, cfg.input_length});
  for (auto& v : x.v) v = rng.uniform(-1.0, 1.0);
  net.forward(x, Phase::Train, ExecMode::Serial, &drop_rng);
  net.backward({0.0, 0.0}, ExecMode::Serial);
  for (const auto& p : net.parameters()) {
    for (double g : p.grad->v) CHECK(g == 0.0);
  }
}

TEST_CASE("train-mode forward on identical segments (dropout off) matches per segment") {
  auto cfg = micro_config();
  cfg.dropout_p = 0.0;
  Nawenet<float> net(cfg, 11);
  Rng rng(12);
  Tensor<float> x({3, 1, cfg.input_length});
  for (size_t i = 0; i < cfg.input_length; ++i) {
    const float v = static_cast<float>(rng.uniform(-1.0, 1.0));
    x(0, 0, i) = v;
    x(1, 0, i) = v;
    x(2, 0, i) = v;
  }
  const auto pred = net.forward(x, Phase::Train, ExecMode::Serial, &rng);
  CHECK(pred[0] == pred[1]);
  CHECK(pred[1] == pred[2]);
}

TEST_CASE("model save/load round-trips forward outputs bitwise") {
  const auto cfg = micro_config();
  Nawenet<float> net(cfg, 21);
  net.metric = TargetMetric::Stoi;
  net.mapper = TargetMapper::zscore(0.7, 0.12);
  // non-trivial running stats so buffers are exercised too
  Rng rng(22), drop_rng(23);
  auto x = random_input(rng, 4, cfg.input_length);
  net.forward(x, Phase::Train, ExecMode::Serial, &drop_rng);

  const auto path = (temp_dir() / "model.wenet").string();
  save_model(net, path);
  Nawenet<float> loaded = load_model(path);
  CHECK(loaded.metric == TargetMetric::Stoi);
  CHECK(loaded.mapper.kind == TargetMapper::Kind::ZScore);
  CHECK(loaded.mapper.mean == 0.7);
  CHECK(loaded.mapper.stddev == 0.12);
  CHECK(loaded.seed() == 21);

  for (int i = 0; i < 10; ++i) {
    auto probe = random_input(rng, 2, cfg.input_length);
    const auto a = net.forward(probe, Phase::Eval, ExecMode::Serial);
    const auto b = loaded.forward(probe, Phase::Eval, ExecMode::Serial);
    CHECK(a == b);
  }
}

TEST_CASE("model loader rejects damaged files") {
  const auto cfg = micro_config();
  Nawenet<float> net(cfg, 31);
  const auto good = (temp_dir() / "good.wenet").string();
  save_model(net, good);

  std::ifstream in(good, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();

  const auto bad_magic = (temp_dir() / "badmagic.wenet").string();
  {
    std::string copy = bytes;
    copy[3] = 'X';
    std::ofstream os(bad_magic, std::ios::binary);
    os.write(copy.data(), static_cast<std::streamsize>(copy.size()));
  }
  CHECK_THROWS_WITH_AS(load_model(bad_magic), doctest::Contains("bad magic"), DataError);

  const auto truncated = (temp_dir() / "trunc.wenet").string();
  {
    std::ofstream os(truncated, std::ios::binary);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 257));
  }
  CHECK_THROWS_AS(load_model(truncated), DataError);

  const auto corrupted = (temp_dir() / "corrupt.wenet").string();
  {
    std::string copy = bytes;
    copy[copy.size() / 2] ^= 0x40;
    std::ofstream os(corrupted, std::ios::binary);
    os.write(copy.data(), static_cast<std::streamsize>(copy.size()));
  }
  CHECK_THROWS_WITH_AS(load_model(corrupted), doctest::Contains("checksum"), DataError);
}

TEST_CASE("canonical model builds and runs one eval forward") {
  Nawenet<float> net(NetworkConfig::canonical(), 0);
  CHECK(net.param_count() == 40067137);
  Rng rng(9);
  auto x = random_input(rng, 1, 24000);
  const auto pred = net.forward(x, Phase::Eval, ExecMode::Serial);
  REQUIRE(pred.size() == 1);
  CHECK(std::isfinite(pred[0]));
}
