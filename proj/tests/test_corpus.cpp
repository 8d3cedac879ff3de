#include <algorithm>
#include <filesystem>
#include <map>
#include <set>

#include "doctest.h"
#include "wenets/corpus/dataset.hpp"
#include "wenets/corpus/fixture.hpp"
#include "wenets/corpus/manifest.hpp"
#include "wenets/dsp/activity.hpp"

using namespace wenets;
using namespace wenets::corpus;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "wenets_corpus_tests";
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Manifest fake_manifest(const std::vector<std::pair<std::string, size_t>>& datasets) {
  Manifest m;
  for (const auto& [name, count] : datasets) {
    for (size_t i = 0; i < count; ++i) {
      ManifestEntry e;
      e.segment_path = "store.weseg";
      e.record_index = static_cast<uint32_t>(m.entries.size());
      e.source_dataset = name;
      e.pesq = 1.0 + 3.5 * static_cast<double>(i % 8) / 7.0;
      e.polqa = e.pesq;
      e.stoi = 0.4 + 0.5 * static_cast<double>(i % 8) / 7.0;
      m.entries.push_back(std::move(e));
    }
  }
  return m;
}

std::map<SplitLabel, size_t> label_counts(const SplitAssignment& s,
                                          const Manifest& m,
                                          const std::string& dataset = "") {
  std::map<SplitLabel, size_t> counts;
  for (size_t i = 0; i < s.labels.size(); ++i) {
    if (dataset.empty() || m.entries[i].source_dataset == dataset) {
      counts[s.labels[i]]++;
    }
  }
  return counts;
}

}  // namespace

TEST_CASE("split: 100 segments in one dataset give exactly 50/40/10") {
  const auto m = fake_manifest({{"a", 100}});
  const auto s = split(m, {0.5, 0.4, 0.1}, 1);
  auto counts = label_counts(s, m);
  CHECK(counts[SplitLabel::Train] == 50);
  CHECK(counts[SplitLabel::Test] == 40);
  CHECK(counts[SplitLabel::Validation] == 10);
}

TEST_CASE("split: 10 segments give 5/4/1") {
  const auto m = fake_manifest({{"a", 10}});
  const auto s = split(m, {0.5, 0.4, 0.1}, 2);
  auto counts = label_counts(s, m);
  CHECK(counts[SplitLabel::Train] == 5);
  CHECK(counts[SplitLabel::Test] == 4);
  CHECK(counts[SplitLabel::Validation] == 1);
}

TEST_CASE("split draws per dataset, then aggregates") {
  const auto m = fake_manifest({{"a", 100}, {"b", 100}});
  const auto s = split(m, {0.5, 0.4, 0.1}, 3);
  for (const char* name : {"a", "b"}) {
    auto counts = label_counts(s, m, name);
    CHECK(counts[SplitLabel::Train] == 50);
    CHECK(counts[SplitLabel::Test] == 40);
    CHECK(counts[SplitLabel::Validation] == 10);
  }
  auto total = label_counts(s, m);
  CHECK(total[SplitLabel::Train] == 100);
  CHECK(total[SplitLabel::Test] == 80);
  CHECK(total[SplitLabel::Validation] == 20);
}

TEST_CASE("split is a partition with counts within one of the exact fractions") {
  Rng rng(44);
  for (int rep = 0; rep < 10; ++rep) {
    const size_t n = 3 + rng.uniform_index(400);
    const auto m = fake_manifest({{"d", n}});
    const auto s = split(m, {0.5, 0.4, 0.1}, rng.next_u64());
    REQUIRE(s.labels.size() == n);  // exhaustive by construction
    auto counts = label_counts(s, m);
    CHECK(counts[SplitLabel::Train] + counts[SplitLabel::Test] +
              counts[SplitLabel::Validation] == n);
    CHECK(std::abs(static_cast<double>(counts[SplitLabel::Train]) - 0.5 * n) <= 1.0);
    CHECK(std::abs(static_cast<double>(counts[SplitLabel::Test]) - 0.4 * n) <= 1.0);
    CHECK(std::abs(static_cast<double>(counts[SplitLabel::Validation]) - 0.1 * n) <= 1.0);
  }
}

TEST_CASE("split: tiny datasets go wholly to train with a warning") {
  const auto m = fake_manifest({{"small", 2}, {"big", 100}});
  std::ostringstream warnings;
  const auto s = split(m, {0.5, 0.4, 0.1}, 5, &warnings);
  auto counts = label_counts(s, m, "small");
  CHECK(counts[SplitLabel::Train] == 2);
  CHECK(warnings.str().find("small") != std::string::npos);
}

TEST_CASE("split determinism and seed sensitivity") {
  const auto m = fake_manifest({{"a", 64}});
  const auto s1 = split(m, {0.5, 0.4, 0.1}, 9);
  const auto s2 = split(m, {0.5, 0.4, 0.1}, 9);
  const auto s3 = split(m, {0.5, 0.4, 0.1}, 10);
  CHECK(s1.labels == s2.labels);
  CHECK(s1.labels != s3.labels);
}

TEST_CASE("split file round-trip") {
  const auto m = fake_manifest({{"a", 30}});
  const auto s = split(m, {0.5, 0.4, 0.1}, 77);
  const auto path = (temp_dir() / "split.csv").string();
  write_split(s, path);
  const auto loaded = read_split(path, m.size());
  CHECK(loaded.labels == s.labels);
  CHECK(loaded.seed == 77);
  CHECK_THROWS_AS(read_split(path, m.size() + 1), DataError);
}

TEST_CASE("manifest round-trip preserves targets and absences") {
  Manifest m = fake_manifest({{"x", 5}});
  m.entries[2].polqa.reset();
  m.entries[4].stoi.reset();
  const auto path = (temp_dir() / "manifest.csv").string();
  write_manifest(m, path);
  const auto loaded = read_manifest(path);
  REQUIRE(loaded.size() == m.size());
  for (size_t i = 0; i < m.size(); ++i) {
    CHECK(loaded.entries[i].segment_path == m.entries[i].segment_path);
    CHECK(loaded.entries[i].record_index == m.entries[i].record_index);
    CHECK(loaded.entries[i].source_dataset == m.entries[i].source_dataset);
    CHECK(loaded.entries[i].pesq == m.entries[i].pesq);
    CHECK(loaded.entries[i].polqa == m.entries[i].polqa);
    CHECK(loaded.entries[i].stoi == m.entries[i].stoi);
  }
}

TEST_CASE("manifest rejects out-of-range targets") {
  const auto path = (temp_dir() / "bad_manifest.csv").string();
  {
    std::ofstream os(path);
    os << "segment_path,record_index,source_dataset,pesq,polqa,stoi\n";
    os << "s.weseg,0,d,5.1,,\n";  // pesq beyond 4.5
  }
  CHECK_THROWS_AS(read_manifest(path), DataError);
}

TEST_CASE("fit_mapper: quality metrics use the fixed affine map") {
  const auto m = fake_manifest({{"a", 20}});
  std::vector<size_t> first_half, second_half;
  for (size_t i = 0; i < 10; ++i) first_half.push_back(i);
  for (size_t i = 10; i < 20; ++i) second_half.push_back(i);

  const auto mapper = fit_mapper(TargetMetric::Pesq, m, first_half);
  CHECK(mapper.map(4.5) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mapper.map(1.0) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(std::abs(mapper.map(2.75)) < 1e-12);

  // data independence: disjoint training sets give identical mappers
  const auto mapper2 = fit_mapper(TargetMetric::Polqa, m, second_half);
  CHECK(mapper.scale == mapper2.scale);
  CHECK(mapper.shift == mapper2.shift);
}

TEST_CASE("fit_mapper: stoi uses training-set z-score with population stddev") {
  Manifest m = fake_manifest({{"a", 2}});
  m.entries[0].stoi = 0.8;
  m.entries[1].stoi = 1.0;
  const auto mapper = fit_mapper(TargetMetric::Stoi, m, {0, 1});
  CHECK(mapper.mean == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(mapper.stddev == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(mapper.map(0.8) == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(mapper.map(1.0) == doctest::Approx(1.0).epsilon(1e-9));

  // zero variance rejected
  m.entries[1].stoi = 0.8;
  CHECK_THROWS_AS(fit_mapper(TargetMetric::Stoi, m, {0, 1}), DataError);
}

TEST_CASE("mapper round-trip is identity to 1e-12") {
  Rng rng(55);
  const auto affine = TargetMapper::affine_quality();
  const auto zscore = TargetMapper::zscore(0.73, 0.081);
  for (int i = 0; i < 100; ++i) {
    const double q = rng.uniform(1.0, 4.5);
    CHECK(affine.unmap(affine.map(q)) == doctest::Approx(q).epsilon(1e-12));
    const double s = rng.uniform(0.0, 1.0);
    CHECK(zscore.unmap(zscore.map(s)) == doctest::Approx(s).epsilon(1e-12));
  }
}

TEST_CASE("epoch_batches: sizes, determinism and exact union") {
  std::vector<size_t> ids(110);
  for (size_t i = 0; i < ids.size(); ++i) ids[i] = i * 3;

  const auto batches = epoch_batches(ids, 55, 1, 0);
  REQUIRE(batches.size() == 2);
  CHECK(batches[0].size() == 55);
  CHECK(batches[1].size() == 55);

  std::vector<size_t> short_ids(56);
  for (size_t i = 0; i < 56; ++i) short_ids[i] = i;
  const auto uneven = epoch_batches(short_ids, 55, 1, 0);
  REQUIRE(uneven.size() == 2);
  CHECK(uneven[0].size() == 55);
  CHECK(uneven[1].size() == 1);  // kept here; the trainer drops size-1 batches

  const auto again = epoch_batches(ids, 55, 1, 0);
  CHECK(batches == again);
  const auto other_epoch = epoch_batches(ids, 55, 1, 1);
  CHECK(batches != other_epoch);

  std::multiset<size_t> seen;
  for (const auto& b : other_epoch) seen.insert(b.begin(), b.end());
  CHECK(seen == std::multiset<size_t>(ids.begin(), ids.end()));
}

TEST_CASE("synthetic fixture target formulas hit the documented endpoints") {
  CHECK(quality_target_for_snr(40.0) == doctest::Approx(4.5));
  CHECK(quality_target_for_snr(-5.0) == doctest::Approx(1.0));
  CHECK(quality_target_for_snr(17.5) == doctest::Approx(2.75));
  CHECK(stoi_target_for_snr(40.0) == doctest::Approx(0.95));
  CHECK(stoi_target_for_snr(-5.0) == doctest::Approx(0.45));
}

TEST_CASE("synth_fixture emits normalized, highly active segments") {
  FixtureOptions opt;
  opt.count = 12;
  opt.seed = 3;
  const auto store = (temp_dir() / "fixture.weseg").string();
  const auto manifest_path = (temp_dir() / "fixture.csv").string();
  const Manifest m = synth_fixture(opt, store, manifest_path);
  REQUIRE(m.size() == 12);

  dsp::SegmentStoreReader reader(store);
  REQUIRE(reader.size() == 12);
  for (size_t i = 0; i < reader.size(); ++i) {
    const auto seg = reader.read(i);
    CHECK(seg.samples.size() == dsp::kSegmentSamples);
    for (float s : seg.samples) {
      CHECK(s >= -1.0f);
      CHECK(s <= 1.0f);
    }
    const auto report = dsp::measure_activity(
        std::span<const float>(seg.samples.data(), seg.samples.size()), dsp::kSampleRate);
    CHECK(report.activity_factor > 0.75);
    REQUIRE(report.active_level_db.has_value());
    CHECK(*report.active_level_db == doctest::Approx(-26.0).epsilon(0.004));

    const auto& e = m.entries[i];
    REQUIRE(e.pesq.has_value());
    CHECK(*e.pesq >= 1.0);
    CHECK(*e.pesq <= 4.5);
    REQUIRE(e.stoi.has_value());
    CHECK(*e.stoi >= 0.0);
    CHECK(*e.stoi <= 1.0);
  }

  // deterministic regeneration
  const auto store2 = (temp_dir() / "fixture2.weseg").string();
  const auto manifest2 = (temp_dir() / "fixture2.csv").string();
  const Manifest m2 = synth_fixture(opt, store2, manifest2);
  for (size_t i = 0; i < m.size(); ++i) {
    CHECK(m.entries[i].pesq == m2.entries[i].pesq);
  }
  dsp::SegmentStoreReader reader2(store2);
  CHECK(reader.read(5).samples == reader2.read(5).samples);
}

TEST_CASE("apply_ipa doubles the manifest with inverted twins") {
  FixtureOptions opt;
  opt.count = 3;
  opt.seed = 8;
  const auto store = (temp_dir() / "ipa_base.weseg").string();
  const auto manifest_path = (temp_dir() / "ipa_base.csv").string();
  Manifest m = synth_fixture(opt, store, manifest_path);
  auto s = split(m, {0.5, 0.4, 0.1}, 1, nullptr);  // 3 entries -> warning-free? n=3
  const auto ipa_store = (temp_dir() / "ipa_twins.weseg").string();
  const auto result = apply_ipa(m, &s, ipa_store);

  REQUIRE(result.manifest.size() == 6);
  REQUIRE(result.split.labels.size() == 6);
  SegmentSource source(result.manifest);

  size_t inverted = 0;
  for (size_t i = 0; i < 3; ++i) {
    const auto orig = source.load(i);
    const auto twin = source.load(i + 3);
    CHECK_FALSE(orig.phase_inverted);
    CHECK(twin.phase_inverted);
    ++inverted;
    for (size_t j = 0; j < orig.samples.size(); ++j) {
      CHECK(twin.samples[j] == -orig.samples[j]);
    }
    // identical targets and split label
    CHECK(result.manifest.entries[i + 3].pesq == m.entries[i].pesq);
    CHECK(result.manifest.entries[i + 3].polqa == m.entries[i].polqa);
    CHECK(result.manifest.entries[i + 3].stoi == m.entries[i].stoi);
    CHECK(result.manifest.entries[i + 3].source_dataset == m.entries[i].source_dataset);
    CHECK(result.split.labels[i + 3] == s.labels[i]);
  }
  CHECK(inverted == 3);

  // per-split target multisets are preserved exactly
  for (auto label : {SplitLabel::Train, SplitLabel::Test, SplitLabel::Validation}) {
    std::multiset<double> before, after;
    for (size_t i = 0; i < 3; ++i) {
      if (s.labels[i] == label) before.insert(*m.entries[i].pesq);
    }
    std::multiset<double> doubled = before;
    doubled.insert(before.begin(), before.end());
    for (size_t i = 0; i < 6; ++i) {
      if (result.split.labels[i] == label) after.insert(*result.manifest.entries[i].pesq);
    }
    CHECK(after == doubled);
  }

  // applying it twice is rejected: inverted records are already present
  const auto ipa_store2 = (temp_dir() / "ipa_twice.weseg").string();
  CHECK_THROWS_AS(apply_ipa(result.manifest, &result.split, ipa_store2), DataError);
}

TEST_CASE("load_batch assembles [N,1,24000] inputs with mapped targets") {
  FixtureOptions opt;
  opt.count = 4;
  opt.seed = 14;
  const auto store = (temp_dir() / "batch.weseg").string();
  const auto manifest_path = (temp_dir() / "batch.csv").string();
  const Manifest m = synth_fixture(opt, store, manifest_path);
  SegmentSource source(m);
  const auto mapper = TargetMapper::affine_quality();
  const auto batch =
      load_batch<float>(source, TargetMetric::Pesq, mapper, {0, 2, 3});
  CHECK(batch.inputs.shape == std::vector<size_t>{3, 1, dsp::kSegmentSamples});
  for (size_t n = 0; n < 3; ++n) {
    CHECK(batch.targets_mapped[n] ==
          doctest::Approx(mapper.map(*m.entries[batch.entry_ids[n]].pesq)));
    CHECK(batch.targets_mapped[n] >= -1.0f);
    CHECK(batch.targets_mapped[n] <= 1.0f);
  }
}
