#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "wenets/common.hpp"
#include "wenets/targets.hpp"

namespace wenets::corpus {

// One row of the manifest CSV:
//   segment_path,record_index,source_dataset,pesq,polqa,stoi
// Empty target fields mean "absent". Relative segment paths resolve
// against the manifest file's directory.
struct ManifestEntry {
  std::string segment_path;
  uint32_t record_index = 0;
  std::string source_dataset;
  std::optional<double> pesq, polqa, stoi;

  std::optional<double> target(TargetMetric m) const {
    switch (m) {
      case TargetMetric::Pesq: return pesq;
      case TargetMetric::Polqa: return polqa;
      case TargetMetric::Stoi: return stoi;
    }
    return std::nullopt;
  }
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  std::string base_dir;  // directory of the manifest file, for resolution

  std::string resolve_path(const ManifestEntry& e) const;
  size_t size() const { return entries.size(); }
};

Manifest read_manifest(const std::string& path);
void write_manifest(const Manifest& m, const std::string& path);

enum class SplitLabel : uint8_t { Train = 0, Test = 1, Validation = 2 };

std::string to_string(SplitLabel l);
SplitLabel split_label_from_string(const std::string& s);

struct SplitAssignment {
  std::vector<SplitLabel> labels;  // aligned with manifest entries
  uint64_t seed = 0;

  std::vector<size_t> indices(SplitLabel want) const {
    std::vector<size_t> out;
    for (size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == want) out.push_back(i);
    }
    return out;
  }
};

// Per source dataset: shuffle, then round(f_train*n) to train and
// round(f_test*n) to test, remainder to validation. Datasets with fewer
// than 3 segments go entirely to train (with a warning on `warn`).
SplitAssignment split(const Manifest& m, std::array<double, 3> fractions,
                      uint64_t seed, std::ostream* warn = nullptr);

// Split CSV: entry_id,label,seed (entry_id = manifest row index).
SplitAssignment read_split(const std::string& path, size_t manifest_size);
void write_split(const SplitAssignment& s, const std::string& path);

// PESQ/POLQA get the fixed affine map regardless of data; STOI gets a
// z-score map with mean/population-stddev from the training entries.
TargetMapper fit_mapper(TargetMetric metric, const Manifest& m,
                        const std::vector<size_t>& training_ids);

// Inverse phase augmentation: every entry gains a phase-inverted twin in
// out_store_path with identical targets (and split label when a split is
// given). Rejects input that already contains inverted records.
struct IpaResult {
  Manifest manifest;
  SplitAssignment split;  // empty labels when no split was supplied
};
IpaResult apply_ipa(const Manifest& m, const SplitAssignment* s,
                    const std::string& out_store_path);

}  // namespace wenets::corpus
