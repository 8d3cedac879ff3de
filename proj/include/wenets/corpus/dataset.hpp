#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "wenets/common.hpp"
#include "wenets/corpus/manifest.hpp"
#include "wenets/dsp/segment.hpp"
#include "wenets/targets.hpp"
#include "wenets/tensor.hpp"

namespace wenets::corpus {

// Store-backed segment access for manifest entries; readers are opened
// lazily and kept for the lifetime of the source.
class SegmentSource {
 public:
  explicit SegmentSource(const Manifest& m) : manifest_(&m) {}

  dsp::Segment load(size_t entry_idx) const {
    const auto& e = manifest_->entries.at(entry_idx);
    return reader_for(e).read(e.record_index);
  }

  const Manifest& manifest() const { return *manifest_; }

 private:
  dsp::SegmentStoreReader& reader_for(const ManifestEntry& e) const {
    const std::string path = manifest_->resolve_path(e);
    auto it = readers_.find(path);
    if (it == readers_.end()) {
      it = readers_.emplace(path, std::make_unique<dsp::SegmentStoreReader>(path)).first;
    }
    return *it->second;
  }

  const Manifest* manifest_;
  mutable std::map<std::string, std::unique_ptr<dsp::SegmentStoreReader>> readers_;
};

// Entry ids grouped into batches after an epoch-specific reshuffle.
// The same (seed, epoch) always yields the same composition; the union of
// one epoch's batches is exactly the input set.
inline std::vector<std::vector<size_t>> epoch_batches(std::vector<size_t> ids,
                                                      size_t batch_size,
                                                      uint64_t seed, size_t epoch) {
  if (ids.empty()) throw DataError("epoch_batches: empty id set");
  if (batch_size == 0) throw DataError("epoch_batches: batch size must be positive");
  Rng rng(mix_seed(seed, 0xBA7C, epoch));
  rng.shuffle(ids.begin(), ids.end());
  std::vector<std::vector<size_t>> out;
  for (size_t at = 0; at < ids.size(); at += batch_size) {
    const size_t n = std::min(batch_size, ids.size() - at);
    out.emplace_back(ids.begin() + static_cast<ptrdiff_t>(at),
                     ids.begin() + static_cast<ptrdiff_t>(at + n));
  }
  return out;
}

template <typename T>
struct Batch {
  Tensor<T> inputs;               // [N, 1, input_length]
  std::vector<T> targets_mapped;  // [N]
  std::vector<size_t> entry_ids;
};

// Stored records are always full 3 s segments; scaled-down model variants
// train on the leading input_length samples of each record.
template <typename T>
Batch<T> load_batch(const SegmentSource& source, TargetMetric metric,
                    const TargetMapper& mapper, const std::vector<size_t>& ids,
                    size_t input_length = dsp::kSegmentSamples) {
  if (input_length == 0 || input_length > dsp::kSegmentSamples) {
    throw DataError("load_batch: input length must be in [1, " +
                    std::to_string(dsp::kSegmentSamples) + "]");
  }
  Batch<T> b;
  b.entry_ids = ids;
  b.inputs.resize({ids.size(), 1, input_length});
  b.targets_mapped.resize(ids.size());
  for (size_t n = 0; n < ids.size(); ++n) {
    const dsp::Segment seg = source.load(ids[n]);
    T* dst = b.inputs.data() + n * input_length;
    for (size_t i = 0; i < input_length; ++i) {
      dst[i] = static_cast<T>(seg.samples[i]);
    }
    const auto y = source.manifest().entries[ids[n]].target(metric);
    if (!y.has_value()) {
      throw DataError("entry " + std::to_string(ids[n]) + " has no " + to_string(metric) +
                      " target");
    }
    b.targets_mapped[n] = static_cast<T>(mapper.map(*y));
  }
  return b;
}

}  // namespace wenets::corpus
