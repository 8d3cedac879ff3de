#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "wenets/common.hpp"
#include "wenets/dsp/activity.hpp"
#include "wenets/dsp/wav.hpp"

namespace wenets::dsp {

// 3 s at 8000 smp/s.
constexpr size_t kSegmentSamples = 24000;
constexpr uint16_t kMaxOffsetMs = 250;

struct Segment {
  std::vector<float> samples;  // exactly kSegmentSamples
  float activity_factor = 0.0f;
  float gain_applied_db = 0.0f;
  uint16_t offset_ms = 0;  // offset from the nominal window start
  std::string source_id;
  bool phase_inverted = false;
};

// Scans nominal non-overlapping 3 s windows; per pass each window start is
// shifted by an independent uniform offset in [0, 250] ms (floor(ms*8)
// samples). A window is emitted when it fits in the clip and its measured
// activity factor is >= min_activity. Identical start samples across
// passes are emitted once.
std::vector<Segment> extract_segments(const AudioClip& clip, double min_activity,
                                      int passes, Rng& rng,
                                      float gain_applied_db = 0.0f);

// Negates every sample and toggles the flag; everything else unchanged.
Segment invert_phase(const Segment& seg);

// WESEG1 store: magic "WESEG1", then per record:
//   source_id   u32 LE byte length + UTF-8
//   offset_ms   u16 LE
//   activity_factor, gain_applied_db   f32 LE
//   phase_inverted   u8 (0/1)
//   samples     24000 x f32 LE
inline constexpr char kStoreMagic[6] = {'W', 'E', 'S', 'E', 'G', '1'};

class SegmentStoreWriter {
 public:
  explicit SegmentStoreWriter(const std::string& path);
  void append(const Segment& seg);
  size_t count() const { return count_; }
  void flush();

 private:
  std::ofstream os_;
  std::string path_;
  size_t count_ = 0;
};

class SegmentStoreReader {
 public:
  explicit SegmentStoreReader(const std::string& path);
  size_t size() const { return offsets_.size(); }
  Segment read(size_t index) const;
  // Record metadata without the sample payload.
  Segment read_header(size_t index) const;
  const std::string& path() const { return path_; }

 private:
  Segment read_at(size_t index, bool with_samples) const;
  mutable std::ifstream is_;
  std::string path_;
  std::vector<std::streamoff> offsets_;
};

}  // namespace wenets::dsp
