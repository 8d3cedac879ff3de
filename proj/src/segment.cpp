#include "wenets/dsp/segment.hpp"

#include <algorithm>
#include <cstring>
#include <set>

namespace wenets::dsp {

std::vector<Segment> extract_segments(const AudioClip& clip, double min_activity,
                                      int passes, Rng& rng, float gain_applied_db) {
  if (min_activity < 0.0 || min_activity > 1.0) {
    throw DataError("extract_segments: min_activity must be in [0, 1]");
  }
  if (passes < 1) throw DataError("extract_segments: passes must be >= 1");

  const size_t n = clip.samples.size();
  std::vector<Segment> out;
  std::set<size_t> seen_starts;

  const size_t n_windows = n >= kSegmentSamples ? n / kSegmentSamples : 0;
  for (int pass = 0; pass < passes; ++pass) {
    for (size_t w = 0; w < n_windows; ++w) {
      // Offset drawn before any checks so the rng stream is fixed.
      const double offset_milli = rng.uniform(0.0, static_cast<double>(kMaxOffsetMs));
      const size_t offset_samples =
          static_cast<size_t>(std::floor(offset_milli * clip.sample_rate / 1000.0));
      const size_t start = w * kSegmentSamples + offset_samples;
      if (start + kSegmentSamples > n) continue;
      if (!seen_starts.insert(start).second) continue;

      const std::span<const float> window(clip.samples.data() + start, kSegmentSamples);
      const ActivityReport report = measure_activity(window, clip.sample_rate);
      if (report.activity_factor < min_activity) continue;

      Segment seg;
      seg.samples.assign(window.begin(), window.end());
      seg.activity_factor = static_cast<float>(report.activity_factor);
      seg.gain_applied_db = gain_applied_db;
      seg.offset_ms = static_cast<uint16_t>(offset_samples * 1000 / clip.sample_rate);
      seg.source_id = clip.source_id;
      out.push_back(std::move(seg));
    }
  }
  return out;
}

Segment invert_phase(const Segment& seg) {
  Segment out = seg;
  for (float& s : out.samples) s = -s;
  out.phase_inverted = !seg.phase_inverted;
  return out;
}

SegmentStoreWriter::SegmentStoreWriter(const std::string& path)
    : os_(path, std::ios::binary | std::ios::trunc), path_(path) {
  if (!os_) throw DataError("cannot open segment store for writing: " + path);
  os_.write(kStoreMagic, sizeof(kStoreMagic));
}

void SegmentStoreWriter::append(const Segment& seg) {
  if (seg.samples.size() != kSegmentSamples) {
    throw DataError("segment store: record must have exactly " +
                    std::to_string(kSegmentSamples) + " samples");
  }
  write_u32le(os_, static_cast<uint32_t>(seg.source_id.size()));
  write_bytes(os_, seg.source_id.data(), seg.source_id.size());
  write_u16le(os_, seg.offset_ms);
  write_f32le(os_, seg.activity_factor);
  write_f32le(os_, seg.gain_applied_db);
  write_u8(os_, seg.phase_inverted ? 1 : 0);
  write_f32_array(os_, seg.samples.data(), seg.samples.size());
  if (!os_) throw DataError("segment store write failed: " + path_);
  ++count_;
}

void SegmentStoreWriter::flush() { os_.flush(); }

SegmentStoreReader::SegmentStoreReader(const std::string& path)
    : is_(path, std::ios::binary), path_(path) {
  if (!is_) throw DataError("cannot open segment store: " + path);
  char magic[6];
  read_bytes(is_, magic, sizeof(magic), "store magic");
  if (std::memcmp(magic, kStoreMagic, sizeof(magic)) != 0) {
    throw DataError("bad magic: not a WESEG1 store: " + path);
  }
  is_.seekg(0, std::ios::end);
  const std::streamoff file_size = is_.tellg();

  // Index record offsets by hopping headers.
  std::streamoff pos = sizeof(magic);
  while (pos < file_size) {
    if (pos + 4 > file_size) throw DataError("truncated record header: " + path);
    is_.seekg(pos);
    const uint32_t id_len = read_u32le(is_, "source_id length");
    const std::streamoff record_size =
        4 + id_len + 2 + 4 + 4 + 1 + static_cast<std::streamoff>(kSegmentSamples) * 4;
    if (pos + record_size > file_size) {
      throw DataError("truncated record in segment store: " + path);
    }
    offsets_.push_back(pos);
    pos += record_size;
  }
}

Segment SegmentStoreReader::read_at(size_t index, bool with_samples) const {
  if (index >= offsets_.size()) {
    throw DataError("segment store: record " + std::to_string(index) +
                    " out of range (store has " + std::to_string(offsets_.size()) + ")");
  }
  is_.clear();
  is_.seekg(offsets_[index]);
  Segment seg;
  const uint32_t id_len = read_u32le(is_, "source_id length");
  seg.source_id.resize(id_len);
  read_bytes(is_, seg.source_id.data(), id_len, "source_id");
  seg.offset_ms = read_u16le(is_, "offset_ms");
  seg.activity_factor = read_f32le(is_, "activity_factor");
  seg.gain_applied_db = read_f32le(is_, "gain_applied_db");
  seg.phase_inverted = read_u8(is_, "phase_inverted") != 0;
  if (with_samples) {
    seg.samples.resize(kSegmentSamples);
    read_f32_array(is_, seg.samples.data(), kSegmentSamples, "samples");
  }
  return seg;
}

Segment SegmentStoreReader::read(size_t index) const { return read_at(index, true); }

Segment SegmentStoreReader::read_header(size_t index) const {
  return read_at(index, false);
}

}  // namespace wenets::dsp
