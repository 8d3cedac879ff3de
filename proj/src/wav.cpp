#include "wenets/dsp/wav.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

namespace wenets::dsp {

namespace {

struct FmtChunk {
  uint16_t format = 0;
  uint16_t channels = 0;
  uint32_t sample_rate = 0;
  uint16_t bits_per_sample = 0;
};

}  // namespace

AudioClip load_wav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open WAV file: " + path);

  char tag[4];
  read_bytes(is, tag, 4, "RIFF tag");
  if (std::memcmp(tag, "RIFF", 4) != 0) {
    throw DataError("malformed RIFF header (no RIFF tag): " + path);
  }
  (void)read_u32le(is, "RIFF size");
  read_bytes(is, tag, 4, "WAVE tag");
  if (std::memcmp(tag, "WAVE", 4) != 0) {
    throw DataError("malformed RIFF header (no WAVE tag): " + path);
  }

  FmtChunk fmt;
  bool have_fmt = false;
  std::vector<int16_t> pcm;
  bool have_data = false;

  // Walk chunks; tolerate extras like LIST, fact. Chunks are word-aligned.
  while (is.peek() != EOF) {
    char id[4];
    is.read(id, 4);
    if (is.gcount() == 0) break;
    if (is.gcount() != 4) throw DataError("truncated chunk header: " + path);
    const uint32_t size = read_u32le(is, "chunk size");
    const uint32_t pad = size % 2;
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (size < 16) throw DataError("fmt chunk too small: " + path);
      fmt.format = read_u16le(is, "fmt.format");
      fmt.channels = read_u16le(is, "fmt.channels");
      fmt.sample_rate = read_u32le(is, "fmt.sample_rate");
      (void)read_u32le(is, "fmt.byte_rate");
      (void)read_u16le(is, "fmt.block_align");
      fmt.bits_per_sample = read_u16le(is, "fmt.bits");
      is.seekg(size - 16 + pad, std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      if (!have_fmt) throw DataError("data chunk before fmt chunk: " + path);
      if (size % 2 != 0) throw DataError("odd PCM16 data size: " + path);
      pcm.resize(size / 2);
      read_bytes(is, pcm.data(), size, "PCM data");
      have_data = true;
    } else {
      is.seekg(size + pad, std::ios::cur);
      if (!is) throw DataError("truncated chunk body: " + path);
    }
  }

  if (!have_fmt || !have_data) {
    throw DataError("missing fmt or data chunk: " + path);
  }
  if (fmt.format != 1) {
    throw DataError("unsupported codec (want PCM): " + path);
  }
  if (fmt.channels != 1) {
    throw DataError("unsupported channel count " + std::to_string(fmt.channels) +
                    " (want mono): " + path);
  }
  if (fmt.bits_per_sample != 16) {
    throw DataError("unsupported bit depth " + std::to_string(fmt.bits_per_sample) +
                    " (want 16): " + path);
  }
  if (fmt.sample_rate != kSampleRate) {
    throw DataError("sample rate " + std::to_string(fmt.sample_rate) + " != 8000 (resampling unsupported): " + path);
  }

  AudioClip clip;
  clip.sample_rate = static_cast<int>(fmt.sample_rate);
  clip.source_id = path;
  clip.samples.resize(pcm.size());
  for (size_t i = 0; i < pcm.size(); ++i) {
    clip.samples[i] = static_cast<float>(pcm[i]) / 32768.0f;
  }
  return clip;
}

void save_wav_pcm16(const std::string& path, std::span<const float> samples,
                    int sample_rate) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open WAV file for writing: " + path);

  const uint32_t data_size = static_cast<uint32_t>(samples.size() * 2);
  write_bytes(os, "RIFF", 4);
  write_u32le(os, 36 + data_size);
  write_bytes(os, "WAVE", 4);
  write_bytes(os, "fmt ", 4);
  write_u32le(os, 16);
  write_u16le(os, 1);  // PCM
  write_u16le(os, 1);  // mono
  write_u32le(os, static_cast<uint32_t>(sample_rate));
  write_u32le(os, static_cast<uint32_t>(sample_rate * 2));
  write_u16le(os, 2);
  write_u16le(os, 16);
  write_bytes(os, "data", 4);
  write_u32le(os, data_size);
  for (float s : samples) {
    const double scaled = static_cast<double>(s) * 32768.0;
    const int32_t q = static_cast<int32_t>(std::lrint(scaled));
    const int16_t v = static_cast<int16_t>(std::clamp(q, -32768, 32767));
    write_u16le(os, static_cast<uint16_t>(v));
  }
  if (!os) throw DataError("write failed: " + path);
}

}  // namespace wenets::dsp
