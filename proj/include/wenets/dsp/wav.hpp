#pragma once

#include <span>
#include <string>
#include <vector>

#include "wenets/common.hpp"

namespace wenets::dsp {

constexpr int kSampleRate = 8000;

// Decoded mono waveform. Samples are in [-1, 1) (PCM16 v -> v/32768).
struct AudioClip {
  std::vector<float> samples;
  int sample_rate = kSampleRate;
  std::string source_id;

  double seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// RIFF/WAVE, PCM 16-bit, mono, 8000 Hz only; anything else throws DataError.
AudioClip load_wav(const std::string& path);

// PCM16 writer for fixtures and tests. Values are clamped to [-1, 1).
void save_wav_pcm16(const std::string& path, std::span<const float> samples,
                    int sample_rate = kSampleRate);

}  // namespace wenets::dsp
