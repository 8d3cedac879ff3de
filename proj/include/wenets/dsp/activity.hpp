#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "wenets/common.hpp"
#include "wenets/dsp/wav.hpp"

namespace wenets::dsp {

// Frame-based active-speech level meter in the spirit of ITU-T P.56:
//   - 10 ms frames; per-sample envelope = exponentially smoothed |x| with a
//     30 ms time constant, carried continuously across frames; a frame's
//     envelope is the max over its samples.
//   - The active level A (dBov) is the fixed point of: A = RMS (dB) over
//     frames whose envelope exceeds A - 15.9 dB, found by iterating from
//     the whole-signal RMS.
//   - The mask bridges inactive gaps of <= 200 ms that sit between active
//     frames (trailing/leading silence is not bridged); the activity
//     factor is the active fraction of that mask. The level itself uses
//     only threshold-exceeding frames.
// The 30 ms envelope decay keeps frames active for roughly 55 ms after
// speech stops; activity factors are correspondingly a shade higher than
// an ideal instant-decay count.
struct ActivityReport {
  std::optional<double> active_level_db;  // dBov; empty when nothing is active
  double activity_factor = 0.0;           // active frames / total frames, exactly
  std::vector<uint8_t> active_mask;       // one flag per full 10 ms frame
};

constexpr double kFrameMs = 10.0;
constexpr double kEnvelopeTimeConstantMs = 30.0;
constexpr double kActiveMarginDb = 15.9;
constexpr double kHangoverMs = 200.0;

ActivityReport measure_activity(std::span<const float> samples, int sample_rate);
ActivityReport measure_activity(const AudioClip& clip);

struct NormalizeResult {
  AudioClip clip;
  double gain_db = 0.0;
  size_t clipped_samples = 0;  // samples hard-clipped to +/-1 after scaling
};

// Scales the whole clip so the re-measured active level hits target_db
// (+/-0.1 dB). Throws DataError when the input has no active frames.
NormalizeResult normalize_to_level(const AudioClip& clip, double target_db = -26.0);

}  // namespace wenets::dsp
