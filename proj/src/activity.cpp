#include "wenets/dsp/activity.hpp"

#include <algorithm>
#include <cmath>

namespace wenets::dsp {

namespace {

double to_db(double amplitude) { return 20.0 * std::log10(amplitude); }

}  // namespace

ActivityReport measure_activity(std::span<const float> samples, int sample_rate) {
  if (samples.empty()) throw DataError("measure_activity: empty clip");

  const size_t frame_len = static_cast<size_t>(sample_rate * kFrameMs / 1000.0);
  const size_t n_frames = samples.size() / frame_len;
  ActivityReport report;
  if (n_frames == 0) {
    // shorter than one frame: treat the whole clip as one frame
    report.active_mask.assign(1, 0);
    return report;
  }
  report.active_mask.assign(n_frames, 0);

  // Per-frame envelope + per-frame energy over full frames only.
  const double alpha =
      std::exp(-1000.0 / (kEnvelopeTimeConstantMs * static_cast<double>(sample_rate)));
  std::vector<double> frame_env(n_frames, 0.0);
  std::vector<double> frame_energy(n_frames, 0.0);
  double env = 0.0;
  for (size_t f = 0; f < n_frames; ++f) {
    double peak = 0.0;
    double energy = 0.0;
    const float* x = samples.data() + f * frame_len;
    for (size_t i = 0; i < frame_len; ++i) {
      const double a = std::abs(static_cast<double>(x[i]));
      env = alpha * env + (1.0 - alpha) * a;
      peak = std::max(peak, env);
      energy += static_cast<double>(x[i]) * static_cast<double>(x[i]);
    }
    frame_env[f] = peak;
    frame_energy[f] = energy;
  }

  const double total_energy = pairwise_sum(frame_energy.data(), n_frames);
  if (total_energy <= 0.0) {
    return report;  // silence: factor 0, level undefined
  }

  // Fixed-point sweep: threshold at (candidate level - margin), candidate
  // level = RMS over frames above threshold.
  const double total_samples = static_cast<double>(n_frames * frame_len);
  double level_db = to_db(std::sqrt(total_energy / total_samples));
  std::vector<uint8_t> raw(n_frames, 0);
  for (int iter = 0; iter < 50; ++iter) {
    const double threshold = std::pow(10.0, (level_db - kActiveMarginDb) / 20.0);
    double active_energy = 0.0;
    size_t active_samples = 0;
    for (size_t f = 0; f < n_frames; ++f) {
      raw[f] = frame_env[f] > threshold ? 1 : 0;
      if (raw[f]) {
        active_energy += frame_energy[f];
        active_samples += frame_len;
      }
    }
    if (active_samples == 0 || active_energy <= 0.0) {
      return report;  // nothing exceeds its own level minus margin
    }
    const double next = to_db(std::sqrt(active_energy / static_cast<double>(active_samples)));
    if (std::abs(next - level_db) < 1e-3) {
      level_db = next;
      break;
    }
    level_db = next;
  }
  report.active_level_db = level_db;

  // Bridge interior gaps <= hangover between raw-active frames.
  const size_t hang_frames = static_cast<size_t>(kHangoverMs / kFrameMs);
  report.active_mask = raw;
  size_t f = 0;
  while (f < n_frames) {
    if (raw[f]) {
      ++f;
      continue;
    }
    size_t gap_end = f;
    while (gap_end < n_frames && !raw[gap_end]) ++gap_end;
    const bool interior = f > 0 && gap_end < n_frames;
    if (interior && gap_end - f <= hang_frames) {
      std::fill(report.active_mask.begin() + static_cast<ptrdiff_t>(f),
                report.active_mask.begin() + static_cast<ptrdiff_t>(gap_end), 1);
    }
    f = gap_end;
  }

  size_t active = 0;
  for (uint8_t m : report.active_mask) active += m;
  report.activity_factor = static_cast<double>(active) / static_cast<double>(n_frames);
  return report;
}

ActivityReport measure_activity(const AudioClip& clip) {
  return measure_activity(std::span<const float>(clip.samples), clip.sample_rate);
}

NormalizeResult normalize_to_level(const AudioClip& clip, double target_db) {
  const ActivityReport report = measure_activity(clip);
  if (!report.active_level_db.has_value()) {
    throw DataError("normalize_to_level: no active frames in '" + clip.source_id + "'");
  }
  const double gain_db = target_db - *report.active_level_db;
  const double gain = std::pow(10.0, gain_db / 20.0);

  NormalizeResult out;
  out.gain_db = gain_db;
  out.clip.sample_rate = clip.sample_rate;
  out.clip.source_id = clip.source_id;
  out.clip.samples.resize(clip.samples.size());
  for (size_t i = 0; i < clip.samples.size(); ++i) {
    double v = static_cast<double>(clip.samples[i]) * gain;
    if (v > 1.0) {
      v = 1.0;
      ++out.clipped_samples;
    } else if (v < -1.0) {
      v = -1.0;
      ++out.clipped_samples;
    }
    out.clip.samples[i] = static_cast<float>(v);
  }
  return out;
}

}  // namespace wenets::dsp
