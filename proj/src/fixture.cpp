#include "wenets/corpus/fixture.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "wenets/dsp/activity.hpp"
#include "wenets/dsp/segment.hpp"
#include "wenets/dsp/wav.hpp"

namespace fs = std::filesystem;

namespace wenets::corpus {

double quality_target_for_snr(double snr_db) {
  return std::clamp(1.0 + 3.5 * (snr_db + 5.0) / 45.0, 1.0, 4.5);
}

double stoi_target_for_snr(double snr_db) {
  return std::clamp(0.45 + 0.5 * (snr_db + 5.0) / 45.0, 0.0, 1.0);
}

std::vector<float> synth_pseudo_speech(Rng& rng, size_t n_samples, int sample_rate,
                                       double snr_db) {
  const double f0 = rng.uniform(100.0, 300.0);
  const int n_harmonics = 2 + static_cast<int>(rng.uniform_index(3));  // 2..4
  std::vector<double> amp(n_harmonics), phase(n_harmonics);
  for (int h = 0; h < n_harmonics; ++h) {
    amp[h] = rng.uniform(0.3, 1.0) / (h + 1);
    phase[h] = rng.uniform(0.0, 2.0 * M_PI);
  }
  const double mod_hz = rng.uniform(2.0, 8.0);
  const double mod_phase = rng.uniform(0.0, 2.0 * M_PI);

  std::vector<double> carrier(n_samples);
  double carrier_power = 0.0;
  for (size_t i = 0; i < n_samples; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    double s = 0.0;
    for (int h = 0; h < n_harmonics; ++h) {
      s += amp[h] * std::sin(2.0 * M_PI * f0 * (h + 1) * t + phase[h]);
    }
    // Syllabic envelope kept off zero so the carrier never fully gates.
    const double envelope = 0.55 + 0.45 * std::sin(2.0 * M_PI * mod_hz * t + mod_phase);
    carrier[i] = s * envelope;
    carrier_power += carrier[i] * carrier[i];
  }
  carrier_power /= static_cast<double>(n_samples);

  // White noise scaled for the requested SNR.
  const double noise_power = carrier_power / std::pow(10.0, snr_db / 10.0);
  const double noise_std = std::sqrt(noise_power);
  std::vector<float> out(n_samples);
  double peak = 0.0;
  for (size_t i = 0; i < n_samples; ++i) {
    const double v = carrier[i] + noise_std * rng.normal();
    out[i] = static_cast<float>(v);
    peak = std::max(peak, std::abs(v));
  }
  // Keep comfortably inside [-1, 1); level normalization happens later.
  const float scale = static_cast<float>(0.5 / std::max(peak, 1e-9));
  for (float& v : out) v *= scale;
  return out;
}

Manifest synth_fixture(const FixtureOptions& opt, const std::string& store_path,
                       const std::string& manifest_path) {
  if (opt.count < 1) throw DataError("synth_fixture: count must be >= 1");
  Rng rng(mix_seed(opt.seed, 0xF1C7));

  dsp::SegmentStoreWriter writer(store_path);
  Manifest m;
  m.base_dir = fs::path(manifest_path).parent_path().string();
  const std::string stored_path = fs::path(store_path).filename().string();

  for (size_t i = 0; i < opt.count; ++i) {
    const double snr = rng.uniform(opt.min_snr_db, opt.max_snr_db);
    dsp::AudioClip clip;
    clip.sample_rate = dsp::kSampleRate;
    clip.source_id = opt.dataset_name + "/" + std::to_string(i);
    clip.samples = synth_pseudo_speech(rng, dsp::kSegmentSamples, clip.sample_rate, snr);

    const auto norm = dsp::normalize_to_level(clip);
    const auto report = dsp::measure_activity(norm.clip);

    dsp::Segment seg;
    seg.samples = norm.clip.samples;
    seg.activity_factor = static_cast<float>(report.activity_factor);
    seg.gain_applied_db = static_cast<float>(norm.gain_db);
    seg.offset_ms = 0;
    seg.source_id = clip.source_id;
    writer.append(seg);

    ManifestEntry e;
    e.segment_path = stored_path;
    e.record_index = static_cast<uint32_t>(i);
    e.source_dataset = opt.dataset_name;
    e.pesq = quality_target_for_snr(snr);
    e.polqa = quality_target_for_snr(snr);
    e.stoi = stoi_target_for_snr(snr);
    m.entries.push_back(std::move(e));
  }
  writer.flush();
  write_manifest(m, manifest_path);
  return m;
}

void synth_wav_corpus(const FixtureOptions& opt, double seconds, const std::string& dir) {
  if (seconds <= 0.0) throw DataError("synth_wav_corpus: seconds must be positive");
  fs::create_directories(dir);
  Rng rng(mix_seed(opt.seed, 0xFAB5));

  std::ofstream targets(fs::path(dir) / "targets.csv", std::ios::trunc);
  if (!targets) throw DataError("cannot write targets.csv under " + dir);
  targets << "source_id,pesq,polqa,stoi\n";

  const size_t n_samples = static_cast<size_t>(seconds * dsp::kSampleRate);
  for (size_t i = 0; i < opt.count; ++i) {
    const double snr = rng.uniform(opt.min_snr_db, opt.max_snr_db);
    const auto samples = synth_pseudo_speech(rng, n_samples, dsp::kSampleRate, snr);
    char name[32];
    std::snprintf(name, sizeof(name), "clip%04zu.wav", i);
    dsp::save_wav_pcm16((fs::path(dir) / name).string(), samples);
    char q[32], s[32];
    std::snprintf(q, sizeof(q), "%.6f", quality_target_for_snr(snr));
    std::snprintf(s, sizeof(s), "%.6f", stoi_target_for_snr(snr));
    targets << name << ',' << q << ',' << q << ',' << s << '\n';
  }
  if (!targets) throw DataError("targets.csv write failed under " + dir);
}

}  // namespace wenets::corpus
