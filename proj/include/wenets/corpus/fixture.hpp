#pragma once

#include <string>
#include <vector>

#include "wenets/common.hpp"
#include "wenets/corpus/manifest.hpp"

namespace wenets::corpus {

// Synthetic pseudo-speech: 2-4 harmonics of a 100-300 Hz fundamental,
// amplitude-modulated by a 2-8 Hz syllabic envelope, mixed with white
// noise at an SNR drawn uniformly from [min_snr, max_snr] dB. Targets are
// fixed functions of the SNR (fixture constants, not claims about real
// PESQ/STOI behaviour):
//   quality-like: clamp(1 + 3.5*(snr+5)/45, 1, 4.5)
//   stoi-like:    clamp(0.45 + 0.5*(snr+5)/45, 0, 1)
struct FixtureOptions {
  size_t count = 32;
  uint64_t seed = 0;
  double min_snr_db = -5.0;
  double max_snr_db = 40.0;
  std::string dataset_name = "synthetic";
};

double quality_target_for_snr(double snr_db);
double stoi_target_for_snr(double snr_db);

// One pseudo-speech waveform (not yet level-normalized).
std::vector<float> synth_pseudo_speech(Rng& rng, size_t n_samples, int sample_rate,
                                       double snr_db);

// Writes `count` ready segments (3 s, normalized to -26 dBov) into a
// WESEG1 store plus a manifest with synthetic pesq/polqa/stoi targets.
// Returns the manifest (also written to manifest_path).
Manifest synth_fixture(const FixtureOptions& opt, const std::string& store_path,
                       const std::string& manifest_path);

// WAV-file twin of synth_fixture for exercising the prepare pipeline:
// `count` clips of `seconds` each under dir/, plus dir/targets.csv with
// header source_id,pesq,polqa,stoi keyed by file name.
void synth_wav_corpus(const FixtureOptions& opt, double seconds,
                      const std::string& dir);

}  // namespace wenets::corpus
