#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "beats/dataset.hpp"
#include "beats/wav.hpp"

namespace beats {

// Synthetic corpus: harmonic tones whose pitch contour encodes the speech act
// (Question rises at the end, Order falls, Request is flat with an early dip),
// spoken by 4 virtual speakers, plus two token streams per utterance. Bengali
// tokens deliberately collide across Request/Question for a configurable
// share of records; English tokens carry a class marker that is flipped with
// marker_noise probability. Neither modality alone is fully informative once
// contour noise and marker noise are on.
struct GeneratorConfig {
  std::size_t count_request = 25;
  std::size_t count_question = 35;
  std::size_t count_order = 25;
  double duration_mean = 1.3;  // seconds
  double duration_sd = 0.08;
  double duration_min = 1.0;
  double duration_max = 1.6;
  std::uint32_t sample_rate = 44100;
  int speakers = 4;
  // Base pitch range per speaker (Hz): two low voices, two high voices.
  std::vector<std::pair<double, double>> pitch_ranges = {
      {96.0, 120.0}, {108.0, 132.0}, {180.0, 220.0}, {200.0, 240.0}};
  double noise = 1.0;         // scales contour drift/bump and additive noise
  double marker_noise = 0.2;  // probability the English marker is wrong
  double ambiguity = 0.5;     // share of Request/Question pairs with identical Bengali
  double val_frac = 0.15;
  double test_frac = 0.15;
  std::uint64_t seed = 1;
};

// Time-domain-only audio augmentation plus marker-preserving English synonym
// swaps. Bengali tokens have no augmentation path at all. Defaults are the
// identity transform.
struct AugmentationConfig {
  double shift_min_ms = 0.0;
  double shift_max_ms = 0.0;
  double gain_min_db = 0.0;
  double gain_max_db = 0.0;
  double snr_min_db = std::numeric_limits<double>::infinity();
  double snr_max_db = std::numeric_limits<double>::infinity();
  double synonym_prob = 0.0;
  std::size_t copies = 0;  // augmented copies per record in generate_dataset
};

struct SynthUtterance {
  Waveform audio;
  TokenSequence bengali;
  TokenSequence english;
  int speaker = 0;
};

void validate(const GeneratorConfig& cfg);
void validate(const AugmentationConfig& cfg);

SynthUtterance synth_utterance(Label label, const GeneratorConfig& cfg, std::uint64_t seed);

Waveform augment_audio(const Waveform& w, const AugmentationConfig& cfg, std::uint64_t seed);
TokenSequence augment_english(const TokenSequence& t, const AugmentationConfig& cfg,
                              std::uint64_t seed);

// Writes wav/<id>.wav files plus manifest.tsv under out_dir and returns the
// dataset with audio already quantized exactly as on disk. Augmented copies
// (ids <base>-a1, -a2, ...) inherit their source record's split.
Dataset generate_dataset(const GeneratorConfig& cfg, const AugmentationConfig& aug,
                         const std::string& out_dir);

}  // namespace beats
