#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "beats/wav.hpp"

namespace beats {

enum class Label { kRequest = 0, kQuestion = 1, kOrder = 2 };
constexpr std::size_t kNumClasses = 3;
std::string label_name(Label label);
Label label_from_name(const std::string& name);

enum class Split { kTrain, kVal, kTest };
std::string split_name(Split split);
Split split_from_name(const std::string& name);

struct TokenSequence {
  enum class Lang { kBengali, kEnglish };
  std::vector<std::size_t> tokens;
  Lang lang = Lang::kEnglish;
};

// Token id layout shared by the generator, augmentation, and the text oracle.
// Ids 1..3 are the English class markers, always at position 0; content ids
// 4..63 pair even<->odd for synonym swaps. Bengali ids occupy class-structured
// bands of the same 64-wide vocabulary.
constexpr std::size_t kVocabSize = 64;
constexpr std::size_t kMarkerRequest = 1;   // "please"
constexpr std::size_t kMarkerQuestion = 2;  // interrogative
constexpr std::size_t kMarkerOrder = 3;     // imperative

struct UtteranceRecord {
  std::string id;
  std::string wav_path;  // relative to the manifest's directory
  TokenSequence bengali;
  TokenSequence english;
  Label label = Label::kRequest;
  int speaker = 0;
  Split split = Split::kTrain;
  Waveform audio;  // empty until load_audio
};

struct Dataset {
  std::string dir;  // directory holding manifest.tsv and wav/
  std::vector<UtteranceRecord> records;

  std::vector<const UtteranceRecord*> split_view(Split split) const;
  std::vector<std::size_t> class_counts() const;  // indexed by label code
};

// Tab-separated manifest, one record per line after a header naming the
// fields; token lists are space-joined ids.
void write_manifest(const Dataset& dataset, const std::string& path);
Dataset load_manifest(const std::string& path);

// Reads every referenced WAV into memory.
void load_audio(Dataset& dataset);

// FNV-1a over the manifest bytes followed by each referenced WAV's bytes in
// record order; detects any drift in regenerated corpora.
std::uint64_t dataset_checksum(const std::string& manifest_path);
std::string checksum_hex(std::uint64_t h);

}  // namespace beats
