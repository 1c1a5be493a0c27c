#include "beats/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "beats/errors.hpp"
#include "beats/rng.hpp"

namespace beats {

namespace fs = std::filesystem;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double smoothstep(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

double bump(double t, double center, double width) {
  const double u = (t - center) / width;
  return std::exp(-0.5 * u * u);
}

// Class-conditioned pitch multiplier at relative time t in [0, 1].
double contour(Label label, double t) {
  switch (label) {
    case Label::kQuestion:
      return 1.0 + 0.25 * smoothstep((t - 0.65) / 0.35);  // rising terminal
    case Label::kOrder:
      return 1.0 - 0.15 * t;  // steady fall
    case Label::kRequest:
      return 1.0 - 0.12 * bump(t, 0.4, 0.1);  // flat with an early dip
  }
  return 1.0;
}

std::vector<std::size_t> draw_bengali(Label label, std::size_t len, Rng& rng) {
  // Bands of the 64-token vocabulary: [4,21] is shared Request/Question
  // ground (the ambiguity pool), [22,30] Request-only, [31,39] Question-only,
  // [40,63] Order.
  std::vector<std::size_t> out(len);
  for (auto& tok : out) {
    switch (label) {
      case Label::kRequest:
        tok = 4 + static_cast<std::size_t>(rng.below(27));  // [4,30]
        break;
      case Label::kQuestion: {
        const int r = rng.below(27);
        tok = r < 18 ? 4 + static_cast<std::size_t>(r) : 31 + static_cast<std::size_t>(r - 18);
        break;
      }
      case Label::kOrder:
        tok = 40 + static_cast<std::size_t>(rng.below(24));
        break;
    }
  }
  return out;
}

std::size_t marker_for(Label label) {
  switch (label) {
    case Label::kRequest:
      return kMarkerRequest;
    case Label::kQuestion:
      return kMarkerQuestion;
    case Label::kOrder:
      return kMarkerOrder;
  }
  return kMarkerRequest;
}

}  // namespace

void validate(const GeneratorConfig& cfg) {
  if (cfg.count_request < 1 || cfg.count_question < 1 || cfg.count_order < 1)
    throw ValidationError("generator: class counts must be >= 1");
  if (!(cfg.duration_min > 0.0) || cfg.duration_min > cfg.duration_mean ||
      cfg.duration_mean > cfg.duration_max)
    throw ValidationError("generator: need 0 < duration_min <= duration_mean <= duration_max");
  if (cfg.duration_sd < 0.0) throw ValidationError("generator: duration_sd must be >= 0");
  if (cfg.sample_rate == 0) throw ValidationError("generator: sample_rate must be > 0");
  if (cfg.speakers < 1) throw ValidationError("generator: speakers must be >= 1");
  if (cfg.pitch_ranges.size() < static_cast<std::size_t>(cfg.speakers))
    throw ValidationError("generator: need a pitch range per speaker");
  for (const auto& [lo, hi] : cfg.pitch_ranges)
    if (!(lo > 0.0) || lo > hi) throw ValidationError("generator: bad pitch range");
  if (cfg.noise < 0.0) throw ValidationError("generator: noise must be >= 0");
  if (cfg.marker_noise < 0.0 || cfg.marker_noise > 1.0)
    throw ValidationError("generator: marker_noise must be in [0,1]");
  if (cfg.ambiguity < 0.0 || cfg.ambiguity > 1.0)
    throw ValidationError("generator: ambiguity must be in [0,1]");
  if (cfg.val_frac < 0.0 || cfg.test_frac < 0.0 || cfg.val_frac + cfg.test_frac >= 1.0)
    throw ValidationError("generator: val_frac + test_frac must stay below 1");
}

void validate(const AugmentationConfig& cfg) {
  if (cfg.shift_min_ms > cfg.shift_max_ms)
    throw ValidationError("augment: shift range min > max");
  if (cfg.gain_min_db > cfg.gain_max_db) throw ValidationError("augment: gain range min > max");
  if (cfg.snr_min_db > cfg.snr_max_db) throw ValidationError("augment: snr range min > max");
  if (cfg.synonym_prob < 0.0 || cfg.synonym_prob > 1.0)
    throw ValidationError("augment: synonym_prob must be in [0,1]");
}

SynthUtterance synth_utterance(Label label, const GeneratorConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  SynthUtterance out;

  out.speaker = rng.below(cfg.speakers);
  const auto [f_lo, f_hi] = cfg.pitch_ranges[static_cast<std::size_t>(out.speaker)];
  const double f0 = rng.uniform(f_lo, f_hi);
  const double duration =
      std::clamp(rng.normal(cfg.duration_mean, cfg.duration_sd), cfg.duration_min,
                 cfg.duration_max);

  // Contour noise: a linear drift tilting the whole contour and a random
  // extra dip. Both scale with cfg.noise; at 0 the contour is exactly the
  // class template.
  const double drift = rng.normal(0.0, 0.13) * cfg.noise;
  const double dip_depth = std::abs(rng.normal(0.0, 0.06)) * cfg.noise;
  const double dip_center = rng.uniform(0.3, 0.7);

  const std::size_t n = static_cast<std::size_t>(
      std::lrint(duration * static_cast<double>(cfg.sample_rate)));
  out.audio.sample_rate = cfg.sample_rate;
  out.audio.samples.resize(n);

  static constexpr double kHarmonics[4] = {1.0, 0.5, 0.25, 0.125};
  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n - 1);
    const double mult =
        contour(label, t) + drift * (t - 0.5) - dip_depth * bump(t, dip_center, 0.1);
    phase += kTwoPi * f0 * mult / static_cast<double>(cfg.sample_rate);
    double s = 0.0;
    for (int h = 0; h < 4; ++h) s += kHarmonics[h] * std::sin(static_cast<double>(h + 1) * phase);
    const double t_sec = t * duration;
    const double env = std::min({1.0, t_sec / 0.05, (duration - t_sec) / 0.05});
    out.audio.samples[i] = s * std::max(env, 0.0);
  }

  if (cfg.noise > 0.0) {
    double sq = 0.0;
    for (double s : out.audio.samples) sq += s * s;
    const double rms = std::sqrt(sq / static_cast<double>(n));
    const double snr_db = rng.uniform(10.0, 20.0);
    const double amp = rms * std::pow(10.0, -snr_db / 20.0) * cfg.noise;
    for (double& s : out.audio.samples) s += rng.normal() * amp;
  }

  double peak = 0.0;
  for (double s : out.audio.samples) peak = std::max(peak, std::abs(s));
  if (peak > 0.0) {
    const double norm = 0.95 / peak;
    for (double& s : out.audio.samples) s *= norm;
  }

  const std::size_t len = 5 + static_cast<std::size_t>(rng.below(3));
  out.bengali.lang = TokenSequence::Lang::kBengali;
  out.bengali.tokens = draw_bengali(label, len, rng);

  out.english.lang = TokenSequence::Lang::kEnglish;
  out.english.tokens.resize(len);
  std::size_t marker = marker_for(label);
  if (cfg.marker_noise > 0.0 && rng.uniform() < cfg.marker_noise) {
    const std::size_t wrong[2] = {marker == 1 ? 2u : 1u, marker == 3 ? 2u : 3u};
    marker = wrong[rng.below(2)];
  }
  out.english.tokens[0] = marker;
  for (std::size_t i = 1; i < len; ++i)
    out.english.tokens[i] = 4 + static_cast<std::size_t>(rng.below(60));

  return out;
}

Waveform augment_audio(const Waveform& w, const AugmentationConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  Rng rng(seed);
  Waveform out;
  out.sample_rate = w.sample_rate;
  const std::size_t n = w.samples.size();
  out.samples.resize(n);

  const double shift_ms = rng.uniform(cfg.shift_min_ms, cfg.shift_max_ms);
  const long shift = std::lrint(shift_ms * static_cast<double>(w.sample_rate) / 1000.0);
  for (std::size_t i = 0; i < n; ++i) {
    const long src = static_cast<long>(i) - shift;
    out.samples[i] = (src >= 0 && src < static_cast<long>(n))
                         ? w.samples[static_cast<std::size_t>(src)]
                         : 0.0;
  }

  const double gain_db = rng.uniform(cfg.gain_min_db, cfg.gain_max_db);
  const double gain = std::pow(10.0, gain_db / 20.0);
  for (double& s : out.samples) s *= gain;

  if (std::isfinite(cfg.snr_min_db) && std::isfinite(cfg.snr_max_db)) {
    double sq = 0.0;
    for (double s : out.samples) sq += s * s;
    const double rms = std::sqrt(sq / static_cast<double>(n));
    const double snr_db = rng.uniform(cfg.snr_min_db, cfg.snr_max_db);
    const double amp = rms * std::pow(10.0, -snr_db / 20.0);
    for (double& s : out.samples) s += rng.normal() * amp;
  }

  double peak = 0.0;
  for (double s : out.samples) peak = std::max(peak, std::abs(s));
  if (peak > 1.0) {
    const double norm = 1.0 / peak;
    for (double& s : out.samples) s *= norm;
  }
  return out;
}

TokenSequence augment_english(const TokenSequence& t, const AugmentationConfig& cfg,
                              std::uint64_t seed) {
  validate(cfg);
  if (t.lang != TokenSequence::Lang::kEnglish)
    throw ValidationError("augment: only English tokens may be augmented");
  Rng rng(seed);
  TokenSequence out = t;
  // Position 0 is the class marker and is never touched; content ids pair
  // even<->odd as synonyms.
  for (std::size_t i = 1; i < out.tokens.size(); ++i)
    if (out.tokens[i] >= 4 && rng.uniform() < cfg.synonym_prob) out.tokens[i] ^= 1;
  return out;
}

namespace {

void quantize_like_disk(Waveform& w) {
  for (double& s : w.samples) {
    const long q = std::lrint(s * 32768.0);
    s = static_cast<double>(std::clamp(q, -32768L, 32767L)) / 32768.0;
  }
}

}  // namespace

Dataset generate_dataset(const GeneratorConfig& cfg, const AugmentationConfig& aug,
                         const std::string& out_dir) {
  validate(cfg);
  validate(aug);

  struct ClassPlan {
    Label label;
    const char* prefix;
    std::size_t count;
  };
  const ClassPlan plan[3] = {{Label::kRequest, "req", cfg.count_request},
                             {Label::kQuestion, "que", cfg.count_question},
                             {Label::kOrder, "ord", cfg.count_order}};

  Dataset ds;
  ds.dir = out_dir;
  std::vector<std::size_t> request_idx, question_idx;
  std::size_t stream = 0;
  for (const auto& cls : plan) {
    // Stratified split: shuffle the class's record slots, peel off val/test.
    const std::size_t n_val = static_cast<std::size_t>(
        std::floor(cfg.val_frac * static_cast<double>(cls.count)));
    const std::size_t n_test = static_cast<std::size_t>(
        std::floor(cfg.test_frac * static_cast<double>(cls.count)));
    std::vector<Split> splits(cls.count, Split::kTrain);
    for (std::size_t i = 0; i < n_val; ++i) splits[i] = Split::kVal;
    for (std::size_t i = 0; i < n_test; ++i) splits[n_val + i] = Split::kTest;
    Rng split_rng(derive_seed(cfg.seed, 0x5911 + static_cast<std::uint64_t>(cls.label)));
    split_rng.shuffle(splits);

    for (std::size_t k = 0; k < cls.count; ++k) {
      SynthUtterance u = synth_utterance(cls.label, cfg, derive_seed(cfg.seed, stream++));
      UtteranceRecord r;
      char idx[24];
      std::snprintf(idx, sizeof(idx), "%03zu", k);
      r.id = std::string(cls.prefix) + "-" + idx;
      r.wav_path = "wav/" + r.id + ".wav";
      r.bengali = std::move(u.bengali);
      r.english = std::move(u.english);
      r.label = cls.label;
      r.speaker = u.speaker;
      r.split = splits[k];
      r.audio = std::move(u.audio);
      if (cls.label == Label::kRequest) request_idx.push_back(ds.records.size());
      if (cls.label == Label::kQuestion) question_idx.push_back(ds.records.size());
      ds.records.push_back(std::move(r));
    }
  }

  // The ambiguity share of Request records lends its exact Bengali tokens to
  // a paired Question record: identical Bengali, different intent.
  const std::size_t pairs = static_cast<std::size_t>(std::ceil(
      cfg.ambiguity * static_cast<double>(std::min(request_idx.size(), question_idx.size()))));
  for (std::size_t i = 0; i < pairs; ++i)
    ds.records[question_idx[i]].bengali.tokens = ds.records[request_idx[i]].bengali.tokens;

  if (aug.copies > 0) {
    std::vector<UtteranceRecord> expanded;
    expanded.reserve(ds.records.size() * (aug.copies + 1));
    for (std::size_t base = 0; base < ds.records.size(); ++base) {
      expanded.push_back(ds.records[base]);
      for (std::size_t k = 1; k <= aug.copies; ++k) {
        const std::uint64_t aseed = derive_seed(cfg.seed, 100000 + base * 64 + k);
        UtteranceRecord copy = ds.records[base];
        copy.id += "-a" + std::to_string(k);
        copy.wav_path = "wav/" + copy.id + ".wav";
        copy.audio = augment_audio(copy.audio, aug, aseed);
        copy.english = augment_english(copy.english, aug, aseed + 1);
        expanded.push_back(std::move(copy));
      }
    }
    ds.records = std::move(expanded);
  }

  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "wav", ec);
  if (ec) throw IoError(out_dir + ": cannot create output directory (" + ec.message() + ")");
  for (auto& r : ds.records) {
    write_wav(r.audio, (fs::path(out_dir) / r.wav_path).string());
    quantize_like_disk(r.audio);  // keep in-memory samples equal to a later read
  }
  write_manifest(ds, (fs::path(out_dir) / "manifest.tsv").string());
  return ds;
}

}  // namespace beats
