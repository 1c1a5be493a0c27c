#include "beats/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "beats/errors.hpp"

namespace beats {

namespace {

// Slope thresholds on the relative terminal pitch trend. A clean Question
// contour measures about +0.79 over the last third, a clean Order -0.15 and a
// clean Request about +0.02, so the gaps absorb the generator's drift noise.
constexpr double kQuestionSlope = 0.20;
constexpr double kOrderSlope = -0.07;
constexpr double kStrongRise = 0.35;  // disagreement override in the bimodal rule

constexpr std::size_t kDecimate = 4;
constexpr std::size_t kFrame = 1024;
constexpr std::size_t kHop = 256;

struct PitchPoint {
  double t;  // relative position in [0, 1]
  double hz;
};

std::vector<PitchPoint> pitch_track(const Waveform& w) {
  std::vector<double> x;
  x.reserve(w.samples.size() / kDecimate + 1);
  for (std::size_t i = 0; i < w.samples.size(); i += kDecimate) x.push_back(w.samples[i]);
  const double sr = static_cast<double>(w.sample_rate) / static_cast<double>(kDecimate);

  std::vector<PitchPoint> track;
  if (x.size() < kFrame) return track;
  const std::size_t lag_min = static_cast<std::size_t>(sr / 300.0);
  const std::size_t lag_max = static_cast<std::size_t>(sr / 70.0);

  for (std::size_t start = 0; start + kFrame <= x.size(); start += kHop) {
    const double* f = x.data() + start;
    double r0 = 0.0;
    for (std::size_t i = 0; i < kFrame; ++i) r0 += f[i] * f[i];
    if (r0 <= 1e-9) continue;

    std::size_t best = 0;
    double best_r = 0.0;
    std::vector<double> r(lag_max + 2, 0.0);
    for (std::size_t lag = lag_min; lag <= lag_max + 1; ++lag) {
      double acc = 0.0;
      for (std::size_t i = 0; i + lag < kFrame; ++i) acc += f[i] * f[i + lag];
      r[lag] = acc;
      if (lag <= lag_max && acc > best_r) {
        best_r = acc;
        best = lag;
      }
    }
    if (best <= lag_min || best_r / r0 < 0.25) continue;  // unvoiced / unreliable

    // Parabolic refinement around the peak lag.
    const double rm = r[best - 1], rc = r[best], rp = r[best + 1];
    const double denom = rm - 2.0 * rc + rp;
    double delta = 0.0;
    if (std::abs(denom) > 1e-12) delta = std::clamp(0.5 * (rm - rp) / denom, -0.5, 0.5);
    const double period = static_cast<double>(best) + delta;
    const double hz = sr / period;
    if (hz < 60.0 || hz > 320.0) continue;

    const double center = static_cast<double>(start) + static_cast<double>(kFrame) / 2.0;
    track.push_back({center / static_cast<double>(x.size()), hz});
  }
  return track;
}

}  // namespace

AudioOracleResult audio_oracle(const Waveform& w) {
  const auto track = pitch_track(w);
  if (track.size() < 8) return {Label::kRequest, 0.0};

  double mean = 0.0;
  for (const auto& p : track) mean += p.hz;
  mean /= static_cast<double>(track.size());

  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  std::size_t n = 0;
  for (const auto& p : track) {
    if (p.t < 0.7) continue;
    const double y = p.hz / mean;
    st += p.t;
    sy += y;
    stt += p.t * p.t;
    sty += p.t * y;
    ++n;
  }
  if (n < 4) return {Label::kRequest, 0.0};
  const double dn = static_cast<double>(n);
  const double denom = stt - st * st / dn;
  const double slope = denom > 1e-12 ? (sty - st * sy / dn) / denom : 0.0;

  Label label = Label::kRequest;
  if (slope > kQuestionSlope)
    label = Label::kQuestion;
  else if (slope < kOrderSlope)
    label = Label::kOrder;
  return {label, slope};
}

Label text_oracle(const TokenSequence& english) {
  if (english.lang != TokenSequence::Lang::kEnglish)
    throw ValidationError("text oracle: expected English tokens");
  if (english.tokens.empty()) throw ValidationError("text oracle: empty token sequence");
  switch (english.tokens[0]) {
    case kMarkerRequest:
      return Label::kRequest;
    case kMarkerQuestion:
      return Label::kQuestion;
    case kMarkerOrder:
      return Label::kOrder;
    default:
      throw ValidationError("text oracle: first token " + std::to_string(english.tokens[0]) +
                            " is not a class marker");
  }
}

Label bimodal_oracle(const Waveform& w, const TokenSequence& english) {
  const AudioOracleResult audio = audio_oracle(w);
  const Label text = text_oracle(english);
  if (audio.label == text) return text;
  if (audio.terminal_slope > kStrongRise) return Label::kQuestion;
  return text;
}

}  // namespace beats
