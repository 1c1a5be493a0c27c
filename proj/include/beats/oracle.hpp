#pragma once

#include "beats/dataset.hpp"
#include "beats/wav.hpp"

namespace beats {

// Rule-based reference classifiers, independent of the learned models. The
// audio rule tracks pitch by autocorrelation and fits the terminal slope of
// the contour; the text rule reads the English marker token; the bimodal rule
// trusts agreement, then a strongly rising contour, then the text.
struct AudioOracleResult {
  Label label;
  double terminal_slope;  // relative pitch change per unit utterance time
};

AudioOracleResult audio_oracle(const Waveform& w);
Label text_oracle(const TokenSequence& english);
Label bimodal_oracle(const Waveform& w, const TokenSequence& english);

}  // namespace beats
