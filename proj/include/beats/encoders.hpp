#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "beats/dataset.hpp"
#include "beats/ops.hpp"
#include "beats/rng.hpp"
#include "beats/tensor.hpp"
#include "beats/wav.hpp"

namespace beats {

// Toy-scale encoder settings. The audio path runs strided convolutions (each
// followed by GELU and layer norm) straight on the raw waveform, then
// transformer blocks; the text path runs embedding + sinusoidal positions,
// then transformer blocks. Defaults give T = 51 frames for a 1.3 s clip.
struct EncoderConfig {
  std::size_t d = 32;
  std::size_t blocks = 2;
  std::size_t heads = 4;
  std::size_t ff = 64;
  std::vector<std::size_t> conv_kernels = {28, 8, 5};
  std::vector<std::size_t> conv_strides = {28, 8, 5};
  std::vector<std::size_t> conv_channels = {8, 16, 32};  // last one must equal d
  std::size_t vocab = kVocabSize;
  double dropout = 0.0;
};

void validate(const EncoderConfig& cfg);

// Optional forward-pass context: training enables dropout (fed by rng);
// attn_sink, when set, receives every attention weight matrix for inspection.
struct ForwardCtx {
  bool training = false;
  double dropout = 0.0;
  Rng* rng = nullptr;
  std::vector<Tensor>* attn_sink = nullptr;
};

struct Encoded {
  Tensor seq;     // T x d
  Tensor pooled;  // 1 x d, mean over frames
};

// One post-norm transformer block: multi-head self-attention with residual +
// layer norm, then a GELU feed-forward sublayer with residual + layer norm.
// No key bias: softmax is invariant to row shifts, so a key bias is a dead
// parameter with exactly zero gradient.
struct BlockParams {
  Tensor wq, wk, wv, wo;  // d x d
  Tensor bq, bv, bo;      // 1 x d
  Tensor ln1_g, ln1_b;    // 1 x d
  Tensor w1;              // d x ff
  Tensor b1;              // 1 x ff
  Tensor w2;              // ff x d
  Tensor b2;              // 1 x d
  Tensor ln2_g, ln2_b;    // 1 x d
};

// Attention-only sublayer used across modalities: queries from one sequence,
// keys/values from the other, residual from the query side, layer norm.
struct CrossAttentionParams {
  Tensor wq, wk, wv, wo;
  Tensor bq, bv, bo;
  Tensor ln_g, ln_b;
};

struct ConvLayerParams {
  Tensor w;  // (kernel * in_channels) x out_channels
  Tensor b;  // 1 x out_channels
  Tensor ln_g, ln_b;
};

struct AudioEncoderParams {
  std::vector<ConvLayerParams> conv;
  std::vector<BlockParams> blocks;
};

struct TextEncoderParams {
  Tensor embedding;  // vocab x d
  std::vector<BlockParams> blocks;
};

BlockParams make_block_params(std::size_t d, std::size_t ff, Rng& rng);
CrossAttentionParams make_cross_attention_params(std::size_t d, Rng& rng);
AudioEncoderParams make_audio_encoder_params(const EncoderConfig& cfg, Rng& rng);
TextEncoderParams make_text_encoder_params(const EncoderConfig& cfg, Rng& rng);

Tensor multi_head_attention(const Tensor& queries, const Tensor& keys_values, const Tensor& wq,
                            const Tensor& bq, const Tensor& wk, const Tensor& wv,
                            const Tensor& bv, const Tensor& wo, const Tensor& bo,
                            std::size_t heads, ForwardCtx* ctx);

Tensor self_attention_block(const Tensor& x, const BlockParams& p, std::size_t heads,
                            ForwardCtx* ctx = nullptr);
Tensor cross_attention(const Tensor& queries, const Tensor& keys_values,
                       const CrossAttentionParams& p, std::size_t heads,
                       ForwardCtx* ctx = nullptr);

// Strided conv stack over the raw waveform; errors if the waveform is shorter
// than min_audio_samples(cfg).
Tensor conv_positional_encode(const Waveform& w, const EncoderConfig& cfg,
                              const AudioEncoderParams& p);
std::size_t min_audio_samples(const EncoderConfig& cfg);

Encoded encode_audio(const Waveform& w, const EncoderConfig& cfg, const AudioEncoderParams& p,
                     ForwardCtx* ctx = nullptr);
Encoded encode_text(const TokenSequence& t, const EncoderConfig& cfg,
                    const TextEncoderParams& p, ForwardCtx* ctx = nullptr);

// Visits every trainable tensor under a stable dotted name; the optimizer and
// the parameter file format both build on this ordering.
using ParamVisitor = std::function<void(const std::string&, Tensor&)>;
void visit_params(BlockParams& p, const std::string& prefix, const ParamVisitor& fn);
void visit_params(CrossAttentionParams& p, const std::string& prefix, const ParamVisitor& fn);
void visit_params(AudioEncoderParams& p, const std::string& prefix, const ParamVisitor& fn);
void visit_params(TextEncoderParams& p, const std::string& prefix, const ParamVisitor& fn);

}  // namespace beats
