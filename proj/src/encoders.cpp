#include "beats/encoders.hpp"

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "beats/errors.hpp"

namespace beats {
namespace {

using ops::add;
using ops::add_rowvec;
using ops::concat_cols;
using ops::frame_stack;
using ops::gather_rows;
using ops::gelu;
using ops::layer_norm;
using ops::matmul;
using ops::mean_over_rows;
using ops::scale;
using ops::slice_cols;
using ops::softmax_rows;

Tensor init_weight(std::size_t rows, std::size_t cols, Rng& rng) {
  std::vector<double> v(rows * cols);
  double sd = 1.0 / std::sqrt(static_cast<double>(rows));
  for (double& x : v) x = rng.normal(0.0, sd);
  return Tensor(rows, cols, std::move(v), true);
}

Tensor init_zeros(std::size_t cols) { return Tensor::zeros(1, cols, true); }
Tensor init_ones(std::size_t cols) { return Tensor::full(1, cols, 1.0, true); }

Tensor maybe_dropout(const Tensor& x, ForwardCtx* ctx) {
  if (ctx == nullptr || !ctx->training || ctx->dropout == 0.0) return x;
  if (ctx->rng == nullptr) throw ValidationError("dropout requested without an rng");
  return ops::dropout(x, ctx->dropout, *ctx->rng, true);
}

}  // namespace

void validate(const EncoderConfig& cfg) {
  if (cfg.d == 0) throw ValidationError("encoder width must be positive");
  if (cfg.heads == 0) throw ValidationError("encoder needs at least one head");
  if (cfg.d % cfg.heads != 0)
    throw ValidationError("width " + std::to_string(cfg.d) + " not divisible by " +
                          std::to_string(cfg.heads) + " heads");
  if (cfg.ff == 0) throw ValidationError("feed-forward width must be positive");
  if (cfg.conv_kernels.empty()) throw ValidationError("conv stack needs at least one layer");
  if (cfg.conv_strides.size() != cfg.conv_kernels.size() ||
      cfg.conv_channels.size() != cfg.conv_kernels.size())
    throw ValidationError("conv kernels, strides and channels must have equal length");
  for (std::size_t i = 0; i < cfg.conv_kernels.size(); ++i) {
    if (cfg.conv_kernels[i] == 0) throw ValidationError("conv kernel must be positive");
    if (cfg.conv_strides[i] == 0) throw ValidationError("conv stride must be positive");
    if (cfg.conv_channels[i] == 0) throw ValidationError("conv channels must be positive");
  }
  if (cfg.conv_channels.back() != cfg.d)
    throw ValidationError("last conv layer must emit the encoder width (got " +
                          std::to_string(cfg.conv_channels.back()) + ", want " +
                          std::to_string(cfg.d) + ")");
  if (cfg.vocab == 0) throw ValidationError("vocab size must be positive");
  if (cfg.dropout < 0.0 || cfg.dropout >= 1.0)
    throw ValidationError("dropout must lie in [0, 1)");
}

BlockParams make_block_params(std::size_t d, std::size_t ff, Rng& rng) {
  BlockParams p;
  p.wq = init_weight(d, d, rng);
  p.wk = init_weight(d, d, rng);
  p.wv = init_weight(d, d, rng);
  p.wo = init_weight(d, d, rng);
  p.bq = init_zeros(d);
  p.bv = init_zeros(d);
  p.bo = init_zeros(d);
  p.ln1_g = init_ones(d);
  p.ln1_b = init_zeros(d);
  p.w1 = init_weight(d, ff, rng);
  p.b1 = init_zeros(ff);
  p.w2 = init_weight(ff, d, rng);
  p.b2 = init_zeros(d);
  p.ln2_g = init_ones(d);
  p.ln2_b = init_zeros(d);
  return p;
}

CrossAttentionParams make_cross_attention_params(std::size_t d, Rng& rng) {
  CrossAttentionParams p;
  p.wq = init_weight(d, d, rng);
  p.wk = init_weight(d, d, rng);
  p.wv = init_weight(d, d, rng);
  p.wo = init_weight(d, d, rng);
  p.bq = init_zeros(d);
  p.bv = init_zeros(d);
  p.bo = init_zeros(d);
  p.ln_g = init_ones(d);
  p.ln_b = init_zeros(d);
  return p;
}

AudioEncoderParams make_audio_encoder_params(const EncoderConfig& cfg, Rng& rng) {
  validate(cfg);
  AudioEncoderParams p;
  std::size_t in_ch = 1;
  for (std::size_t i = 0; i < cfg.conv_kernels.size(); ++i) {
    ConvLayerParams layer;
    layer.w = init_weight(cfg.conv_kernels[i] * in_ch, cfg.conv_channels[i], rng);
    layer.b = init_zeros(cfg.conv_channels[i]);
    layer.ln_g = init_ones(cfg.conv_channels[i]);
    layer.ln_b = init_zeros(cfg.conv_channels[i]);
    p.conv.push_back(layer);
    in_ch = cfg.conv_channels[i];
  }
  for (std::size_t i = 0; i < cfg.blocks; ++i)
    p.blocks.push_back(make_block_params(cfg.d, cfg.ff, rng));
  return p;
}

TextEncoderParams make_text_encoder_params(const EncoderConfig& cfg, Rng& rng) {
  validate(cfg);
  TextEncoderParams p;
  p.embedding = init_weight(cfg.vocab, cfg.d, rng);
  for (std::size_t i = 0; i < cfg.blocks; ++i)
    p.blocks.push_back(make_block_params(cfg.d, cfg.ff, rng));
  return p;
}

Tensor multi_head_attention(const Tensor& queries, const Tensor& keys_values, const Tensor& wq,
                            const Tensor& bq, const Tensor& wk, const Tensor& wv,
                            const Tensor& bv, const Tensor& wo, const Tensor& bo,
                            std::size_t heads, ForwardCtx* ctx) {
  std::size_t d = wq.cols();
  if (heads == 0 || d % heads != 0)
    throw ValidationError("attention width " + std::to_string(d) + " not divisible by " +
                          std::to_string(heads) + " heads");
  std::size_t dh = d / heads;
  Tensor q = add_rowvec(matmul(queries, wq), bq);
  Tensor k = matmul(keys_values, wk);
  Tensor v = add_rowvec(matmul(keys_values, wv), bv);
  std::vector<Tensor> head_out;
  head_out.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    Tensor qh = slice_cols(q, h * dh, (h + 1) * dh);
    Tensor kh = slice_cols(k, h * dh, (h + 1) * dh);
    Tensor vh = slice_cols(v, h * dh, (h + 1) * dh);
    Tensor scores = scale(matmul(qh, ops::transpose(kh)), 1.0 / std::sqrt(static_cast<double>(dh)));
    Tensor attn = softmax_rows(scores);
    if (ctx != nullptr && ctx->attn_sink != nullptr) ctx->attn_sink->push_back(attn);
    head_out.push_back(matmul(attn, vh));
  }
  Tensor merged = heads == 1 ? head_out[0] : concat_cols(head_out);
  return maybe_dropout(add_rowvec(matmul(merged, wo), bo), ctx);
}

Tensor self_attention_block(const Tensor& x, const BlockParams& p, std::size_t heads,
                            ForwardCtx* ctx) {
  Tensor a =
      multi_head_attention(x, x, p.wq, p.bq, p.wk, p.wv, p.bv, p.wo, p.bo, heads, ctx);
  Tensor y = layer_norm(add(x, a), p.ln1_g, p.ln1_b);
  Tensor hidden = gelu(add_rowvec(matmul(y, p.w1), p.b1));
  Tensor f = maybe_dropout(add_rowvec(matmul(hidden, p.w2), p.b2), ctx);
  return layer_norm(add(y, f), p.ln2_g, p.ln2_b);
}

Tensor cross_attention(const Tensor& queries, const Tensor& keys_values,
                       const CrossAttentionParams& p, std::size_t heads, ForwardCtx* ctx) {
  Tensor a = multi_head_attention(queries, keys_values, p.wq, p.bq, p.wk, p.wv, p.bv, p.wo, p.bo,
                                  heads, ctx);
  return layer_norm(add(queries, a), p.ln_g, p.ln_b);
}

std::size_t min_audio_samples(const EncoderConfig& cfg) {
  std::size_t need = 1;
  for (std::size_t i = cfg.conv_kernels.size(); i-- > 0;)
    need = (need - 1) * cfg.conv_strides[i] + cfg.conv_kernels[i];
  return need;
}

Tensor conv_positional_encode(const Waveform& w, const EncoderConfig& cfg,
                              const AudioEncoderParams& p) {
  std::size_t min_len = min_audio_samples(cfg);
  if (w.samples.size() < min_len)
    throw DimError("waveform too short: " + std::to_string(w.samples.size()) +
                   " samples, conv stack needs at least " + std::to_string(min_len));
  if (p.conv.size() != cfg.conv_kernels.size())
    throw ValidationError("conv parameter count does not match the config");
  Tensor x(w.samples.size(), 1, w.samples);
  for (std::size_t i = 0; i < p.conv.size(); ++i) {
    Tensor frames = frame_stack(x, cfg.conv_kernels[i], cfg.conv_strides[i]);
    Tensor h = gelu(add_rowvec(matmul(frames, p.conv[i].w), p.conv[i].b));
    x = layer_norm(h, p.conv[i].ln_g, p.conv[i].ln_b);
  }
  return x;
}

Encoded encode_audio(const Waveform& w, const EncoderConfig& cfg, const AudioEncoderParams& p,
                     ForwardCtx* ctx) {
  Tensor x = conv_positional_encode(w, cfg, p);
  for (const BlockParams& block : p.blocks) x = self_attention_block(x, block, cfg.heads, ctx);
  return Encoded{x, mean_over_rows(x)};
}

Encoded encode_text(const TokenSequence& t, const EncoderConfig& cfg, const TextEncoderParams& p,
                    ForwardCtx* ctx) {
  if (t.tokens.empty()) throw ValidationError("text encoder needs at least one token");
  Tensor x = gather_rows(p.embedding, t.tokens);
  std::size_t len = t.tokens.size();
  std::size_t d = cfg.d;
  std::vector<double> pos(len * d);
  for (std::size_t i = 0; i < len; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      double omega = std::pow(10000.0, -(2.0 * static_cast<double>(j / 2)) / static_cast<double>(d));
      double angle = static_cast<double>(i) * omega;
      pos[i * d + j] = (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  x = add(x, Tensor(len, d, std::move(pos)));
  for (const BlockParams& block : p.blocks) x = self_attention_block(x, block, cfg.heads, ctx);
  return Encoded{x, mean_over_rows(x)};
}

void visit_params(BlockParams& p, const std::string& prefix, const ParamVisitor& fn) {
  fn(prefix + ".wq", p.wq);
  fn(prefix + ".bq", p.bq);
  fn(prefix + ".wk", p.wk);
  fn(prefix + ".wv", p.wv);
  fn(prefix + ".bv", p.bv);
  fn(prefix + ".wo", p.wo);
  fn(prefix + ".bo", p.bo);
  fn(prefix + ".ln1_g", p.ln1_g);
  fn(prefix + ".ln1_b", p.ln1_b);
  fn(prefix + ".w1", p.w1);
  fn(prefix + ".b1", p.b1);
  fn(prefix + ".w2", p.w2);
  fn(prefix + ".b2", p.b2);
  fn(prefix + ".ln2_g", p.ln2_g);
  fn(prefix + ".ln2_b", p.ln2_b);
}

void visit_params(CrossAttentionParams& p, const std::string& prefix, const ParamVisitor& fn) {
  fn(prefix + ".wq", p.wq);
  fn(prefix + ".bq", p.bq);
  fn(prefix + ".wk", p.wk);
  fn(prefix + ".wv", p.wv);
  fn(prefix + ".bv", p.bv);
  fn(prefix + ".wo", p.wo);
  fn(prefix + ".bo", p.bo);
  fn(prefix + ".ln_g", p.ln_g);
  fn(prefix + ".ln_b", p.ln_b);
}

void visit_params(AudioEncoderParams& p, const std::string& prefix, const ParamVisitor& fn) {
  for (std::size_t i = 0; i < p.conv.size(); ++i) {
    std::string base = prefix + ".conv" + std::to_string(i);
    fn(base + ".w", p.conv[i].w);
    fn(base + ".b", p.conv[i].b);
    fn(base + ".ln_g", p.conv[i].ln_g);
    fn(base + ".ln_b", p.conv[i].ln_b);
  }
  for (std::size_t i = 0; i < p.blocks.size(); ++i)
    visit_params(p.blocks[i], prefix + ".block" + std::to_string(i), fn);
}

void visit_params(TextEncoderParams& p, const std::string& prefix, const ParamVisitor& fn) {
  fn(prefix + ".embedding", p.embedding);
  for (std::size_t i = 0; i < p.blocks.size(); ++i)
    visit_params(p.blocks[i], prefix + ".block" + std::to_string(i), fn);
}

}  // namespace beats
