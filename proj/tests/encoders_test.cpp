#include <doctest.h>

#include <cmath>
#include <cstring>
#include <set>
#include <string>
#include <vector>

#include "beats/encoders.hpp"
#include "beats/errors.hpp"
#include "beats/generator.hpp"
#include "beats/grad_check.hpp"
#include "beats/ops.hpp"
#include "beats/rng.hpp"
#include "beats/tensor.hpp"
#include "test_oracles.hpp"

using namespace beats;

namespace {

EncoderConfig tiny_cfg() {
  EncoderConfig cfg;
  cfg.d = 4;
  cfg.blocks = 1;
  cfg.heads = 2;
  cfg.ff = 4;
  cfg.conv_kernels = {4, 3};
  cfg.conv_strides = {4, 3};
  cfg.conv_channels = {2, 4};
  cfg.vocab = 8;
  return cfg;
}

Tensor random_tensor(std::size_t rows, std::size_t cols, Rng& rng, bool requires_grad = false) {
  std::vector<double> v(rows * cols);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return Tensor(rows, cols, std::move(v), requires_grad);
}

void fill_zero(Tensor t) { std::fill(t.data(), t.data() + t.size(), 0.0); }


}  // namespace

TEST_CASE("encoder config validation") {
  EncoderConfig cfg = tiny_cfg();
  CHECK_NOTHROW(validate(cfg));

  EncoderConfig bad = cfg;
  bad.heads = 3;
  CHECK_THROWS_AS(validate(bad), ValidationError);

  bad = cfg;
  bad.conv_channels.back() = 5;
  CHECK_THROWS_AS(validate(bad), ValidationError);

  bad = cfg;
  bad.conv_strides = {4};
  CHECK_THROWS_AS(validate(bad), ValidationError);

  bad = cfg;
  bad.conv_strides[0] = 0;
  CHECK_THROWS_AS(validate(bad), ValidationError);

  bad = cfg;
  bad.dropout = 1.0;
  CHECK_THROWS_AS(validate(bad), ValidationError);

  bad = cfg;
  bad.vocab = 0;
  CHECK_THROWS_AS(validate(bad), ValidationError);
}

TEST_CASE("a single position attends fully to itself") {
  Rng rng(11);
  EncoderConfig cfg = tiny_cfg();
  BlockParams p = make_block_params(cfg.d, cfg.ff, rng);
  Tensor x = random_tensor(1, cfg.d, rng);
  std::vector<Tensor> sink;
  ForwardCtx ctx;
  ctx.attn_sink = &sink;
  self_attention_block(x, p, cfg.heads, &ctx);
  REQUIRE(sink.size() == cfg.heads);
  for (const Tensor& a : sink) {
    CHECK(a.rows() == 1);
    CHECK(a.cols() == 1);
    CHECK(a.at(0, 0) == 1.0);
  }
}

TEST_CASE("zero query projection gives uniform attention") {
  Rng rng(12);
  EncoderConfig cfg = tiny_cfg();
  BlockParams p = make_block_params(cfg.d, cfg.ff, rng);
  fill_zero(p.wq);
  fill_zero(p.bq);
  const std::size_t t = 5;
  Tensor x = random_tensor(t, cfg.d, rng);
  std::vector<Tensor> sink;
  ForwardCtx ctx;
  ctx.attn_sink = &sink;
  self_attention_block(x, p, cfg.heads, &ctx);
  REQUIRE(sink.size() == cfg.heads);
  for (const Tensor& a : sink)
    for (std::size_t i = 0; i < t; ++i)
      for (std::size_t j = 0; j < t; ++j)
        CHECK(std::abs(a.at(i, j) - 1.0 / t) < 1e-15);
}

TEST_CASE("attention rows sum to one") {
  Rng rng(13);
  EncoderConfig cfg = tiny_cfg();
  cfg.d = 8;
  cfg.heads = 2;
  cfg.conv_channels = {2, 8};
  std::vector<BlockParams> blocks;
  for (int i = 0; i < 2; ++i) blocks.push_back(make_block_params(cfg.d, cfg.ff, rng));
  Tensor x = random_tensor(6, cfg.d, rng);
  std::vector<Tensor> sink;
  ForwardCtx ctx;
  ctx.attn_sink = &sink;
  for (const BlockParams& b : blocks) x = self_attention_block(x, b, cfg.heads, &ctx);
  REQUIRE(sink.size() == 4);
  for (const Tensor& a : sink)
    for (std::size_t i = 0; i < a.rows(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < a.cols(); ++j) s += a.at(i, j);
      CHECK(std::abs(s - 1.0) < 1e-9);
    }
}

TEST_CASE("multi-head attention matches a loop oracle") {
  Rng rng(14);
  const std::size_t d = 8, heads = 2, t = 4;
  BlockParams p = make_block_params(d, 8, rng);
  Tensor x = random_tensor(t, d, rng);
  Tensor got =
      multi_head_attention(x, x, p.wq, p.bq, p.wk, p.wv, p.bv, p.wo, p.bo, heads, nullptr);
  std::vector<double> want = test_oracles::mha(x, x, p, heads);
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i)
    CHECK(std::abs(got.data()[i] - want[i]) < 1e-12);
}

TEST_CASE("attention block matches a loop oracle") {
  Rng rng(15);
  const std::size_t d = 8, heads = 2, t = 4, ff = 6;
  BlockParams p = make_block_params(d, ff, rng);
  Tensor x = random_tensor(t, d, rng);
  Tensor got = self_attention_block(x, p, heads);

  std::vector<double> y = test_oracles::mha(x, x, p, heads);
  for (std::size_t i = 0; i < t * d; ++i) y[i] += x.data()[i];
  test_oracles::ln_rows(y, t, d, p.ln1_g, p.ln1_b);
  std::vector<double> hidden(t * ff, 0.0);
  for (std::size_t r = 0; r < t; ++r)
    for (std::size_t c = 0; c < ff; ++c) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += y[r * d + k] * p.w1.at(k, c);
      hidden[r * ff + c] = test_oracles::gelu(s + p.b1.at(0, c));
    }
  std::vector<double> z(t * d, 0.0);
  for (std::size_t r = 0; r < t; ++r)
    for (std::size_t c = 0; c < d; ++c) {
      double s = 0.0;
      for (std::size_t k = 0; k < ff; ++k) s += hidden[r * ff + k] * p.w2.at(k, c);
      z[r * d + c] = y[r * d + c] + s + p.b2.at(0, c);
    }
  test_oracles::ln_rows(z, t, d, p.ln2_g, p.ln2_b);

  REQUIRE(got.size() == z.size());
  for (std::size_t i = 0; i < z.size(); ++i) CHECK(std::abs(got.data()[i] - z[i]) < 1e-12);
}

TEST_CASE("block output rows are standardized at init") {
  Rng rng(16);
  EncoderConfig cfg = tiny_cfg();
  BlockParams p = make_block_params(cfg.d, cfg.ff, rng);
  Tensor x = random_tensor(5, cfg.d, rng);
  Tensor z = self_attention_block(x, p, cfg.heads);
  for (std::size_t r = 0; r < z.rows(); ++r) {
    double mean = 0.0, var = 0.0;
    for (std::size_t c = 0; c < z.cols(); ++c) mean += z.at(r, c);
    mean /= static_cast<double>(z.cols());
    for (std::size_t c = 0; c < z.cols(); ++c) {
      double dlt = z.at(r, c) - mean;
      var += dlt * dlt;
    }
    var /= static_cast<double>(z.cols());
    CHECK(std::abs(mean) < 1e-9);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("conv stack frame math") {
  EncoderConfig cfg;  // defaults
  CHECK(min_audio_samples(cfg) == 1120);
  Rng rng(17);
  AudioEncoderParams p = make_audio_encoder_params(cfg, rng);
  Waveform w;
  w.samples.resize(57330);
  for (double& s : w.samples) s = rng.uniform(-0.5, 0.5);
  Tensor feats = conv_positional_encode(w, cfg, p);
  CHECK(feats.rows() == 51);
  CHECK(feats.cols() == 32);

  EncoderConfig wide;
  wide.conv_kernels = {10, 8, 4};
  wide.conv_strides = {5, 4, 2};
  CHECK(min_audio_samples(wide) == 105);
  AudioEncoderParams pw = make_audio_encoder_params(wide, rng);
  Tensor fw = conv_positional_encode(w, wide, pw);
  CHECK(fw.rows() == 1431);
  CHECK(fw.cols() == 32);
}

TEST_CASE("waveform shorter than the conv stack is rejected") {
  EncoderConfig cfg;
  Rng rng(18);
  AudioEncoderParams p = make_audio_encoder_params(cfg, rng);
  Waveform w;
  w.samples.resize(1119, 0.1);
  CHECK_THROWS_WITH_AS(conv_positional_encode(w, cfg, p), doctest::Contains("1120"), DimError);
}

TEST_CASE("zero conv weights give all-zero features") {
  EncoderConfig cfg = tiny_cfg();
  Rng rng(19);
  AudioEncoderParams p = make_audio_encoder_params(cfg, rng);
  for (ConvLayerParams& layer : p.conv) {
    fill_zero(layer.w);
    fill_zero(layer.b);
    fill_zero(layer.ln_b);
  }
  Waveform w;
  w.samples.resize(40, 0.3);
  Tensor feats = conv_positional_encode(w, cfg, p);
  for (std::size_t i = 0; i < feats.size(); ++i) CHECK(feats.data()[i] == 0.0);
}

TEST_CASE("audio encoding is deterministic given a seed") {
  EncoderConfig cfg = tiny_cfg();
  Rng rng_a(20), rng_b(20);
  AudioEncoderParams pa = make_audio_encoder_params(cfg, rng_a);
  AudioEncoderParams pb = make_audio_encoder_params(cfg, rng_b);
  Waveform w;
  Rng wave_rng(21);
  w.samples.resize(64);
  for (double& s : w.samples) s = wave_rng.uniform(-0.5, 0.5);
  Encoded a1 = encode_audio(w, cfg, pa);
  Encoded a2 = encode_audio(w, cfg, pa);
  Encoded b = encode_audio(w, cfg, pb);
  CHECK(a1.pooled.impl()->data == a2.pooled.impl()->data);
  CHECK(a1.pooled.impl()->data == b.pooled.impl()->data);
  CHECK(a1.seq.impl()->data == b.seq.impl()->data);
}

TEST_CASE("pooled latent is the mean over frames") {
  EncoderConfig cfg = tiny_cfg();
  Rng rng(22);
  AudioEncoderParams p = make_audio_encoder_params(cfg, rng);
  Waveform w;
  w.samples.resize(52);
  for (double& s : w.samples) s = rng.uniform(-0.5, 0.5);
  Encoded e = encode_audio(w, cfg, p);
  REQUIRE(e.pooled.rows() == 1);
  REQUIRE(e.pooled.cols() == cfg.d);
  for (std::size_t c = 0; c < cfg.d; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < e.seq.rows(); ++r) mean += e.seq.at(r, c);
    mean /= static_cast<double>(e.seq.rows());
    CHECK(e.pooled.at(0, c) == doctest::Approx(mean).epsilon(1e-12));
  }
}

TEST_CASE("rising and falling contours produce distinct latents") {
  GeneratorConfig gen;
  SynthUtterance question = synth_utterance(Label::kQuestion, gen, 77);
  SynthUtterance order = synth_utterance(Label::kOrder, gen, 77);
  EncoderConfig cfg;
  Rng rng(23);
  AudioEncoderParams p = make_audio_encoder_params(cfg, rng);
  Encoded eq = encode_audio(question.audio, cfg, p);
  Encoded eo = encode_audio(order.audio, cfg, p);
  double dist = 0.0;
  for (std::size_t c = 0; c < cfg.d; ++c) {
    double dlt = eq.pooled.at(0, c) - eo.pooled.at(0, c);
    dist += dlt * dlt;
  }
  CHECK(std::sqrt(dist) > 1e-3);
}

TEST_CASE("text positions distinguish repeated and reordered tokens") {
  EncoderConfig cfg = tiny_cfg();
  Rng rng(24);
  TextEncoderParams p = make_text_encoder_params(cfg, rng);

  TokenSequence twice{{7, 7}, TokenSequence::Lang::kEnglish};
  Encoded e = encode_text(twice, cfg, p);
  double row_diff = 0.0;
  for (std::size_t c = 0; c < cfg.d; ++c) row_diff += std::abs(e.seq.at(0, c) - e.seq.at(1, c));
  CHECK(row_diff > 1e-6);

  TokenSequence fwd{{5, 6}, TokenSequence::Lang::kEnglish};
  TokenSequence rev{{6, 5}, TokenSequence::Lang::kEnglish};
  Encoded ef = encode_text(fwd, cfg, p);
  Encoded er = encode_text(rev, cfg, p);
  double pooled_diff = 0.0;
  for (std::size_t c = 0; c < cfg.d; ++c)
    pooled_diff += std::abs(ef.pooled.at(0, c) - er.pooled.at(0, c));
  CHECK(pooled_diff > 1e-6);
}

TEST_CASE("text encoder rejects bad token sequences") {
  EncoderConfig cfg = tiny_cfg();
  Rng rng(25);
  TextEncoderParams p = make_text_encoder_params(cfg, rng);
  TokenSequence oov{{3, 8}, TokenSequence::Lang::kEnglish};
  CHECK_THROWS_AS(encode_text(oov, cfg, p), IndexError);
  TokenSequence empty{{}, TokenSequence::Lang::kEnglish};
  CHECK_THROWS_AS(encode_text(empty, cfg, p), ValidationError);
}

TEST_CASE("audio encoder gradients match finite differences") {
  EncoderConfig cfg = tiny_cfg();
  for (std::uint64_t seed : {31, 32}) {
    Rng rng(seed);
    AudioEncoderParams p = make_audio_encoder_params(cfg, rng);
    Waveform w;
    w.samples.resize(40);
    for (double& s : w.samples) s = rng.uniform(-0.5, 0.5);
    std::vector<Tensor> inputs;
    visit_params(p, "audio", [&](const std::string&, Tensor& t) { inputs.push_back(t); });
    Rng readout_rng(seed * 100);
    Tensor weights = ops::randn(1, cfg.d, readout_rng);
    auto f = [&](const std::vector<Tensor>&) {
      return ops::sum_all(ops::mul(encode_audio(w, cfg, p).pooled, weights));
    };
    CHECK(grad_check(f, inputs) < 1e-4);
  }
}

TEST_CASE("text encoder gradients match finite differences") {
  EncoderConfig cfg = tiny_cfg();
  for (std::uint64_t seed : {33, 34}) {
    Rng rng(seed);
    TextEncoderParams p = make_text_encoder_params(cfg, rng);
    TokenSequence t{{1, 5, 3}, TokenSequence::Lang::kEnglish};
    std::vector<Tensor> inputs;
    visit_params(p, "text", [&](const std::string&, Tensor& tt) { inputs.push_back(tt); });
    Rng readout_rng(seed * 100);
    Tensor weights = ops::randn(1, cfg.d, readout_rng);
    auto f = [&](const std::vector<Tensor>&) {
      return ops::sum_all(ops::mul(encode_text(t, cfg, p).pooled, weights));
    };
    CHECK(grad_check(f, inputs) < 1e-4);
  }
}

TEST_CASE("cross attention matches a loop oracle and keeps query length") {
  Rng rng(35);
  const std::size_t d = 4, heads = 2;
  CrossAttentionParams p = make_cross_attention_params(d, rng);
  Tensor q = random_tensor(2, d, rng);
  Tensor kv = random_tensor(3, d, rng);
  Tensor got = cross_attention(q, kv, p, heads);
  REQUIRE(got.rows() == 2);
  REQUIRE(got.cols() == d);

  BlockParams shim;
  shim.wq = p.wq;
  shim.bq = p.bq;
  shim.wk = p.wk;
  shim.wv = p.wv;
  shim.bv = p.bv;
  shim.wo = p.wo;
  shim.bo = p.bo;
  std::vector<double> want = test_oracles::mha(q, kv, shim, heads);
  for (std::size_t i = 0; i < want.size(); ++i) want[i] += q.data()[i];
  test_oracles::ln_rows(want, 2, d, p.ln_g, p.ln_b);
  for (std::size_t i = 0; i < want.size(); ++i) CHECK(std::abs(got.data()[i] - want[i]) < 1e-12);
}

TEST_CASE("cross attention gradients match finite differences") {
  Rng rng(36);
  const std::size_t d = 4, heads = 2;
  CrossAttentionParams p = make_cross_attention_params(d, rng);
  Tensor q = random_tensor(3, d, rng, true);
  Tensor kv = random_tensor(5, d, rng, true);
  std::vector<Tensor> inputs = {q, kv};
  visit_params(p, "cross", [&](const std::string&, Tensor& t) { inputs.push_back(t); });
  Rng readout_rng(3600);
  Tensor weights = ops::randn(3, d, readout_rng);
  auto f = [&](const std::vector<Tensor>&) {
    return ops::sum_all(ops::mul(cross_attention(q, kv, p, heads), weights));
  };
  CHECK(grad_check(f, inputs) < 1e-4);
}

TEST_CASE("dropout is active only in training forward passes") {
  EncoderConfig cfg = tiny_cfg();
  Rng rng(37);
  BlockParams p = make_block_params(cfg.d, cfg.ff, rng);
  Tensor x = random_tensor(6, cfg.d, rng);
  Tensor base = self_attention_block(x, p, cfg.heads);

  Rng drop_rng(38);
  ForwardCtx train_ctx;
  train_ctx.training = true;
  train_ctx.dropout = 0.5;
  train_ctx.rng = &drop_rng;
  Tensor dropped = self_attention_block(x, p, cfg.heads, &train_ctx);
  CHECK(dropped.impl()->data != base.impl()->data);

  ForwardCtx eval_ctx;
  eval_ctx.training = false;
  eval_ctx.dropout = 0.5;
  Tensor same = self_attention_block(x, p, cfg.heads, &eval_ctx);
  CHECK(same.impl()->data == base.impl()->data);

  ForwardCtx zero_ctx;
  zero_ctx.training = true;
  zero_ctx.dropout = 0.0;
  Tensor same2 = self_attention_block(x, p, cfg.heads, &zero_ctx);
  CHECK(same2.impl()->data == base.impl()->data);
}

TEST_CASE("parameter visitation is stable, named, and complete") {
  EncoderConfig cfg = tiny_cfg();
  Rng rng(39);
  AudioEncoderParams audio = make_audio_encoder_params(cfg, rng);
  TextEncoderParams text = make_text_encoder_params(cfg, rng);

  std::vector<std::string> audio_names;
  visit_params(audio, "audio", [&](const std::string& n, Tensor&) { audio_names.push_back(n); });
  CHECK(audio_names.size() == 2 * 4 + 1 * 15);
  CHECK(audio_names.front() == "audio.conv0.w");
  CHECK(std::set<std::string>(audio_names.begin(), audio_names.end()).size() ==
        audio_names.size());

  std::vector<std::string> again;
  visit_params(audio, "audio", [&](const std::string& n, Tensor&) { again.push_back(n); });
  CHECK(again == audio_names);

  std::vector<std::string> text_names;
  visit_params(text, "text", [&](const std::string& n, Tensor&) { text_names.push_back(n); });
  CHECK(text_names.size() == 1 + 15);
  CHECK(text_names.front() == "text.embedding");
}
