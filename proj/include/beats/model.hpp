#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "beats/dataset.hpp"
#include "beats/encoders.hpp"
#include "beats/fusion.hpp"
#include "beats/tensor.hpp"

namespace beats {

// speech_only: audio encoder + linear speech head, single loss.
// bimodal_concat: both encoders, two-layer head on the concatenated pooled
//   latents, single loss.
// beats_xformer: both encoders + CLS fusion transformer; speech, text, and
//   fused heads supervised jointly.
// beats_otk: both encoders + two cross-attention branches pooled by optimal
//   transport against learned references, concatenated with the pooled
//   per-modality latents; same three-head supervision.
enum class Variant { kSpeechOnly, kBimodalConcat, kBeatsXformer, kBeatsOtk };
std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct LossWeights {
  double alpha = 0.15;
  double beta = 0.7;
  double gamma = 0.15;
};
void validate(const LossWeights& w);  // all >= 0, sum to 1 within 1e-12
LossWeights ablation_weights(double alpha);  // gamma = alpha, beta = 1 - 2*alpha

// alpha*l_speech + beta*l_fused + gamma*l_text over scalar graph nodes.
Tensor joint_loss(const LossWeights& w, const Tensor& l_speech, const Tensor& l_fused,
                  const Tensor& l_text);

struct ModelConfig {
  Variant variant = Variant::kBeatsXformer;
  EncoderConfig encoder;  // shared width/heads/ff/blocks; conv fields for audio
  std::size_t fusion_blocks = 2;
  std::size_t otk_p = 8;
  double otk_epsilon = 0.1;
  double otk_tol = 1e-6;
  std::size_t otk_max_iter = 500;
  std::size_t head_hidden = 32;  // hidden width of the two-layer heads
  LossWeights loss;
  std::uint64_t seed = 1;
};
void validate(const ModelConfig& cfg);

// Owns exactly the parameters its variant uses.
struct Model {
  ModelConfig cfg;
  AudioEncoderParams audio;
  TextEncoderParams text;        // all but speech_only
  FusionParams fusion;           // beats_xformer
  Tensor refs;                   // beats_otk
  CrossAttentionParams ca_audio_text;  // beats_otk: audio queries, text keys/values
  CrossAttentionParams ca_text_audio;  // beats_otk: text queries, audio keys/values
  Tensor speech_w, speech_b;     // d x 3, 1 x 3
  Tensor text_w, text_b;         // d x 3, 1 x 3 (beats_* only)
  Tensor fused_w1, fused_b1;     // fused/concat head, two layers with GELU
  Tensor fused_w2, fused_b2;
};

Model make_model(const ModelConfig& cfg);
void visit_params(Model& m, const ParamVisitor& fn);
std::size_t fused_head_input_width(const ModelConfig& cfg);

struct ForwardResult {
  Tensor probs;        // 1 x 3, prediction head softmax
  Tensor loss;         // scalar training loss for this record
  Tensor loss_speech;  // per-head losses; undefined when the head is inactive
  Tensor loss_fused;
  Tensor loss_text;
};
ForwardResult forward(Model& m, const UtteranceRecord& record, ForwardCtx* ctx = nullptr);

// Argmax with ties resolved to the lowest class index.
std::size_t predict_class(const Tensor& probs);

struct TrainConfig {
  std::size_t epochs = 30;
  double lr = 1e-3;
  std::size_t batch = 8;
};
void validate(const TrainConfig& cfg);

struct TrainResult {
  std::vector<double> loss_curve;  // mean train loss per epoch
};

// Mini-batch Adam over the training split; deterministic given model seed.
// A non-finite batch loss aborts with a numeric error naming epoch and batch.
TrainResult train(Model& m, const Dataset& data, const TrainConfig& tc);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_div0 = false;  // flagged when a zero denominator forced 0
  bool recall_div0 = false;
};

struct EvalResult {
  std::array<std::array<std::size_t, kNumClasses>, kNumClasses> confusion{};  // [true][pred]
  std::array<ClassMetrics, kNumClasses> per_class{};
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::size_t count = 0;
};

EvalResult metrics_from_confusion(
    const std::array<std::array<std::size_t, kNumClasses>, kNumClasses>& confusion);
EvalResult evaluate(Model& m, const Dataset& data, Split split);

struct AblationCell {
  Variant scheme;
  double alpha = 0.0;
  double beta = 0.0;
  EvalResult eval;
};

// Trains one model per (scheme, alpha) cell with identical seeds and returns
// cells in deterministic grid order (scheme-major). threads > 1 fans the
// independent cells out over a small worker pool.
std::vector<AblationCell> ablation_sweep(const ModelConfig& base, const Dataset& data,
                                         const TrainConfig& tc,
                                         const std::vector<double>& alphas,
                                         const std::vector<Variant>& schemes,
                                         std::size_t threads = 1);

// Named-tensor parameter file; load requires the exact same variant/config
// shape and matches tensors by name.
void save_params(Model& m, const std::string& path);
void load_params(Model& m, const std::string& path);

// Metrics TSV columns: variant, class, precision, recall, f1 (one row per
// class plus a macro row). Grid TSV columns: scheme, alpha, beta, class, f1,
// with a trailing comment line naming each scheme's best alpha by macro F1.
void write_metrics_tsv(const std::string& path,
                       const std::vector<std::pair<std::string, EvalResult>>& rows);
void write_grid_tsv(const std::string& path, const std::vector<AblationCell>& cells);

}  // namespace beats
