#include "beats/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numeric>
#include <thread>
#include <utility>

#include "beats/errors.hpp"
#include "beats/ops.hpp"

namespace beats {
namespace {

Tensor init_weight(std::size_t rows, std::size_t cols, Rng& rng) {
  return ops::randn(rows, cols, rng, 1.0 / std::sqrt(static_cast<double>(rows)), true);
}

Tensor init_zeros(std::size_t cols) { return Tensor::zeros(1, cols, true); }

bool has_text_encoder(Variant v) { return v != Variant::kSpeechOnly; }
bool has_joint_loss(Variant v) {
  return v == Variant::kBeatsXformer || v == Variant::kBeatsOtk;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  return ops::add_rowvec(ops::matmul(x, w), b);
}

Tensor fused_head(const Model& m, const Tensor& x) {
  Tensor h = ops::gelu(linear(x, m.fused_w1, m.fused_b1));
  return linear(h, m.fused_w2, m.fused_b2);
}

std::string fmt(const char* spec, double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kSpeechOnly: return "speech_only";
    case Variant::kBimodalConcat: return "bimodal_concat";
    case Variant::kBeatsXformer: return "beats_xformer";
    case Variant::kBeatsOtk: return "beats_otk";
  }
  throw ValidationError("unknown variant code " +
                        std::to_string(static_cast<int>(v)));
}

Variant variant_from_name(const std::string& name) {
  if (name == "speech_only") return Variant::kSpeechOnly;
  if (name == "bimodal_concat") return Variant::kBimodalConcat;
  if (name == "beats_xformer") return Variant::kBeatsXformer;
  if (name == "beats_otk") return Variant::kBeatsOtk;
  throw ValidationError("unknown variant '" + name +
                        "' (expected speech_only, bimodal_concat, beats_xformer, beats_otk)");
}

void validate(const LossWeights& w) {
  if (!(w.alpha >= 0.0) || !(w.beta >= 0.0) || !(w.gamma >= 0.0))
    throw ValidationError("loss weights must all be >= 0");
  const double sum = w.alpha + w.beta + w.gamma;
  if (std::abs(sum - 1.0) > 1e-12)
    throw ValidationError("loss weights must sum to 1 (got " + fmt("%.17g", sum) + ")");
}

LossWeights ablation_weights(double alpha) {
  if (!(alpha > 0.0) || !(alpha < 0.5))
    throw ValidationError("ablation alpha must lie in (0, 0.5) so beta = 1 - 2*alpha > 0 (got " +
                          fmt("%.17g", alpha) + ")");
  return LossWeights{alpha, 1.0 - 2.0 * alpha, alpha};
}

Tensor joint_loss(const LossWeights& w, const Tensor& l_speech, const Tensor& l_fused,
                  const Tensor& l_text) {
  validate(w);
  for (const Tensor* t : {&l_speech, &l_fused, &l_text})
    if (t->rows() != 1 || t->cols() != 1)
      throw DimError("joint_loss expects 1x1 losses, got " + std::to_string(t->rows()) + "x" +
                     std::to_string(t->cols()));
  return ops::add(ops::add(ops::scale(l_speech, w.alpha), ops::scale(l_fused, w.beta)),
                  ops::scale(l_text, w.gamma));
}

void validate(const ModelConfig& cfg) {
  validate(cfg.encoder);
  validate(cfg.loss);
  if (cfg.head_hidden == 0) throw ValidationError("head_hidden must be >= 1");
  if (cfg.variant == Variant::kBeatsXformer && cfg.fusion_blocks == 0)
    throw ValidationError("beats_xformer needs fusion_blocks >= 1");
  if (cfg.variant == Variant::kBeatsOtk) {
    if (cfg.otk_p == 0) throw ValidationError("otk_p must be >= 1");
    if (!(cfg.otk_epsilon > 0.0)) throw ValidationError("otk_epsilon must be > 0");
    if (!(cfg.otk_tol > 0.0)) throw ValidationError("otk_tol must be > 0");
    if (cfg.otk_max_iter == 0) throw ValidationError("otk_max_iter must be >= 1");
  }
}

std::size_t fused_head_input_width(const ModelConfig& cfg) {
  switch (cfg.variant) {
    case Variant::kSpeechOnly: return 0;
    case Variant::kBimodalConcat: return 2 * cfg.encoder.d;
    case Variant::kBeatsXformer: return cfg.encoder.d;
    case Variant::kBeatsOtk: return 2 * cfg.otk_p * cfg.encoder.d + 2 * cfg.encoder.d;
  }
  return 0;
}

Model make_model(const ModelConfig& cfg) {
  validate(cfg);
  Model m;
  m.cfg = cfg;
  const std::size_t d = cfg.encoder.d;
  {
    Rng rng(derive_seed(cfg.seed, 1));
    m.audio = make_audio_encoder_params(cfg.encoder, rng);
  }
  if (has_text_encoder(cfg.variant)) {
    Rng rng(derive_seed(cfg.seed, 2));
    m.text = make_text_encoder_params(cfg.encoder, rng);
  }
  if (cfg.variant == Variant::kBeatsXformer) {
    Rng rng(derive_seed(cfg.seed, 3));
    m.fusion = make_fusion_params(d, cfg.encoder.ff, cfg.fusion_blocks, rng);
  }
  if (cfg.variant == Variant::kBeatsOtk) {
    Rng refs_rng(derive_seed(cfg.seed, 4));
    m.refs = make_reference_set(cfg.otk_p, d, refs_rng);
    Rng at_rng(derive_seed(cfg.seed, 5));
    m.ca_audio_text = make_cross_attention_params(d, at_rng);
    Rng ta_rng(derive_seed(cfg.seed, 6));
    m.ca_text_audio = make_cross_attention_params(d, ta_rng);
  }
  Rng head_rng(derive_seed(cfg.seed, 7));
  if (cfg.variant != Variant::kBimodalConcat) {
    m.speech_w = init_weight(d, kNumClasses, head_rng);
    m.speech_b = init_zeros(kNumClasses);
  }
  if (has_joint_loss(cfg.variant)) {
    m.text_w = init_weight(d, kNumClasses, head_rng);
    m.text_b = init_zeros(kNumClasses);
  }
  if (cfg.variant != Variant::kSpeechOnly) {
    m.fused_w1 = init_weight(fused_head_input_width(cfg), cfg.head_hidden, head_rng);
    m.fused_b1 = init_zeros(cfg.head_hidden);
    m.fused_w2 = init_weight(cfg.head_hidden, kNumClasses, head_rng);
    m.fused_b2 = init_zeros(kNumClasses);
  }
  return m;
}

void visit_params(Model& m, const ParamVisitor& fn) {
  visit_params(m.audio, "audio", fn);
  if (m.text.embedding.defined()) visit_params(m.text, "text", fn);
  if (m.fusion.cls.defined()) visit_params(m.fusion, "fusion", fn);
  if (m.refs.defined()) fn("otk.refs", m.refs);
  if (m.ca_audio_text.wq.defined()) visit_params(m.ca_audio_text, "cross_at", fn);
  if (m.ca_text_audio.wq.defined()) visit_params(m.ca_text_audio, "cross_ta", fn);
  if (m.speech_w.defined()) {
    fn("head.speech.w", m.speech_w);
    fn("head.speech.b", m.speech_b);
  }
  if (m.text_w.defined()) {
    fn("head.text.w", m.text_w);
    fn("head.text.b", m.text_b);
  }
  if (m.fused_w1.defined()) {
    fn("head.fused.w1", m.fused_w1);
    fn("head.fused.b1", m.fused_b1);
    fn("head.fused.w2", m.fused_w2);
    fn("head.fused.b2", m.fused_b2);
  }
}

ForwardResult forward(Model& m, const UtteranceRecord& record, ForwardCtx* ctx) {
  const ModelConfig& cfg = m.cfg;
  const std::size_t label = static_cast<std::size_t>(record.label);
  const std::size_t heads = cfg.encoder.heads;
  ForwardResult out;
  Encoded a = encode_audio(record.audio, cfg.encoder, m.audio, ctx);
  switch (cfg.variant) {
    case Variant::kSpeechOnly: {
      Tensor logits = linear(a.pooled, m.speech_w, m.speech_b);
      out.loss_speech = ops::cross_entropy(logits, label);
      out.loss = out.loss_speech;
      out.probs = ops::softmax_rows(logits);
      return out;
    }
    case Variant::kBimodalConcat: {
      Encoded t = encode_text(record.english, cfg.encoder, m.text, ctx);
      Tensor logits = fused_head(m, ops::concat_cols({a.pooled, t.pooled}));
      out.loss_fused = ops::cross_entropy(logits, label);
      out.loss = out.loss_fused;
      out.probs = ops::softmax_rows(logits);
      return out;
    }
    case Variant::kBeatsXformer: {
      Encoded t = encode_text(record.english, cfg.encoder, m.text, ctx);
      Tensor cls = fusion_transformer(concat_with_cls(a.seq, t.seq, m.fusion), m.fusion,
                                      heads, ctx);
      Tensor fused_logits = fused_head(m, cls);
      out.loss_speech = ops::cross_entropy(linear(a.pooled, m.speech_w, m.speech_b), label);
      out.loss_text = ops::cross_entropy(linear(t.pooled, m.text_w, m.text_b), label);
      out.loss_fused = ops::cross_entropy(fused_logits, label);
      out.loss = joint_loss(cfg.loss, out.loss_speech, out.loss_fused, out.loss_text);
      out.probs = ops::softmax_rows(fused_logits);
      return out;
    }
    case Variant::kBeatsOtk: {
      Encoded t = encode_text(record.english, cfg.encoder, m.text, ctx);
      Tensor at = cross_attention(a.seq, t.seq, m.ca_audio_text, heads, ctx);
      Tensor ta = cross_attention(t.seq, a.seq, m.ca_text_audio, heads, ctx);
      Tensor ea = otk_pool(at, m.refs, cfg.otk_epsilon, cfg.otk_tol, cfg.otk_max_iter).embedding;
      Tensor et = otk_pool(ta, m.refs, cfg.otk_epsilon, cfg.otk_tol, cfg.otk_max_iter).embedding;
      Tensor fused_logits = fused_head(m, ops::concat_cols({ea, et, a.pooled, t.pooled}));
      out.loss_speech = ops::cross_entropy(linear(a.pooled, m.speech_w, m.speech_b), label);
      out.loss_text = ops::cross_entropy(linear(t.pooled, m.text_w, m.text_b), label);
      out.loss_fused = ops::cross_entropy(fused_logits, label);
      out.loss = joint_loss(cfg.loss, out.loss_speech, out.loss_fused, out.loss_text);
      out.probs = ops::softmax_rows(fused_logits);
      return out;
    }
  }
  throw ValidationError("forward: unknown variant");
}

std::size_t predict_class(const Tensor& probs) {
  if (!probs.defined() || probs.rows() != 1 || probs.cols() == 0)
    throw DimError("predict_class expects a 1 x C probability row");
  std::size_t best = 0;
  for (std::size_t c = 1; c < probs.cols(); ++c)
    if (probs.at(0, c) > probs.at(0, best)) best = c;
  return best;
}

void validate(const TrainConfig& cfg) {
  if (cfg.batch == 0) throw ValidationError("batch size must be >= 1");
  if (!(cfg.lr >= 0.0) || !std::isfinite(cfg.lr))
    throw ValidationError("learning rate must be finite and >= 0");
}

TrainResult train(Model& m, const Dataset& data, const TrainConfig& tc) {
  validate(tc);
  validate(m.cfg);
  std::vector<const UtteranceRecord*> view = data.split_view(Split::kTrain);
  if (view.empty()) throw ValidationError("train: training split is empty");
  for (const UtteranceRecord* r : view)
    if (r->audio.samples.empty())
      throw ValidationError("train: audio not loaded for record " + r->id);

  std::vector<Tensor> params;
  visit_params(m, [&](const std::string&, Tensor& t) { params.push_back(t); });
  std::vector<std::vector<double>> m1(params.size()), m2(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    m1[i].assign(params[i].size(), 0.0);
    m2[i].assign(params[i].size(), 0.0);
  }
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;

  std::vector<std::size_t> order(view.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  TrainResult out;
  out.loss_curve.reserve(tc.epochs);
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(m.cfg.seed, 0x5aff1e00ULL + epoch));
    shuffle_rng.shuffle(order);
    Rng drop_rng(derive_seed(m.cfg.seed, 0xd309000ULL + epoch));
    double epoch_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t beg = 0; beg < order.size(); beg += tc.batch) {
      const std::size_t end = std::min(beg + tc.batch, order.size());
      for (Tensor& t : params) t.zero_grad();
      Tensor total;
      for (std::size_t k = beg; k < end; ++k) {
        ForwardCtx ctx;
        ctx.training = true;
        ctx.dropout = m.cfg.encoder.dropout;
        ctx.rng = &drop_rng;
        ForwardResult fr = forward(m, *view[order[k]], &ctx);
        total = total.defined() ? ops::add(total, fr.loss) : fr.loss;
      }
      Tensor batch_loss = ops::scale(total, 1.0 / static_cast<double>(end - beg));
      const double lv = batch_loss.item();
      if (!std::isfinite(lv))
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch + 1) +
                           " batch " + std::to_string(batches + 1));
      batch_loss.backward();
      ++step;
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      for (std::size_t i = 0; i < params.size(); ++i) {
        const std::vector<double>& g = params[i].grad();
        double* p = params[i].data();
        for (std::size_t k = 0; k < g.size(); ++k) {
          m1[i][k] = kBeta1 * m1[i][k] + (1.0 - kBeta1) * g[k];
          m2[i][k] = kBeta2 * m2[i][k] + (1.0 - kBeta2) * g[k] * g[k];
          p[k] -= tc.lr * (m1[i][k] / c1) / (std::sqrt(m2[i][k] / c2) + kEps);
        }
      }
      epoch_sum += lv;
      ++batches;
    }
    out.loss_curve.push_back(epoch_sum / static_cast<double>(batches));
  }
  return out;
}

EvalResult metrics_from_confusion(
    const std::array<std::array<std::size_t, kNumClasses>, kNumClasses>& confusion) {
  EvalResult out;
  out.confusion = confusion;
  double psum = 0.0, rsum = 0.0, fsum = 0.0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const std::size_t tp = confusion[c][c];
    std::size_t fp = 0, fn = 0;
    for (std::size_t o = 0; o < kNumClasses; ++o) {
      out.count += confusion[c][o];
      if (o != c) {
        fp += confusion[o][c];
        fn += confusion[c][o];
      }
    }
    ClassMetrics& cm = out.per_class[c];
    if (tp + fp == 0) {
      cm.precision_div0 = true;
    } else {
      cm.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    }
    if (tp + fn == 0) {
      cm.recall_div0 = true;
    } else {
      cm.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    }
    cm.f1 = (cm.precision + cm.recall > 0.0)
                ? 2.0 * cm.precision * cm.recall / (cm.precision + cm.recall)
                : 0.0;
    psum += cm.precision;
    rsum += cm.recall;
    fsum += cm.f1;
  }
  out.macro_precision = psum / static_cast<double>(kNumClasses);
  out.macro_recall = rsum / static_cast<double>(kNumClasses);
  out.macro_f1 = fsum / static_cast<double>(kNumClasses);
  return out;
}

EvalResult evaluate(Model& m, const Dataset& data, Split split) {
  std::vector<const UtteranceRecord*> view = data.split_view(split);
  if (view.empty())
    throw ValidationError("evaluate: split '" + split_name(split) + "' is empty");
  NoGradGuard guard;
  std::array<std::array<std::size_t, kNumClasses>, kNumClasses> confusion{};
  for (const UtteranceRecord* r : view) {
    if (r->audio.samples.empty())
      throw ValidationError("evaluate: audio not loaded for record " + r->id);
    ForwardResult fr = forward(m, *r);
    confusion[static_cast<std::size_t>(r->label)][predict_class(fr.probs)] += 1;
  }
  return metrics_from_confusion(confusion);
}

std::vector<AblationCell> ablation_sweep(const ModelConfig& base, const Dataset& data,
                                         const TrainConfig& tc,
                                         const std::vector<double>& alphas,
                                         const std::vector<Variant>& schemes,
                                         std::size_t threads) {
  validate(tc);
  if (alphas.empty()) throw ValidationError("ablation: alpha grid is empty");
  if (schemes.empty()) throw ValidationError("ablation: no schemes given");
  for (Variant s : schemes)
    if (!has_joint_loss(s))
      throw ValidationError("ablation: scheme '" + variant_name(s) +
                            "' has no joint loss to reweight");
  std::vector<AblationCell> cells;
  cells.reserve(schemes.size() * alphas.size());
  for (Variant s : schemes) {
    for (double a : alphas) {
      AblationCell cell;
      cell.scheme = s;
      cell.alpha = a;
      LossWeights w = ablation_weights(a);  // rejects the whole grid before any training
      cell.beta = w.beta;
      ModelConfig cfg = base;
      cfg.variant = s;
      cfg.loss = w;
      validate(cfg);
      cells.push_back(cell);
    }
  }
  auto run_cell = [&](AblationCell& cell) {
    ModelConfig cfg = base;
    cfg.variant = cell.scheme;
    cfg.loss = ablation_weights(cell.alpha);
    Model model = make_model(cfg);
    train(model, data, tc);
    cell.eval = evaluate(model, data, Split::kTest);
  };
  if (threads <= 1 || cells.size() <= 1) {
    for (AblationCell& cell : cells) run_cell(cell);
    return cells;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  const std::size_t workers = std::min(threads, cells.size());
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= cells.size()) return;
        try {
          run_cell(cells[i]);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return cells;
}

namespace {

constexpr char kParamsMagic[8] = {'B', 'E', 'A', 'T', 'S', 'P', 'R', 'M'};

void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t read_u64(std::istream& is, const std::string& path, const char* what) {
  std::uint64_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v))
    throw IoError("params file truncated reading " + std::string(what) + ": " + path);
  return v;
}

std::vector<std::pair<std::string, Tensor>> named_params(Model& m) {
  std::vector<std::pair<std::string, Tensor>> out;
  visit_params(m, [&](const std::string& name, Tensor& t) { out.emplace_back(name, t); });
  return out;
}

}  // namespace

void save_params(Model& m, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open params file for writing: " + path);
  os.write(kParamsMagic, sizeof kParamsMagic);
  write_u64(os, 1);  // format version
  write_u64(os, static_cast<std::uint64_t>(m.cfg.variant));
  std::vector<std::pair<std::string, Tensor>> params = named_params(m);
  write_u64(os, params.size());
  for (auto& [name, t] : params) {
    write_u64(os, name.size());
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(os, t.rows());
    write_u64(os, t.cols());
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(sizeof(double) * t.size()));
  }
  if (!os) throw IoError("short write to params file: " + path);
}

void load_params(Model& m, const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open params file: " + path);
  char magic[8];
  if (!is.read(magic, sizeof magic) || !std::equal(magic, magic + sizeof magic, kParamsMagic))
    throw IoError("not a params file (bad magic): " + path);
  const std::uint64_t version = read_u64(is, path, "version");
  if (version != 1)
    throw IoError("unsupported params version " + std::to_string(version) + ": " + path);
  const std::uint64_t variant = read_u64(is, path, "variant");
  if (variant > static_cast<std::uint64_t>(Variant::kBeatsOtk))
    throw IoError("bad variant code " + std::to_string(variant) + ": " + path);
  if (variant != static_cast<std::uint64_t>(m.cfg.variant))
    throw IoError("params were saved for variant '" +
                  variant_name(static_cast<Variant>(variant)) + "' but the model is '" +
                  variant_name(m.cfg.variant) + "': " + path);
  std::vector<std::pair<std::string, Tensor>> params = named_params(m);
  const std::uint64_t count = read_u64(is, path, "tensor count");
  if (count != params.size())
    throw IoError("params file has " + std::to_string(count) + " tensors, model expects " +
                  std::to_string(params.size()) + ": " + path);
  for (auto& [name, t] : params) {
    const std::uint64_t len = read_u64(is, path, "name length");
    std::string got(len, '\0');
    if (!is.read(got.data(), static_cast<std::streamsize>(len)))
      throw IoError("params file truncated reading a tensor name: " + path);
    if (got != name)
      throw IoError("params file tensor '" + got + "' does not match expected '" + name +
                    "': " + path);
    const std::uint64_t rows = read_u64(is, path, "rows");
    const std::uint64_t cols = read_u64(is, path, "cols");
    if (rows != t.rows() || cols != t.cols())
      throw IoError("shape mismatch for '" + name + "': file has " + std::to_string(rows) +
                    "x" + std::to_string(cols) + ", model has " + std::to_string(t.rows()) +
                    "x" + std::to_string(t.cols()) + ": " + path);
    if (!is.read(reinterpret_cast<char*>(t.data()),
                 static_cast<std::streamsize>(sizeof(double) * t.size())))
      throw IoError("params file truncated reading data for '" + name + "': " + path);
  }
  if (is.peek() != std::char_traits<char>::eof())
    throw IoError("trailing bytes after the last tensor: " + path);
}

void write_metrics_tsv(const std::string& path,
                       const std::vector<std::pair<std::string, EvalResult>>& rows) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open metrics file for writing: " + path);
  os << "variant\tclass\tprecision\trecall\tf1\n";
  for (const auto& [variant, ev] : rows) {
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      const ClassMetrics& cm = ev.per_class[c];
      os << variant << '\t' << label_name(static_cast<Label>(c)) << '\t'
         << fmt("%.6f", cm.precision) << '\t' << fmt("%.6f", cm.recall) << '\t'
         << fmt("%.6f", cm.f1) << '\n';
    }
    os << variant << "\tmacro\t" << fmt("%.6f", ev.macro_precision) << '\t'
       << fmt("%.6f", ev.macro_recall) << '\t' << fmt("%.6f", ev.macro_f1) << '\n';
  }
  if (!os) throw IoError("short write to metrics file: " + path);
}

void write_grid_tsv(const std::string& path, const std::vector<AblationCell>& cells) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open grid file for writing: " + path);
  os << "scheme\talpha\tbeta\tclass\tf1\n";
  for (const AblationCell& cell : cells) {
    const std::string scheme = variant_name(cell.scheme);
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      os << scheme << '\t' << fmt("%g", cell.alpha) << '\t' << fmt("%g", cell.beta) << '\t'
         << label_name(static_cast<Label>(c)) << '\t' << fmt("%.6f", cell.eval.per_class[c].f1)
         << '\n';
    }
    os << scheme << '\t' << fmt("%g", cell.alpha) << '\t' << fmt("%g", cell.beta)
       << "\tmacro\t" << fmt("%.6f", cell.eval.macro_f1) << '\n';
  }
  std::vector<Variant> seen;
  for (const AblationCell& cell : cells)
    if (std::find(seen.begin(), seen.end(), cell.scheme) == seen.end())
      seen.push_back(cell.scheme);
  for (Variant s : seen) {
    const AblationCell* best = nullptr;
    for (const AblationCell& cell : cells)
      if (cell.scheme == s && (!best || cell.eval.macro_f1 > best->eval.macro_f1)) best = &cell;
    os << "# best " << variant_name(s) << ": alpha=" << fmt("%g", best->alpha)
       << " (macro_f1=" << fmt("%.6f", best->eval.macro_f1) << ")\n";
  }
  if (!os) throw IoError("short write to grid file: " + path);
}

}  // namespace beats
