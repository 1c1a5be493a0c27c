#include "beats/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "beats/errors.hpp"
#include "beats/fusion.hpp"
#include "beats/grad_check.hpp"
#include "beats/oracle.hpp"
#include "beats/ops.hpp"
#include "beats/wav.hpp"

namespace beats {
namespace {

namespace fs = std::filesystem;

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmtd(const char* spec, double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

struct KvEntry {
  std::string value;
  int line = 0;
  mutable bool used = false;
};

// Flat key=value file with '#' comments; every key must be consumed.
class KvFile {
 public:
  explicit KvFile(const std::string& path) : path_(path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config file: " + path);
    std::string raw;
    int n = 0;
    while (std::getline(is, raw)) {
      ++n;
      const std::size_t hash = raw.find('#');
      if (hash != std::string::npos) raw.erase(hash);
      const std::string line = trim(raw);
      if (line.empty()) continue;
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos) throw err(n, "expected key=value, got '" + line + "'");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) throw err(n, "empty key");
      auto [it, inserted] = entries_.emplace(key, KvEntry{value, n});
      if (!inserted)
        throw err(n, "duplicate key '" + key + "' (first set on line " +
                         std::to_string(it->second.line) + ")");
    }
  }

  std::string get_string(const std::string& key, const std::string& def) const {
    const KvEntry* e = find(key);
    return e ? e->value : def;
  }

  double get_double(const std::string& key, double def) const {
    const KvEntry* e = find(key);
    return e ? parse_double(*e, key) : def;
  }

  std::size_t get_size(const std::string& key, std::size_t def) const {
    const KvEntry* e = find(key);
    return e ? parse_size(*e, key) : def;
  }

  std::vector<double> get_double_list(const std::string& key, std::vector<double> def) const {
    const KvEntry* e = find(key);
    if (!e) return def;
    std::vector<double> out;
    for (const std::string& tok : split(*e, key)) out.push_back(parse_double({tok, e->line}, key));
    return out;
  }

  std::vector<std::size_t> get_size_list(const std::string& key,
                                         std::vector<std::size_t> def) const {
    const KvEntry* e = find(key);
    if (!e) return def;
    std::vector<std::size_t> out;
    for (const std::string& tok : split(*e, key)) out.push_back(parse_size({tok, e->line}, key));
    return out;
  }

  std::vector<std::string> get_string_list(const std::string& key,
                                           std::vector<std::string> def) const {
    const KvEntry* e = find(key);
    return e ? split(*e, key) : def;
  }

  int line_of(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second.line;
  }

  // Unknown keys are configuration mistakes, not extensions.
  void require_all_used() const {
    for (const auto& [key, e] : entries_)
      if (!e.used) throw err(e.line, "unknown key '" + key + "'");
  }

  ValidationError err(int line, const std::string& msg) const {
    return ValidationError(path_ + " line " + std::to_string(line) + ": " + msg);
  }

 private:
  const KvEntry* find(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }

  double parse_double(const KvEntry& e, const std::string& key) const {
    try {
      std::size_t idx = 0;
      const double v = std::stod(e.value, &idx);
      if (idx != e.value.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw err(e.line, "value for '" + key + "' is not a number: '" + e.value + "'");
    }
  }

  std::size_t parse_size(const KvEntry& e, const std::string& key) const {
    try {
      if (!e.value.empty() && e.value[0] == '-') throw std::invalid_argument("negative");
      std::size_t idx = 0;
      const unsigned long long v = std::stoull(e.value, &idx);
      if (idx != e.value.size()) throw std::invalid_argument("trailing");
      return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      throw err(e.line, "value for '" + key + "' is not a nonnegative integer: '" + e.value +
                            "'");
    }
  }

  std::vector<std::string> split(const KvEntry& e, const std::string& key) const {
    std::istringstream ss(e.value);
    std::vector<std::string> out;
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    if (out.empty()) throw err(e.line, "'" + key + "' needs at least one value");
    return out;
  }

  std::string path_;
  std::map<std::string, KvEntry> entries_;
};

std::string manifest_path(const RunConfig& cfg) {
  return (fs::path(cfg.dataset_dir) / "manifest.tsv").string();
}

Dataset load_corpus(const RunConfig& cfg) {
  Dataset data = load_manifest(manifest_path(cfg));
  load_audio(data);
  return data;
}

}  // namespace

RunConfig parse_run_config(const std::string& path) {
  const KvFile kv(path);
  RunConfig cfg;
  cfg.seed = kv.get_size("seed", 1);
  cfg.dataset_dir = kv.get_string("data.dir", cfg.dataset_dir);
  cfg.out_dir = kv.get_string("out.dir", cfg.out_dir);

  GeneratorConfig& g = cfg.generator;
  g.count_request = kv.get_size("gen.count_request", g.count_request);
  g.count_question = kv.get_size("gen.count_question", g.count_question);
  g.count_order = kv.get_size("gen.count_order", g.count_order);
  g.duration_mean = kv.get_double("gen.duration_mean", g.duration_mean);
  g.duration_sd = kv.get_double("gen.duration_sd", g.duration_sd);
  g.duration_min = kv.get_double("gen.duration_min", g.duration_min);
  g.duration_max = kv.get_double("gen.duration_max", g.duration_max);
  g.sample_rate = static_cast<std::uint32_t>(kv.get_size("gen.sample_rate", g.sample_rate));
  g.speakers = static_cast<int>(kv.get_size("gen.speakers", static_cast<std::size_t>(g.speakers)));
  g.noise = kv.get_double("gen.noise", g.noise);
  g.marker_noise = kv.get_double("gen.marker_noise", g.marker_noise);
  g.ambiguity = kv.get_double("gen.ambiguity", g.ambiguity);
  g.val_frac = kv.get_double("gen.val_frac", g.val_frac);
  g.test_frac = kv.get_double("gen.test_frac", g.test_frac);

  AugmentationConfig& a = cfg.augment;
  a.shift_min_ms = kv.get_double("aug.shift_min_ms", a.shift_min_ms);
  a.shift_max_ms = kv.get_double("aug.shift_max_ms", a.shift_max_ms);
  a.gain_min_db = kv.get_double("aug.gain_min_db", a.gain_min_db);
  a.gain_max_db = kv.get_double("aug.gain_max_db", a.gain_max_db);
  a.snr_min_db = kv.get_double("aug.snr_min_db", a.snr_min_db);
  a.snr_max_db = kv.get_double("aug.snr_max_db", a.snr_max_db);
  a.synonym_prob = kv.get_double("aug.synonym_prob", a.synonym_prob);
  a.copies = kv.get_size("aug.copies", a.copies);

  ModelConfig& m = cfg.model;
  const std::string variant = kv.get_string("model.variant", variant_name(m.variant));
  try {
    m.variant = variant_from_name(variant);
  } catch (const ValidationError& e) {
    throw kv.err(kv.line_of("model.variant"), e.what());
  }
  EncoderConfig& enc = m.encoder;
  enc.d = kv.get_size("encoder.d", enc.d);
  enc.blocks = kv.get_size("encoder.blocks", enc.blocks);
  enc.heads = kv.get_size("encoder.heads", enc.heads);
  enc.ff = kv.get_size("encoder.ff", enc.ff);
  enc.vocab = kv.get_size("encoder.vocab", enc.vocab);
  enc.dropout = kv.get_double("encoder.dropout", enc.dropout);
  enc.conv_kernels = kv.get_size_list("encoder.conv_kernels", enc.conv_kernels);
  enc.conv_strides = kv.get_size_list("encoder.conv_strides", enc.conv_strides);
  enc.conv_channels = kv.get_size_list("encoder.conv_channels", enc.conv_channels);
  m.fusion_blocks = kv.get_size("fusion.blocks", m.fusion_blocks);
  m.otk_p = kv.get_size("otk.p", m.otk_p);
  m.otk_epsilon = kv.get_double("otk.epsilon", m.otk_epsilon);
  m.otk_tol = kv.get_double("otk.tol", m.otk_tol);
  m.otk_max_iter = kv.get_size("otk.max_iter", m.otk_max_iter);
  m.head_hidden = kv.get_size("head.hidden", m.head_hidden);
  m.loss.alpha = kv.get_double("loss.alpha", m.loss.alpha);
  m.loss.beta = kv.get_double("loss.beta", m.loss.beta);
  m.loss.gamma = kv.get_double("loss.gamma", m.loss.gamma);

  TrainConfig& t = cfg.trainer;
  t.epochs = kv.get_size("train.epochs", t.epochs);
  t.lr = kv.get_double("train.lr", t.lr);
  t.batch = kv.get_size("train.batch", t.batch);

  cfg.ablation_alphas = kv.get_double_list("ablate.alphas", cfg.ablation_alphas);
  std::vector<std::string> scheme_names;
  for (Variant v : cfg.ablation_schemes) scheme_names.push_back(variant_name(v));
  scheme_names = kv.get_string_list("ablate.schemes", scheme_names);
  cfg.ablation_schemes.clear();
  for (const std::string& name : scheme_names) {
    try {
      cfg.ablation_schemes.push_back(variant_from_name(name));
    } catch (const ValidationError& e) {
      throw kv.err(kv.line_of("ablate.schemes"), e.what());
    }
  }

  kv.require_all_used();

  override_seed(cfg, cfg.seed);
  validate(cfg.generator);
  validate(cfg.augment);
  validate(cfg.model);
  validate(cfg.trainer);
  for (double alpha : cfg.ablation_alphas) ablation_weights(alpha);
  return cfg;
}

void override_seed(RunConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  cfg.generator.seed = seed;
  cfg.model.seed = seed;
}

std::size_t ablation_threads() {
  const char* env = std::getenv("BEATS_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const unsigned long v = std::strtoul(env, &end, 10);
  if (end == env || *end != '\0')
    throw ValidationError("BEATS_THREADS must be a nonnegative integer (got '" +
                          std::string(env) + "')");
  return v == 0 ? 1 : static_cast<std::size_t>(v);
}

int cmd_gen_data(const RunConfig& cfg, std::ostream& out) {
  const Dataset ds = generate_dataset(cfg.generator, cfg.augment, cfg.dataset_dir);
  const std::vector<std::size_t> counts = ds.class_counts();
  out << ds.records.size() << " records (" << counts[0] << "/" << counts[1] << "/" << counts[2]
      << ")\n";
  out << "checksum " << checksum_hex(dataset_checksum(manifest_path(cfg))) << "\n";
  out << "wrote " << manifest_path(cfg) << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  Dataset data = load_corpus(cfg);
  Model model = make_model(cfg.model);
  const TrainResult tr = train(model, data, cfg.trainer);
  fs::create_directories(cfg.out_dir);
  const std::string params = (fs::path(cfg.out_dir) / "params.bin").string();
  const std::string metrics = (fs::path(cfg.out_dir) / "metrics.tsv").string();
  save_params(model, params);
  const EvalResult ev = evaluate(model, data, Split::kTest);
  write_metrics_tsv(metrics, {{variant_name(cfg.model.variant), ev}});
  out << variant_name(cfg.model.variant);
  if (!tr.loss_curve.empty()) out << " train loss " << fmtd("%.4f", tr.loss_curve.back());
  out << " test macro-F1 " << fmtd("%.4f", ev.macro_f1) << "\n";
  out << "wrote " << params << "\n";
  out << "wrote " << metrics << "\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
  Dataset data = load_corpus(cfg);
  Model model = make_model(cfg.model);
  const std::string params = (fs::path(cfg.out_dir) / "params.bin").string();
  const bool have_params = fs::exists(params);
  if (have_params) load_params(model, params);
  const EvalResult ev = evaluate(model, data, Split::kTest);
  fs::create_directories(cfg.out_dir);
  const std::string metrics = (fs::path(cfg.out_dir) / "metrics.tsv").string();
  write_metrics_tsv(metrics, {{variant_name(cfg.model.variant), ev}});
  out << (have_params ? "evaluated saved parameters from " + params
                      : "no " + params + ", evaluating a fresh initialization")
      << "\n";
  out << variant_name(cfg.model.variant) << " test macro-F1 " << fmtd("%.4f", ev.macro_f1)
      << "\n";
  out << "wrote " << metrics << "\n";
  return 0;
}

int cmd_ablate(const RunConfig& cfg, std::ostream& out) {
  Dataset data = load_corpus(cfg);
  const std::size_t threads = ablation_threads();
  const std::vector<AblationCell> cells = ablation_sweep(
      cfg.model, data, cfg.trainer, cfg.ablation_alphas, cfg.ablation_schemes, threads);
  fs::create_directories(cfg.out_dir);
  const std::string grid = (fs::path(cfg.out_dir) / "grid.tsv").string();
  write_grid_tsv(grid, cells);
  for (Variant s : cfg.ablation_schemes) {
    const AblationCell* best = nullptr;
    for (const AblationCell& cell : cells)
      if (cell.scheme == s && (!best || cell.eval.macro_f1 > best->eval.macro_f1)) best = &cell;
    out << "best " << variant_name(s) << ": alpha=" << fmtd("%g", best->alpha)
        << " macro-F1 " << fmtd("%.4f", best->eval.macro_f1) << "\n";
  }
  out << "wrote " << grid << "\n";
  return 0;
}

namespace {

struct CheckContext {
  std::uint64_t seed = 1;
  std::string fault;
};

struct Check {
  const char* name;
  std::function<void(const CheckContext&)> fn;
};

[[noreturn]] void fail_check(const std::string& msg, std::uint64_t seed) {
  throw std::runtime_error(msg + " (seed " + std::to_string(seed) + ")");
}

ModelConfig verify_model_config(Variant v, std::uint64_t seed) {
  ModelConfig cfg;
  cfg.variant = v;
  cfg.encoder.d = 8;
  cfg.encoder.blocks = 1;
  cfg.encoder.heads = 2;
  cfg.encoder.ff = 8;
  cfg.encoder.conv_kernels = {6, 4};
  cfg.encoder.conv_strides = {6, 4};
  cfg.encoder.conv_channels = {4, 8};
  cfg.encoder.vocab = 16;
  cfg.fusion_blocks = 1;
  cfg.otk_p = 2;
  cfg.otk_tol = 1e-300;  // fixed sweep count keeps finite differences clean
  cfg.otk_max_iter = 25;
  cfg.head_hidden = 8;
  cfg.seed = seed;
  return cfg;
}

UtteranceRecord verify_record(Label label, std::uint64_t seed) {
  UtteranceRecord r;
  r.id = "verify";
  r.label = label;
  r.audio.samples.resize(60);
  Rng rng(seed);
  for (double& s : r.audio.samples) s = rng.uniform(-0.5, 0.5);
  r.english.tokens = {static_cast<std::size_t>(label) + 1, 4, 5, 6};
  return r;
}

void check_op_gradients(const CheckContext& ctx) {
  for (std::uint64_t s = ctx.seed; s < ctx.seed + 3; ++s) {
    Rng rng(s);
    Tensor a = ops::randn(3, 4, rng, 1.0, true);
    Tensor b = ops::randn(4, 2, rng, 1.0, true);
    Tensor gain = ops::randn(1, 2, rng, 0.3, true);
    Tensor bias = ops::randn(1, 2, rng, 0.3, true);
    Tensor weights = ops::randn(3, 2, rng, 1.0, false);
    auto f = [&](const std::vector<Tensor>& in) {
      Tensor y = ops::layer_norm(ops::gelu(ops::matmul(in[0], in[1])), in[2], in[3]);
      return ops::sum_all(ops::mul(ops::softmax_rows(y), weights));
    };
    const double err = grad_check(f, {a, b, gain, bias});
    if (err >= 1e-4)
      fail_check("op gradient relative error " + fmtd("%.3e", err) + " >= 1e-4", s);
  }
}

void check_model_gradients(const CheckContext& ctx) {
  for (std::uint64_t s = ctx.seed; s < ctx.seed + 2; ++s) {
    for (Variant v : {Variant::kBeatsXformer, Variant::kBeatsOtk}) {
      Model m = make_model(verify_model_config(v, s));
      UtteranceRecord rec = verify_record(Label::kQuestion, s + 17);
      std::vector<Tensor> params;
      visit_params(m, [&](const std::string&, Tensor& t) { params.push_back(t); });
      auto f = [&](const std::vector<Tensor>&) { return forward(m, rec).loss; };
      const double err = grad_check(f, params);
      const double budget = v == Variant::kBeatsOtk ? 1e-3 : 1e-4;
      if (err >= budget)
        fail_check(variant_name(v) + " gradient relative error " + fmtd("%.3e", err) +
                       " >= " + fmtd("%.0e", budget),
                   s);
    }
  }
}

void check_sinkhorn_marginals(const CheckContext& ctx) {
  const double tol = ctx.fault == "sinkhorn_tol" ? 5e-2 : 1e-6;
  for (int t = 0; t < 5; ++t) {
    const std::uint64_t s = ctx.seed * 100 + static_cast<std::uint64_t>(t);
    Rng rng(s);
    const std::size_t n = 2 + static_cast<std::size_t>(rng.below(15));
    const std::size_t p = 2 + static_cast<std::size_t>(rng.below(7));
    Tensor cost(n, p);
    for (std::size_t i = 0; i < cost.size(); ++i) cost.data()[i] = rng.uniform();
    const TransportPlan tp = sinkhorn(cost, 0.1, tol, 500);
    // Marginals recomputed from the plan itself, not trusting the residual field.
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < p; ++j) row += tp.plan.at(i, j);
      worst = std::max(worst, std::abs(row - 1.0 / static_cast<double>(n)));
    }
    for (std::size_t j = 0; j < p; ++j) {
      double col = 0.0;
      for (std::size_t i = 0; i < n; ++i) col += tp.plan.at(i, j);
      worst = std::max(worst, std::abs(col - 1.0 / static_cast<double>(p)));
    }
    if (worst >= 1e-6)
      fail_check("marginal residual " + fmtd("%.3e", worst) + " >= 1e-6 on a " +
                     std::to_string(n) + "x" + std::to_string(p) + " cost",
                 s);
    for (std::size_t k = 1; k < tp.residual_history.size(); ++k)
      if (tp.residual_history[k] > tp.residual_history[k - 1] + 1e-12)
        fail_check("residual increased at sweep " + std::to_string(k), s);
  }
}

void check_sinkhorn_vs_exact(const CheckContext& ctx) {
  for (std::size_t n = 3; n <= 4; ++n) {
    for (int t = 0; t < 2; ++t) {
      const std::uint64_t s = ctx.seed * 1000 + n * 10 + static_cast<std::uint64_t>(t);
      Rng rng(s);
      Tensor cost(n, n);
      for (std::size_t i = 0; i < cost.size(); ++i) cost.data()[i] = rng.uniform();
      const ExactPlan exact = exact_ot_oracle(cost);
      const TransportPlan tp = sinkhorn(cost, 1e-3, 1e-9, 20000);
      double entropic = 0.0;
      for (std::size_t i = 0; i < cost.size(); ++i)
        entropic += tp.plan.data()[i] * cost.data()[i];
      const double slack = static_cast<double>(n) * tp.residual + 1e-12;
      const double band = 0.01 * std::max(std::abs(exact.cost), 1e-3);
      if (entropic < exact.cost - slack || entropic > exact.cost + band)
        fail_check("entropic cost " + fmtd("%.9f", entropic) + " outside 1% of exact " +
                       fmtd("%.9f", exact.cost),
                   s);
    }
  }
}

void check_otk_permutation_invariance(const CheckContext& ctx) {
  Rng rng(ctx.seed);
  Tensor features = ops::randn(5, 4, rng, 1.0, false);
  Tensor refs = make_reference_set(3, 4, rng);
  const Tensor base = otk_pool(features, refs, 0.1, 1e-9, 500).embedding;
  std::vector<std::size_t> idx = {0, 1, 2, 3, 4};
  for (int t = 0; t < 10; ++t) {
    rng.shuffle(idx);
    Tensor shuffled = ops::gather_rows(features, idx);
    const Tensor emb = otk_pool(shuffled, refs, 0.1, 1e-9, 500).embedding;
    for (std::size_t k = 0; k < base.size(); ++k)
      if (std::abs(emb.data()[k] - base.data()[k]) >= 1e-9)
        fail_check("permuted embedding deviates by " +
                       fmtd("%.3e", std::abs(emb.data()[k] - base.data()[k])),
                   ctx.seed);
  }
  Tensor one = ops::randn(1, 4, rng, 1.0, false);
  Tensor ref1 = make_reference_set(1, 4, rng);
  const Tensor emb = otk_pool(one, ref1, 0.5, 1e-9, 50).embedding;
  for (std::size_t k = 0; k < 4; ++k)
    if (emb.data()[k] != one.data()[k])
      fail_check("1x1 transport is not the identity", ctx.seed);
}

void check_wav_round_trip(const CheckContext& ctx) {
  Rng rng(ctx.seed);
  Waveform w;
  w.samples.resize(2000);
  for (std::size_t i = 0; i < w.samples.size(); ++i)
    w.samples[i] = 0.8 * std::sin(0.03 * static_cast<double>(i)) + rng.uniform(-0.1, 0.1);
  const std::string path =
      (fs::temp_directory_path() / ("beats_verify_wav_" + std::to_string(ctx.seed) + ".wav"))
          .string();
  write_wav(w, path);
  const Waveform back = read_wav(path);
  fs::remove(path);
  if (back.samples.size() != w.samples.size() || back.sample_rate != w.sample_rate)
    fail_check("wav round trip changed shape", ctx.seed);
  for (std::size_t i = 0; i < w.samples.size(); ++i)
    if (std::abs(back.samples[i] - w.samples[i]) > 1.0 / 32768.0)
      fail_check("wav sample " + std::to_string(i) + " off by " +
                     fmtd("%.3e", std::abs(back.samples[i] - w.samples[i])),
                 ctx.seed);
}

void check_manifest_round_trip(const CheckContext& ctx) {
  GeneratorConfig gen;
  gen.count_request = 2;
  gen.count_question = 2;
  gen.count_order = 2;
  gen.seed = ctx.seed;
  const fs::path dir_a = fs::temp_directory_path() / "beats_verify_corpus_a";
  const fs::path dir_b = fs::temp_directory_path() / "beats_verify_corpus_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  const Dataset ds = generate_dataset(gen, AugmentationConfig{}, dir_a.string());
  const Dataset loaded = load_manifest((dir_a / "manifest.tsv").string());
  if (loaded.records.size() != ds.records.size())
    fail_check("manifest round trip changed the record count", ctx.seed);
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const UtteranceRecord& want = ds.records[i];
    const UtteranceRecord& got = loaded.records[i];
    if (got.id != want.id || got.label != want.label || got.split != want.split ||
        got.bengali.tokens != want.bengali.tokens || got.english.tokens != want.english.tokens)
      fail_check("manifest round trip changed record " + want.id, ctx.seed);
  }
  generate_dataset(gen, AugmentationConfig{}, dir_b.string());
  const std::uint64_t ck_a = dataset_checksum((dir_a / "manifest.tsv").string());
  const std::uint64_t ck_b = dataset_checksum((dir_b / "manifest.tsv").string());
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  if (ck_a != ck_b) fail_check("regeneration changed corpus bytes", ctx.seed);
}

void check_params_round_trip(const CheckContext& ctx) {
  Model saved = make_model(verify_model_config(Variant::kBeatsXformer, ctx.seed));
  const std::string path =
      (fs::temp_directory_path() / ("beats_verify_params_" + std::to_string(ctx.seed) + ".bin"))
          .string();
  save_params(saved, path);
  Model loaded = make_model(verify_model_config(Variant::kBeatsXformer, ctx.seed + 1));
  load_params(loaded, path);
  fs::remove(path);
  bool same = true;
  std::vector<Tensor> a, b;
  visit_params(saved, [&](const std::string&, Tensor& t) { a.push_back(t); });
  visit_params(loaded, [&](const std::string&, Tensor& t) { b.push_back(t); });
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::memcmp(a[i].data(), b[i].data(), sizeof(double) * a[i].size()) != 0) same = false;
  if (!same) fail_check("parameter file round trip is not bitwise", ctx.seed);
}

void check_oracle_separability(const CheckContext& ctx) {
  GeneratorConfig gen;
  gen.noise = 0.0;
  gen.marker_noise = 0.0;
  gen.seed = ctx.seed;
  for (int c = 0; c < 3; ++c) {
    const Label label = static_cast<Label>(c);
    for (int i = 0; i < 5; ++i) {
      const std::uint64_t s = derive_seed(ctx.seed, static_cast<std::uint64_t>(c * 5 + i));
      const SynthUtterance u = synth_utterance(label, gen, s);
      if (audio_oracle(u.audio).label != label)
        fail_check("audio oracle missed a noiseless " + label_name(label), s);
      if (text_oracle(u.english) != label)
        fail_check("text oracle missed a clean " + label_name(label), s);
      if (bimodal_oracle(u.audio, u.english) != label)
        fail_check("bimodal oracle missed a clean " + label_name(label), s);
    }
  }
}

void check_loss_weight_arithmetic(const CheckContext& ctx) {
  const double alphas[] = {0.1, 0.15, 0.2, 0.25, 0.3};
  const double betas[] = {0.8, 0.7, 0.6, 0.5, 0.4};
  for (int i = 0; i < 5; ++i)
    if (std::abs(ablation_weights(alphas[i]).beta - betas[i]) > 1e-12)
      fail_check("beta sequence broke at alpha=" + fmtd("%g", alphas[i]), ctx.seed);
  const double val = joint_loss(LossWeights{0.15, 0.7, 0.15}, Tensor::scalar(1.0),
                                Tensor::scalar(2.0), Tensor::scalar(3.0))
                         .item();
  if (std::abs(val - 2.0) > 1e-12)
    fail_check("joint loss arithmetic drifted: " + fmtd("%.17g", val), ctx.seed);
  const double zero = joint_loss(LossWeights{}, Tensor::scalar(0.0), Tensor::scalar(0.0),
                                 Tensor::scalar(0.0))
                          .item();
  if (zero != 0.0) fail_check("joint loss is nonzero at zero losses", ctx.seed);
}

void check_forward_determinism(const CheckContext& ctx) {
  UtteranceRecord rec = verify_record(Label::kRequest, ctx.seed + 3);
  Model m1 = make_model(verify_model_config(Variant::kBeatsXformer, ctx.seed));
  Model m2 = make_model(verify_model_config(Variant::kBeatsXformer, ctx.seed));
  const ForwardResult a = forward(m1, rec);
  const ForwardResult b = forward(m2, rec);
  if (std::memcmp(a.probs.data(), b.probs.data(), 3 * sizeof(double)) != 0)
    fail_check("same seed produced different probabilities", ctx.seed);

  Model so = make_model(verify_model_config(Variant::kSpeechOnly, ctx.seed));
  const ForwardResult before = forward(so, rec);
  rec.english.tokens = {2, 9, 9};
  const ForwardResult after = forward(so, rec);
  if (std::memcmp(before.probs.data(), after.probs.data(), 3 * sizeof(double)) != 0)
    fail_check("speech_only output depends on text tokens", ctx.seed);
}

const std::vector<Check>& verify_registry() {
  static const std::vector<Check> checks = {
      {"op_gradients", check_op_gradients},
      {"model_gradients", check_model_gradients},
      {"sinkhorn_marginals", check_sinkhorn_marginals},
      {"sinkhorn_vs_exact", check_sinkhorn_vs_exact},
      {"otk_permutation_invariance", check_otk_permutation_invariance},
      {"wav_round_trip", check_wav_round_trip},
      {"manifest_round_trip", check_manifest_round_trip},
      {"params_round_trip", check_params_round_trip},
      {"oracle_separability", check_oracle_separability},
      {"loss_weight_arithmetic", check_loss_weight_arithmetic},
      {"forward_determinism", check_forward_determinism},
  };
  return checks;
}

}  // namespace

int cmd_verify(const VerifyOptions& opts, std::ostream& out) {
  if (!opts.fault.empty() && opts.fault != "sinkhorn_tol")
    throw ValidationError("unknown fault '" + opts.fault + "' (known faults: sinkhorn_tol)");
  const CheckContext ctx{opts.seed, opts.fault};
  const auto start = std::chrono::steady_clock::now();
  std::size_t passed = 0;
  for (const Check& c : verify_registry()) {
    try {
      c.fn(ctx);
      out << "PASS " << c.name << "\n";
      ++passed;
    } catch (const std::exception& e) {
      out << "FAIL " << c.name << ": " << e.what() << "\n";
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const std::size_t total = verify_registry().size();
  out << passed << "/" << total << " checks passed in " << fmtd("%.1f", secs) << "s\n";
  return passed == total ? 0 : 2;
}

std::vector<std::string> verify_check_names() {
  std::vector<std::string> names;
  for (const Check& c : verify_registry()) names.push_back(c.name);
  return names;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const NumericError*>(&e)) return 2;
  if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const IoError*>(&e) ||
      dynamic_cast<const DimError*>(&e) || dynamic_cast<const IndexError*>(&e))
    return 1;
  return 2;
}

}  // namespace beats
