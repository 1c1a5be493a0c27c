#include "beats/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "beats/errors.hpp"
#include <doctest.h>

using namespace beats;
namespace fs = std::filesystem;

#ifndef BEATS_BINARY_PATH
#define BEATS_BINARY_PATH "./beats"
#endif

namespace {

std::string tmp(const std::string& name) {
  return (fs::temp_directory_path() / name).string();
}

std::string write_config(const std::string& name, const std::string& body) {
  const std::string path = tmp(name);
  std::ofstream os(path, std::ios::trunc);
  os << body;
  return path;
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Tiny noiseless corpus + aggressive conv downsampling so training runs in
// milliseconds; 4/4/4 records with one test record per class.
std::string tiny_pipeline_config(const std::string& data_dir, const std::string& out_dir,
                                 const std::string& extra = "", int epochs = 25) {
  return "seed = 11\n"
         "data.dir = " + data_dir + "\n"
         "out.dir = " + out_dir + "\n"
         "gen.count_request = 4\n"
         "gen.count_question = 4\n"
         "gen.count_order = 4\n"
         "gen.noise = 0\n"
         "gen.marker_noise = 0\n"
         "gen.val_frac = 0\n"
         "gen.test_frac = 0.25\n"
         "encoder.d = 8\n"
         "encoder.blocks = 1\n"
         "encoder.heads = 2\n"
         "encoder.ff = 8\n"
         "encoder.conv_kernels = 256 16\n"
         "encoder.conv_strides = 256 16\n"
         "encoder.conv_channels = 4 8\n"
         "fusion.blocks = 1\n"
         "otk.p = 2\n"
         "head.hidden = 8\n"
         "train.epochs = " + std::to_string(epochs) + "\n"
         "train.lr = 0.003\n"
         "train.batch = 8\n" +
         extra;
}

int count_occurrences(const std::string& hay, const std::string& needle) {
  int n = 0;
  for (std::size_t pos = hay.find(needle); pos != std::string::npos;
       pos = hay.find(needle, pos + needle.size()))
    ++n;
  return n;
}

}  // namespace

TEST_CASE("config parsing applies defaults and reads every section") {
  const std::string path = write_config("beats_cli_full.conf",
                                        "# full exercise\n"
                                        "seed = 42\n"
                                        "data.dir = /tmp/corpus\n"
                                        "out.dir = /tmp/out\n"
                                        "gen.count_request = 5   # trailing comment\n"
                                        "gen.marker_noise = 0.1\n"
                                        "gen.ambiguity = 0.25\n"
                                        "aug.copies = 2\n"
                                        "aug.synonym_prob = 0.5\n"
                                        "aug.snr_min_db = 10\n"
                                        "aug.snr_max_db = 20\n"
                                        "\n"
                                        "model.variant = beats_otk\n"
                                        "encoder.d = 16\n"
                                        "encoder.conv_kernels = 64 8 4\n"
                                        "encoder.conv_strides = 64 8 4\n"
                                        "encoder.conv_channels = 8 8 16\n"
                                        "otk.p = 4\n"
                                        "otk.epsilon = 0.2\n"
                                        "loss.alpha = 0.1\n"
                                        "loss.beta = 0.8\n"
                                        "loss.gamma = 0.1\n"
                                        "train.epochs = 3\n"
                                        "train.lr = 0.01\n"
                                        "ablate.alphas = 0.2 0.25\n"
                                        "ablate.schemes = beats_xformer\n");
  RunConfig cfg = parse_run_config(path);
  CHECK(cfg.seed == 42);
  CHECK(cfg.dataset_dir == "/tmp/corpus");
  CHECK(cfg.out_dir == "/tmp/out");
  CHECK(cfg.generator.count_request == 5);
  CHECK(cfg.generator.count_question == 35);  // untouched default
  CHECK(cfg.generator.marker_noise == 0.1);
  CHECK(cfg.generator.ambiguity == 0.25);
  CHECK(cfg.generator.seed == 42);  // one seed drives everything
  CHECK(cfg.augment.copies == 2);
  CHECK(cfg.augment.synonym_prob == 0.5);
  CHECK(cfg.augment.snr_min_db == 10.0);
  CHECK(cfg.model.variant == Variant::kBeatsOtk);
  CHECK(cfg.model.encoder.d == 16);
  CHECK(cfg.model.encoder.conv_kernels == std::vector<std::size_t>{64, 8, 4});
  CHECK(cfg.model.otk_p == 4);
  CHECK(cfg.model.otk_epsilon == 0.2);
  CHECK(cfg.model.loss.alpha == 0.1);
  CHECK(cfg.model.loss.beta == 0.8);
  CHECK(cfg.model.seed == 42);
  CHECK(cfg.trainer.epochs == 3);
  CHECK(cfg.trainer.lr == 0.01);
  CHECK(cfg.trainer.batch == 8);  // default
  CHECK(cfg.ablation_alphas == std::vector<double>{0.2, 0.25});
  CHECK(cfg.ablation_schemes == std::vector<Variant>{Variant::kBeatsXformer});
  fs::remove(path);

  const std::string empty = write_config("beats_cli_empty.conf", "# defaults only\n");
  RunConfig defaults = parse_run_config(empty);
  CHECK(defaults.seed == 1);
  CHECK(defaults.model.variant == Variant::kBeatsXformer);
  CHECK(defaults.ablation_alphas == std::vector<double>{0.1, 0.15, 0.2, 0.25, 0.3});
  CHECK(defaults.ablation_schemes ==
        std::vector<Variant>{Variant::kBeatsXformer, Variant::kBeatsOtk});
  fs::remove(empty);
}

TEST_CASE("config errors carry line numbers") {
  auto expect_error = [](const std::string& body, const std::string& needle) {
    const std::string path = write_config("beats_cli_bad.conf", body);
    CHECK_THROWS_WITH_AS(parse_run_config(path), doctest::Contains(needle.c_str()), ValidationError);
    fs::remove(path);
  };
  expect_error("seed = 1\nnonsense without equals\n", "line 2");
  expect_error("train.lr = fast\n", "line 1");
  expect_error("train.lr = fast\n", "not a number");
  expect_error("train.epochs = -3\n", "nonnegative integer");
  expect_error("seed = 1\nseed = 2\n", "duplicate key");
  expect_error("gen.countt_request = 5\n", "unknown key");
  expect_error("\n\nmodel.variant = wav2vec\n", "line 3");
  expect_error("ablate.schemes = beats_xformer speech2text\n", "unknown variant");
  expect_error("ablate.alphas =\n", "at least one value");
  CHECK_THROWS_AS(parse_run_config(tmp("beats_no_such.conf")), IoError);
}

TEST_CASE("config validation runs module validators before any command work") {
  auto expect_error = [](const std::string& body, const std::string& needle) {
    const std::string path = write_config("beats_cli_invalid.conf", body);
    CHECK_THROWS_WITH_AS(parse_run_config(path), doctest::Contains(needle.c_str()), ValidationError);
    fs::remove(path);
  };
  expect_error("loss.alpha = 0.4\n", "sum to 1");
  expect_error("encoder.dropout = 1.5\n", "dropout");
  expect_error("encoder.conv_channels = 8 16 31\n", "conv layer");
  expect_error("ablate.alphas = 0.1 0.7\n", "alpha");
  expect_error("gen.val_frac = 0.6\ngen.test_frac = 0.6\n", "below 1");
}

TEST_CASE("seed override flows to generator and model") {
  const std::string path = write_config("beats_cli_seed.conf", "seed = 9\n");
  RunConfig cfg = parse_run_config(path);
  CHECK(cfg.generator.seed == 9);
  CHECK(cfg.model.seed == 9);
  override_seed(cfg, 1234);
  CHECK(cfg.seed == 1234);
  CHECK(cfg.generator.seed == 1234);
  CHECK(cfg.model.seed == 1234);
  fs::remove(path);
}

TEST_CASE("ablation thread cap reads BEATS_THREADS") {
  unsetenv("BEATS_THREADS");
  CHECK(ablation_threads() == 1);
  setenv("BEATS_THREADS", "", 1);
  CHECK(ablation_threads() == 1);
  setenv("BEATS_THREADS", "0", 1);
  CHECK(ablation_threads() == 1);
  setenv("BEATS_THREADS", "4", 1);
  CHECK(ablation_threads() == 4);
  setenv("BEATS_THREADS", "many", 1);
  CHECK_THROWS_AS(ablation_threads(), ValidationError);
  unsetenv("BEATS_THREADS");
}

TEST_CASE("gen-data reports counts and a stable checksum") {
  const std::string dir = tmp("beats_cli_gen_corpus");
  fs::remove_all(dir);
  const std::string path = write_config(
      "beats_cli_gen.conf", "seed = 5\ndata.dir = " + dir +
                                "\ngen.count_request = 2\ngen.count_question = 2\n"
                                "gen.count_order = 2\n");
  RunConfig cfg = parse_run_config(path);
  std::ostringstream out1;
  CHECK(cmd_gen_data(cfg, out1) == 0);
  CHECK(out1.str().find("6 records (2/2/2)") != std::string::npos);
  CHECK(out1.str().find("checksum ") != std::string::npos);
  CHECK(fs::exists(fs::path(dir) / "manifest.tsv"));

  std::ostringstream out2;
  CHECK(cmd_gen_data(cfg, out2) == 0);
  CHECK(out1.str() == out2.str());

  override_seed(cfg, 6);
  std::ostringstream out3;
  CHECK(cmd_gen_data(cfg, out3) == 0);
  CHECK(out3.str() != out1.str());
  fs::remove_all(dir);
  fs::remove(path);
}

TEST_CASE("train then eval reuse parameters and emit identical metrics") {
  const std::string dir = tmp("beats_cli_flow_corpus");
  const std::string out_dir = tmp("beats_cli_flow_out");
  fs::remove_all(dir);
  fs::remove_all(out_dir);
  const std::string path = write_config(
      "beats_cli_flow.conf",
      tiny_pipeline_config(dir, out_dir, "model.variant = speech_only\n"));
  RunConfig cfg = parse_run_config(path);
  std::ostringstream gen_out;
  REQUIRE(cmd_gen_data(cfg, gen_out) == 0);
  CHECK(gen_out.str().find("12 records (4/4/4)") != std::string::npos);

  std::ostringstream train_out;
  REQUIRE(cmd_train(cfg, train_out) == 0);
  CHECK(fs::exists(fs::path(out_dir) / "params.bin"));
  CHECK(fs::exists(fs::path(out_dir) / "metrics.tsv"));
  const std::string trained_metrics = read_file((fs::path(out_dir) / "metrics.tsv").string());
  CHECK(trained_metrics.rfind("variant\tclass\tprecision\trecall\tf1\n", 0) == 0);

  // The noiseless corpus is fully separable, so the trained speech_only model
  // must beat the majority-class baseline on the test split.
  {
    Dataset data = load_manifest((fs::path(dir) / "manifest.tsv").string());
    std::array<std::size_t, 3> counts{};
    std::size_t total = 0;
    for (const UtteranceRecord* r : data.split_view(Split::kTest)) {
      counts[static_cast<std::size_t>(r->label)] += 1;
      ++total;
    }
    REQUIRE(total == 3);
    const double baseline =
        static_cast<double>(*std::max_element(counts.begin(), counts.end())) /
        static_cast<double>(total);
    std::istringstream ms(trained_metrics);
    std::string line;
    double macro_f1 = -1.0;
    while (std::getline(ms, line)) {
      std::istringstream ls(line);
      std::string variant, klass, p, r, f1;
      std::getline(ls, variant, '\t');
      std::getline(ls, klass, '\t');
      std::getline(ls, p, '\t');
      std::getline(ls, r, '\t');
      std::getline(ls, f1, '\t');
      if (klass == "macro") macro_f1 = std::stod(f1);
    }
    REQUIRE(macro_f1 >= 0.0);
    CHECK(macro_f1 > baseline);
  }

  std::ostringstream eval_out;
  REQUIRE(cmd_eval(cfg, eval_out) == 0);
  CHECK(eval_out.str().find("evaluated saved parameters") != std::string::npos);
  CHECK(read_file((fs::path(out_dir) / "metrics.tsv").string()) == trained_metrics);

  fs::remove(fs::path(out_dir) / "params.bin");
  std::ostringstream fresh_out;
  REQUIRE(cmd_eval(cfg, fresh_out) == 0);
  CHECK(fresh_out.str().find("fresh initialization") != std::string::npos);
  const std::string fresh_metrics = read_file((fs::path(out_dir) / "metrics.tsv").string());
  CHECK(fresh_metrics.rfind("variant\tclass\tprecision\trecall\tf1\n", 0) == 0);
  CHECK(fresh_metrics != trained_metrics);

  fs::remove_all(dir);
  fs::remove_all(out_dir);
  fs::remove(path);
}

TEST_CASE("ablate writes a deterministic grid and honors the thread cap") {
  const std::string dir = tmp("beats_cli_ablate_corpus");
  const std::string out_dir = tmp("beats_cli_ablate_out");
  fs::remove_all(dir);
  fs::remove_all(out_dir);
  const std::string path = write_config(
      "beats_cli_ablate.conf",
      tiny_pipeline_config(dir, out_dir,
                           "ablate.alphas = 0.2 0.3\n"
                           "ablate.schemes = beats_xformer\n",
                           /*epochs=*/1));
  RunConfig cfg = parse_run_config(path);
  std::ostringstream gen_out;
  REQUIRE(cmd_gen_data(cfg, gen_out) == 0);

  std::ostringstream ab1;
  REQUIRE(cmd_ablate(cfg, ab1) == 0);
  CHECK(ab1.str().find("best beats_xformer: alpha=") != std::string::npos);
  const std::string grid = read_file((fs::path(out_dir) / "grid.tsv").string());
  CHECK(grid.rfind("scheme\talpha\tbeta\tclass\tf1\n", 0) == 0);
  CHECK(count_occurrences(grid, "beats_xformer\t0.2\t0.6\t") == 4);
  CHECK(count_occurrences(grid, "beats_xformer\t0.3\t0.4\t") == 4);
  CHECK(count_occurrences(grid, "# best beats_xformer") == 1);

  setenv("BEATS_THREADS", "2", 1);
  std::ostringstream ab2;
  REQUIRE(cmd_ablate(cfg, ab2) == 0);
  unsetenv("BEATS_THREADS");
  CHECK(read_file((fs::path(out_dir) / "grid.tsv").string()) == grid);
  CHECK(ab2.str() == ab1.str());

  fs::remove_all(dir);
  fs::remove_all(out_dir);
  fs::remove(path);
}

TEST_CASE("verify passes fresh and fails under fault injection") {
  std::ostringstream out;
  const int rc = cmd_verify(VerifyOptions{}, out);
  CAPTURE(out.str());
  CHECK(rc == 0);
  const std::vector<std::string> names = verify_check_names();
  CHECK(names.size() >= 10);
  for (const std::string& name : names) {
    CAPTURE(name);
    CHECK(count_occurrences(out.str(), "PASS " + name + "\n") == 1);
    CHECK(count_occurrences(out.str(), "FAIL " + name) == 0);
  }
  CHECK(out.str().find(std::to_string(names.size()) + "/" + std::to_string(names.size()) +
                       " checks passed") != std::string::npos);

  VerifyOptions fault;
  fault.fault = "sinkhorn_tol";
  std::ostringstream fout;
  CHECK(cmd_verify(fault, fout) == 2);
  CHECK(fout.str().find("FAIL sinkhorn_marginals") != std::string::npos);
  CHECK(fout.str().find("PASS op_gradients") != std::string::npos);  // others unaffected
  for (const std::string& name : names)
    CHECK(count_occurrences(fout.str(), name) == 1);

  VerifyOptions unknown;
  unknown.fault = "meteor_strike";
  CHECK_THROWS_AS(cmd_verify(unknown, fout), ValidationError);
}

TEST_CASE("exceptions map to the exit-code contract") {
  CHECK(exit_code_for(ValidationError("bad")) == 1);
  CHECK(exit_code_for(IoError("bad")) == 1);
  CHECK(exit_code_for(DimError("bad")) == 1);
  CHECK(exit_code_for(IndexError("bad")) == 1);
  CHECK(exit_code_for(NumericError("bad")) == 2);
  CHECK(exit_code_for(std::runtime_error("bad")) == 2);
}

TEST_CASE("binary wires commands to exit codes") {
  auto run = [](const std::string& args) {
    const std::string cmd = std::string(BEATS_BINARY_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
  };
  REQUIRE(fs::exists(BEATS_BINARY_PATH));
  CHECK(run("") == 1);                                   // missing subcommand
  CHECK(run("gen-data") == 1);                           // missing --config
  CHECK(run("gen-data --config /no/such/file.conf") == 1);
  CHECK(run("verify --fault-inject meteor_strike") == 1);

  const std::string dir = tmp("beats_cli_bin_corpus");
  fs::remove_all(dir);
  const std::string good = write_config(
      "beats_cli_bin.conf", "seed = 3\ndata.dir = " + dir +
                                "\ngen.count_request = 2\ngen.count_question = 2\n"
                                "gen.count_order = 2\n");
  CHECK(run("gen-data --config " + good) == 0);
  CHECK(fs::exists(fs::path(dir) / "manifest.tsv"));

  const std::string bad = write_config("beats_cli_bin_bad.conf", "loss.alpha = 0.9\n");
  CHECK(run("train --config " + bad) == 1);

  fs::remove_all(dir);
  fs::remove(good);
  fs::remove(bad);
}

TEST_CASE("binary --seed and --out overrides take effect") {
  auto capture = [](const std::string& args) {
    const std::string out_path = tmp("beats_cli_capture.txt");
    const std::string cmd =
        std::string(BEATS_BINARY_PATH) + " " + args + " >" + out_path + " 2>&1";
    const int status = std::system(cmd.c_str());
    std::string text = read_file(out_path);
    fs::remove(out_path);
    REQUIRE(WEXITSTATUS(status) == 0);
    return text;
  };
  const std::string dir = tmp("beats_cli_override_corpus");
  const std::string out_a = tmp("beats_cli_override_a");
  const std::string out_b = tmp("beats_cli_override_b");
  fs::remove_all(dir);
  fs::remove_all(out_a);
  fs::remove_all(out_b);
  const std::string path = write_config(
      "beats_cli_override.conf",
      tiny_pipeline_config(dir, out_a, "model.variant = speech_only\n", /*epochs=*/2));

  const std::string gen_default = capture("gen-data --config " + path);
  const std::string gen_again = capture("gen-data --config " + path + " --seed 11");
  const std::string gen_other = capture("gen-data --config " + path + " --seed 12");
  CHECK(gen_default == gen_again);  // config already says seed 11
  CHECK(gen_other != gen_default);

  capture("gen-data --config " + path);  // restore the seed-11 corpus
  const std::string train_a = capture("train --config " + path);
  const std::string train_b = capture("train --config " + path + " --seed 99 --out " + out_b);
  CHECK(train_a != train_b);  // different init and shuffle order
  CHECK(fs::exists(fs::path(out_b) / "params.bin"));
  CHECK(read_file((fs::path(out_a) / "params.bin").string()) !=
        read_file((fs::path(out_b) / "params.bin").string()));

  fs::remove_all(dir);
  fs::remove_all(out_a);
  fs::remove_all(out_b);
  fs::remove(path);
}
