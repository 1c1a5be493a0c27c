#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "beats/generator.hpp"
#include "beats/model.hpp"

namespace beats {

// Everything a command needs, parsed from one flat key=value config file.
// One seed drives generation and model initialization; --seed replaces it.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string dataset_dir = "data/default";
  std::string out_dir = "out";
  GeneratorConfig generator;
  AugmentationConfig augment;
  ModelConfig model;
  TrainConfig trainer;
  std::vector<double> ablation_alphas = {0.1, 0.15, 0.2, 0.25, 0.3};
  std::vector<Variant> ablation_schemes = {Variant::kBeatsXformer, Variant::kBeatsOtk};
};

// Parses and fully validates a config file. Format: one `key = value` per
// line, `#` starts a comment, lists are space-separated. Unknown or duplicate
// keys and malformed values fail with the offending line number; no command
// does any work on a config that fails any module's validation.
RunConfig parse_run_config(const std::string& path);

void override_seed(RunConfig& cfg, std::uint64_t seed);

// BEATS_THREADS caps ablation fan-out; unset, empty, or 0 means 1.
std::size_t ablation_threads();

// Commands return the process exit code on success and throw on failure;
// exit_code_for maps exceptions to the contract (1 validation/config/file,
// 2 numerical/runtime).
int cmd_gen_data(const RunConfig& cfg, std::ostream& out);
int cmd_train(const RunConfig& cfg, std::ostream& out);
int cmd_eval(const RunConfig& cfg, std::ostream& out);
int cmd_ablate(const RunConfig& cfg, std::ostream& out);

struct VerifyOptions {
  std::uint64_t seed = 1;
  std::string fault;  // "" or "sinkhorn_tol" (deliberately loosened tolerance)
};
// Runs the invariant registry, one PASS/FAIL line per check; returns 0 when
// every check passes, 2 otherwise.
int cmd_verify(const VerifyOptions& opts, std::ostream& out);
std::vector<std::string> verify_check_names();

int exit_code_for(const std::exception& e);

}  // namespace beats
