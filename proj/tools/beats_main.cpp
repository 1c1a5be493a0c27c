#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "beats/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"bengali speech-act classifier workbench"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::string fault;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key=value config file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out", out_dir, "override the output directory");
  };

  CLI::App* gen = app.add_subcommand("gen-data", "generate the synthetic corpus");
  add_common(gen);
  CLI::App* train = app.add_subcommand("train", "train a variant and write params + metrics");
  add_common(train);
  CLI::App* eval = app.add_subcommand("eval", "evaluate saved (or fresh) params on the test split");
  add_common(eval);
  CLI::App* ablate = app.add_subcommand("ablate", "run the alpha grid over the fusion schemes");
  add_common(ablate);
  CLI::App* verify = app.add_subcommand("verify", "run the invariant suite");
  verify->add_option("--seed", seed, "seed for the checks");
  verify->add_option("--fault-inject", fault,
                     "deliberately corrupt a component to prove a check catches it");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;  // flag misuse is a validation failure
  }

  try {
    if (verify->parsed()) {
      beats::VerifyOptions opts;
      if (verify->count("--seed") > 0) opts.seed = seed;
      opts.fault = fault;
      return beats::cmd_verify(opts, std::cout);
    }
    CLI::App* sub = app.get_subcommands().at(0);
    beats::RunConfig cfg = beats::parse_run_config(config_path);
    if (sub->count("--seed") > 0) beats::override_seed(cfg, seed);
    if (sub->count("--out") > 0) cfg.out_dir = out_dir;
    if (gen->parsed()) return beats::cmd_gen_data(cfg, std::cout);
    if (train->parsed()) return beats::cmd_train(cfg, std::cout);
    if (eval->parsed()) return beats::cmd_eval(cfg, std::cout);
    if (ablate->parsed()) return beats::cmd_ablate(cfg, std::cout);
    std::cerr << "error: no command\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return beats::exit_code_for(e);
  }
}
