// flashsim command-line runner.
//
//   flashsim <experiment> --config cfg.json [--seed N] [--out DIR] [--threads N]
//   flashsim validate --config cfg.json
//
// Exit codes: 0 success, 2 configuration error, 3 runtime error.
#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>

#include "flashsim/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"NAND flash reliability simulator experiment runner"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> threads;

  const std::vector<std::string> kinds = {"characterize", "ecc-curve", "flow-bench",
                                          "lifetime",    "ftl",       "validate"};
  std::vector<CLI::App*> subs;
  for (const auto& k : kinds) {
    CLI::App* s = app.add_subcommand(k);
    s->add_option("--config", config_path, "experiment config (JSON)")->required();
    s->add_option("--seed", seed, "override the config seed");
    s->add_option("--out", out_dir, "output directory override");
    s->add_option("--threads", threads, "worker threads for sweep points");
    subs.push_back(s);
  }

  CLI11_PARSE(app, argc, argv);
  const std::string cmd = app.get_subcommands().front()->get_name();

  nlohmann::json config;
  {
    std::ifstream f(config_path);
    if (!f) {
      std::cerr << "error: cannot open config: " << config_path << "\n";
      return 2;
    }
    try {
      f >> config;
    } catch (const std::exception& e) {
      std::cerr << "error: config is not valid JSON: " << e.what() << "\n";
      return 2;
    }
  }
  if (seed) config["seed"] = *seed;
  if (out_dir) config["out_dir"] = *out_dir;
  if (threads) config["threads"] = *threads;
  if (cmd != "validate") config["experiment"] = cmd;

  if (cmd == "validate") {
    const auto diags = flashsim::validate_config(config);
    if (diags.empty()) {
      std::cout << "config ok\n";
      return 0;
    }
    for (const auto& d : diags) std::cout << "diagnostic: " << d << "\n";
    return 2;
  }

  try {
    const auto files = flashsim::run_experiment(config);
    for (const auto& f : files) std::cout << "wrote " << f << "\n";
    return 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 3;
  }
}
