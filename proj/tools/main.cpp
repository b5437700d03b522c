#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "flatten/error.hpp"
#include "runner/experiments.hpp"

namespace runner = flatten::runner;

int main(int argc, char** argv) {
  CLI::App app{"flatten: experiments on self-similar measures, their curve pushforwards and Fourier transforms"};
  app.require_subcommand(1);
  app.footer(runner::config_reference());

  std::string config_path;
  std::string out_dir = "flatten-out";
  unsigned threads = 0;
  std::int64_t seed = -1;

  for (runner::Experiment e : runner::all_experiments()) {
    CLI::App* sub = app.add_subcommand(runner::experiment_name(e), runner::experiment_summary(e));
    sub->add_option("--config", config_path, "config file (key = value lines)")->required();
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--threads", threads, "worker threads; 0 uses every core")->capture_default_str();
    sub->add_option("--seed", seed, "overrides the config seed")->check(CLI::NonNegativeNumber);
    sub->footer(runner::config_reference());
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const auto kind = runner::experiment_from_name(app.get_subcommands().front()->get_name());
  runner::RunOptions options;
  options.out_dir = out_dir;
  options.threads = threads;
  if (seed >= 0) options.seed = static_cast<std::uint64_t>(seed);

  try {
    const runner::Config config = runner::Config::load(config_path);
    const runner::RunSummary summary = runner::run_experiment(*kind, config, options);
    for (const auto& f : summary.files) std::cout << f.string() << "\n";
    return 0;
  } catch (const flatten::Error& e) {
    std::cerr << "flatten: " << e.what() << "\n";
    return runner::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "flatten: " << e.what() << "\n";
    return 4;
  }
}
