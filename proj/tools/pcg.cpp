// Command-line front end: pcg <verb> --config FILE [--checkpoint PATH] [--out DIR] [--seed N] [--threads N]

#include <CLI11.hpp>
#include <iostream>

#include "pcg/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Predictive-coding graphs: train, query and evaluate"};
  app.require_subcommand(1);

  std::string config;
  pcg::RunOptions options;
  std::uint64_t seed = 0;
  int threads = 1;

  const std::vector<std::pair<const char*, const char*>> verbs = {
      {"train", "train a graph, save a checkpoint, run the configured tasks"},
      {"query", "generate / reconstruct / denoise with a trained graph"},
      {"evaluate", "classification accuracy on the test split"},
      {"am", "associative memory: memorize, then retrieve from corrupted cues"},
      {"baseline", "train and evaluate the backprop MLP baseline"},
  };
  for (const auto& [name, help] : verbs) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "experiment config (INI)")->required()->check(CLI::ExistingFile);
    sub->add_option("--checkpoint", options.checkpoint, "train: where to save; other verbs: checkpoint to load");
    sub->add_option("--out", options.out_dir, "output directory (overrides experiment.output_dir)");
    sub->add_option("--seed", seed, "override experiment.seed");
    sub->add_option("--threads", threads, "worker threads for batched queries")->check(CLI::PositiveNumber);
    sub->callback([&, verb = std::string(name)] { options.verb = verb; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : pcg::kExitConfig;
  }
  for (CLI::App* sub : app.get_subcommands()) {
    if (sub->get_option("--seed")->count()) options.seed = seed;
    if (sub->get_option("--threads")->count()) options.threads = threads;
  }
  return pcg::run(config, options, std::cout, std::cerr);
}
