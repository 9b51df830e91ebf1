#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "pcg/config.hpp"
#include "pcg/data.hpp"
#include "pcg/graph.hpp"

namespace pcg {

/// Process exit codes of the experiment runner.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitDataMissing = 3,
  kExitDivergence = 4,
  kExitCheckpoint = 5,
};

struct RunOptions {
  std::string verb = "train";  // train | query | evaluate | am | baseline
  std::string checkpoint;      // train: where to save; other verbs: graph to load
  std::string out_dir;         // overrides experiment.output_dir
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

struct Datasets {
  ImageDataset train;
  ImageDataset test;
};

/// MNIST from the configured directory, or synthetic digits.
Datasets load_datasets(const DataConfig& data, std::uint64_t seed);

/// Builds the untrained graph described by the [topology] section.
PCGraph build_graph(const TopologyConfig& topology, Index pixels, bool labels);

/// Seed of the corruption applied to the i-th evaluation image.
std::uint64_t corruption_seed(std::uint64_t seed, Index i);

struct RunOutcome {
  std::string report;       // JSON text
  std::string report_path;
};

/// Applies the run options to the config, executes the verb and writes the
/// artifacts (report.json, CSV traces, PGM grids, checkpoint) under the output
/// directory. Throws on failure.
RunOutcome execute(ExperimentConfig config, const RunOptions& options, std::ostream& log);

/// execute() with every failure mapped to an ExitCode and a diagnostic on `err`.
int run(const ExperimentConfig& config, const RunOptions& options, std::ostream& log, std::ostream& err);
int run(const std::string& config_path, const RunOptions& options, std::ostream& log, std::ostream& err);

}  // namespace pcg
