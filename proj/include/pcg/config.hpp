#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pcg/activation.hpp"
#include "pcg/clamp.hpp"
#include "pcg/data.hpp"
#include "pcg/engine.hpp"
#include "pcg/mlp.hpp"
#include "pcg/tasks.hpp"
#include "pcg/topology.hpp"

namespace pcg {

/// Environment variable naming the default dataset directory.
inline constexpr const char* kDataDirEnv = "PCG_DATA_DIR";

struct DataConfig {
  std::string source = "mnist";  // mnist | synthetic
  std::string dir;               // empty: $PCG_DATA_DIR, then data/mnist
  std::string train_images = "train-images-idx3-ubyte";
  std::string train_labels = "train-labels-idx1-ubyte";
  std::string test_images = "t10k-images-idx3-ubyte";
  std::string test_labels = "t10k-labels-idx1-ubyte";
  Index train_count = 0;  // 0: all
  Index test_count = 0;
  Index synthetic_side = 28;
  bool labels = true;  // append one-hot label vertices to the sensory set

  std::string resolved_dir() const;
};

struct TopologyConfig {
  std::string kind = "fully_connected";  // fully_connected | layered | assembly
  Index n = 2000;
  std::vector<Index> hidden = {256, 256};
  FlowDirection direction = FlowDirection::FromSensory;
  bool lateral = false;
  bool recurrent = false;
  std::vector<Index> clusters = {3000, 3000, 3000, 3000};
  bool back_edges = false;  // add the reverse of every chain edge
  int label_cluster = 0;     // cluster fed by the label vertices
  int pixel_cluster = -1;    // cluster predicting the pixels; -1: last
  double p = 0.1;
  double k = 0.2;
  double attach_p = 1.0;
  Activation activation = Activation::HardTanh;
  double init_gain = 1.0;
  std::uint64_t seed = 0;
};

struct TrainConfig {
  int T = 20;
  double gamma_values = 1.0;
  double alpha_weights = 1e-4;
  double lambda = 0.01;
  int epochs = 20;
  Index batch_size = 32;
  OptimizerKind optimizer = OptimizerKind::Adam;
  InitPolicy internal_init = InitPolicy::zeros();
  std::string label_mode = "conditioned";  // conditioned | initialized
};

struct QueryConfig {
  int T = 2000;
  double gamma_values = 1.0;
  bool early_stop = false;
  std::size_t window = 50;
  double rel_tol = 1e-5;
  InitPolicy free_init = InitPolicy::zeros();
  Index chunk = 100;
};

struct ClassifyConfig {
  Index count = 0;  // test images; 0: all loaded
};

struct GenerateConfig {
  std::vector<int> labels = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
};

struct ReconstructConfig {
  Index count = 100;
  double fraction = 0.5;
  Region region = Region::Bottom;  // the masked band; the top half is given
  QueryMode mode = QueryMode::Conditioning;
  bool with_label = false;
};

struct DenoiseConfig {
  Index count = 100;
  double variance = 0.5;
};

struct AmConfig {
  Index n = 1000;
  Index memories = 50;
  std::vector<CueKind> cues = {CueKind::Half, CueKind::Noisy};
  double variance = 0.2;
  double fraction = 0.5;
  Region region = Region::Top;
  int T = 5;
  double gamma_values = 0.5;
  double alpha_weights = 1e-4;
  double lambda = 0.0;
  int epochs = 500;
  int query_T = 2000;
};

struct BaselineConfig {
  std::vector<Index> hidden = {256, 256};
  Activation activation = Activation::HardTanh;
  MlpOutput output = MlpOutput::Softmax;
  double alpha = 1e-3;
  double lambda = 0.0;
  int epochs = 20;
  Index batch_size = 64;
  bool autoencoder = false;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  std::vector<std::string> tasks = {"classify"};
  int threads = 1;

  DataConfig data;
  TopologyConfig topology;
  TrainConfig train;
  QueryConfig query;
  ClassifyConfig classify;
  GenerateConfig generate;
  ReconstructConfig reconstruct;
  DenoiseConfig denoise;
  AmConfig am;
  BaselineConfig baseline;

  /// Cross-field checks; throws ConfigError listing every problem.
  void validate() const;

  TrainSchedule train_schedule(Index d, Index pixels) const;
  TaskOptions task_options() const;
  BpSchedule baseline_schedule() const;
};

/// Parses an INI-style config. Unknown sections/keys, malformed values and
/// failed validation raise ConfigError with one "section.key: problem" line per issue.
ExperimentConfig parse_config(std::istream& in, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

/// Canonical text form: every field, fixed order, round-trippable through parse_config.
std::string canonical_text(const ExperimentConfig& config);

/// Hex SHA-256 of canonical_text, ignoring output_dir and threads (where and
/// how a run executes, not what it computes).
std::string config_digest(const ExperimentConfig& config);

/// zeros | gaussian:<sigma> | uniform:<lo>:<hi> | forward:<sweeps>
InitPolicy parse_init_policy(const std::string& text);
std::string to_string(const InitPolicy& policy);

std::string to_string(OptimizerKind k);
OptimizerKind parse_optimizer(const std::string& name);

}  // namespace pcg
