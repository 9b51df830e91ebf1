#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pcg/data.hpp"
#include "pcg/engine.hpp"
#include "pcg/graph.hpp"

namespace pcg {

/// Where the pixels and (optional) label vertices live inside the sensory range.
struct SensoryLayout {
  Index pixels = 0;
  Index label_begin = 0;
  Index label_count = 0;

  bool has_labels() const { return label_count > 0; }
  std::vector<Index> pixel_vertices() const;
  std::vector<Index> label_vertices() const;
};

/// Pixels occupy 0..pixels-1; when d == pixels + 10 the last 10 sensory vertices are labels.
SensoryLayout sensory_layout(const PCGraph& graph, Index pixels);

struct TaskOptions {
  QueryOptions query;
  InitPolicy free_init = InitPolicy::zeros();
  std::uint64_t seed = 0;
  Index chunk = 100;  // lanes per inference batch
  int threads = 1;    // chunks run concurrently on this many threads
  /// When set, receives the mean per-lane energy trace of every chunk, in chunk order.
  std::vector<EnergyTrace>* traces = nullptr;
};

enum class QueryMode { Conditioning, Initialization };
enum class CueKind { Half, Noisy };

QueryMode parse_query_mode(const std::string& name);
CueKind parse_cue_kind(const std::string& name);
std::string to_string(QueryMode m);
std::string to_string(CueKind c);

/// Index of the largest entry; ties go to the lowest index.
int argmax_label(const Eigen::Ref<const Vector>& values);

/// Conditions the pixel vertices on each image column and reads the argmax
/// over the label vertices. Throws ConfigError when the graph has no labels.
std::vector<int> classify(const PCGraph& graph, const Eigen::Ref<const Matrix>& images, const TaskOptions& options);
int classify_one(const PCGraph& graph, const Eigen::Ref<const Vector>& image, const TaskOptions& options);

/// Conditions the label vertices on each one-hot label; returns the pixel values, clipped to [0, 1].
Matrix generate(const PCGraph& graph, const std::vector<int>& labels, Index pixels, const TaskOptions& options);

/// Fills in the unknown pixels of each column. In conditioning mode the known
/// pixels (and the labels, if given) are held; in initialization mode they
/// only seed the run. Output is clipped to [0, 1].
Matrix reconstruct(const PCGraph& graph, const Eigen::Ref<const Matrix>& images, const std::vector<Index>& known,
                   QueryMode mode, const std::vector<int>* labels, const TaskOptions& options);

/// Query by initialization from the noisy pixels; returns final pixel values, clipped.
Matrix denoise(const PCGraph& graph, const Eigen::Ref<const Matrix>& noisy, const TaskOptions& options);

struct RetrievalResult {
  Matrix images;
  Vector mse;
  std::vector<bool> success;
  double rate = 0.0;
};

inline constexpr double kRetrievalThreshold = 1e-3;

/// Half cues are completed by conditioning on `known`; noisy cues by
/// initialization. A memory counts as retrieved when its full-image MSE is
/// below `threshold`.
RetrievalResult am_retrieve(const PCGraph& graph, const Eigen::Ref<const Matrix>& memories,
                            const Eigen::Ref<const Matrix>& cues, const std::vector<Index>& known, CueKind kind,
                            const TaskOptions& options, double threshold = kRetrievalThreshold);

struct AccuracyReport {
  double accuracy = 0.0;
  Index count = 0;
  std::array<std::array<long, kClasses>, kClasses> confusion{};  // [true][predicted]
};

using BatchClassifier = std::function<std::vector<int>(const Matrix& images)>;

AccuracyReport evaluate_accuracy(const BatchClassifier& classifier, const ImageDataset& data);
AccuracyReport evaluate_accuracy(const PCGraph& graph, const ImageDataset& data, const TaskOptions& options);

/// Outcome of one task run, ready to be serialized into a report.
struct TaskResult {
  std::string task;
  Matrix outputs;
  std::vector<int> predicted;
  std::map<std::string, double> metrics;
  std::vector<EnergyTrace> traces;
};

}  // namespace pcg
