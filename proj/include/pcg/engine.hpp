#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "pcg/clamp.hpp"
#include "pcg/dynamics.hpp"
#include "pcg/graph.hpp"

namespace pcg {

/// (step, energy, seconds) samples with strictly increasing steps.
class EnergyTrace {
 public:
  struct Sample {
    long step;
    double energy;
    double seconds;
  };

  void push(long step, double energy, double seconds);
  const std::vector<Sample>& samples() const { return samples_; }
  bool empty() const { return samples_.empty(); }
  std::size_t size() const { return samples_.size(); }
  const Sample& back() const { return samples_.back(); }

  /// Columns: step,energy,seconds.
  void write_csv(std::ostream& os) const;
  void write_csv(const std::string& path) const;

 private:
  std::vector<Sample> samples_;
};

/// True iff the energy moved by less than rel_tol over the last `window`
/// samples, measured relative to the first sample of the trace. Needs at least
/// `window` samples.
bool converged(const EnergyTrace& trace, std::size_t window, double rel_tol);

enum class OptimizerKind { SGD, Adam };

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainSchedule {
  int T = 20;                 // inference steps per batch
  double gamma = 0.5;         // value-node learning rate
  double alpha = 1e-4;        // weight learning rate
  double lambda = 0.0;        // decoupled weight decay
  int epochs = 1;
  Index batch_size = 32;
  OptimizerKind optimizer = OptimizerKind::Adam;
  AdamParams adam;
  InitPolicy internal_init = InitPolicy::zeros();
  /// Sensory vertices that are only initialized (not held) during training,
  /// e.g. label vertices when labels are given as a soft hint.
  std::vector<Index> initialized_only;
  bool shuffle = true;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Decoupled-decay SGD / Adam on a masked weight matrix.
class WeightOptimizer {
 public:
  WeightOptimizer(OptimizerKind kind, double alpha, double lambda, AdamParams adam = {});

  /// `ascent` is the masked negative energy gradient (eps (x) f(x)).
  void step(PCGraph& graph, const Matrix& ascent);
  long steps() const { return steps_; }

 private:
  OptimizerKind kind_;
  double alpha_;
  double lambda_;
  AdamParams adam_;
  Matrix m_;
  Matrix v_;
  long steps_ = 0;
};

struct EpochStats {
  int epoch = 0;
  double mean_energy = 0.0;  // mean per-sample energy at the weight update
  double seconds = 0.0;
};

/// Runs the learning loop: per batch, sensory vertices are held at the data,
/// T inference steps relax the rest, then one masked weight update is applied.
class Trainer {
 public:
  Trainer(PCGraph& graph, TrainSchedule schedule);

  /// data: one column per sample, d rows. Returns the mean per-sample energy at t = T.
  double train_batch(const Eigen::Ref<const Matrix>& batch);

  /// One pass over the data in (optionally shuffled) batches.
  EpochStats train_epoch(const Matrix& data);

  /// Runs schedule.epochs epochs, invoking `on_epoch` after each one.
  void run(const Matrix& data, const std::function<void(const EpochStats&)>& on_epoch = {});

  const EnergyTrace& trace() const { return trace_; }
  int epochs_completed() const { return epoch_; }
  const TrainSchedule& schedule() const { return schedule_; }

 private:
  PCGraph& graph_;
  TrainSchedule schedule_;
  WeightOptimizer optimizer_;
  std::vector<Index> sensory_held_;
  std::mt19937_64 rng_;
  EnergyTrace trace_;
  long batches_ = 0;
  int epoch_ = 0;
  std::chrono::steady_clock::time_point start_;
};

struct TrainResult {
  PCGraph graph;
  EnergyTrace trace;
};

TrainResult train(PCGraph graph, const Matrix& data, const TrainSchedule& schedule);

struct QueryOptions {
  int T = 2000;
  double gamma = 0.5;
  bool early_stop = false;
  std::size_t window = 50;
  double rel_tol = 1e-5;
  bool record_trace = true;
};

struct QueryResult {
  NodeState state;
  EnergyTrace trace;  // mean per-lane energy at every step
};

/// Inference with clamp.conditioned held fixed for every step.
QueryResult query_by_conditioning(const PCGraph& graph, const ClampSpec& clamp, const QueryOptions& options);

/// Inference with clamp.initialized set at t = 0 only; every vertex is free.
QueryResult query_by_initialization(const PCGraph& graph, const ClampSpec& clamp, const QueryOptions& options);

/// Shared loop: starts from initial_state(clamp) and holds clamp.conditioned.
QueryResult run_inference(const PCGraph& graph, const ClampSpec& clamp, const QueryOptions& options);

}  // namespace pcg
