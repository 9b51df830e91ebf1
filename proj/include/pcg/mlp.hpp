#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pcg/activation.hpp"
#include "pcg/engine.hpp"
#include "pcg/types.hpp"

namespace pcg {

/// Output nonlinearity + loss pairing.
///   Softmax: softmax output, cross-entropy loss (classification).
///   ClippedLinear: clip(z, 0, 1), squared-error loss (autoencoding).
///   Linear: identity output, squared-error loss.
enum class MlpOutput { Softmax, ClippedLinear, Linear };

std::string to_string(MlpOutput o);
MlpOutput parse_mlp_output(const std::string& name);

struct MLP {
  std::vector<Matrix> weights;  // weights[l] is dims[l+1] x dims[l]
  std::vector<Vector> biases;
  Activation hidden = Activation::HardTanh;
  MlpOutput output = MlpOutput::Softmax;

  Index layers() const { return static_cast<Index>(weights.size()); }
  Index input_dim() const;
  Index output_dim() const;
  std::vector<Index> dims() const;
  Index parameter_count() const;

  /// Layer shapes chain together and biases match. Throws DimensionError.
  void validate() const;

  /// N(0, (gain / sqrt(fan_in))^2) weights, zero biases.
  static MLP random(const std::vector<Index>& dims, Activation hidden, MlpOutput output, std::uint64_t seed,
                    double gain = 1.0);
  static MLP zeros(const std::vector<Index>& dims, Activation hidden, MlpOutput output);
};

/// One column per sample.
Matrix forward(const MLP& mlp, const Eigen::Ref<const Matrix>& inputs);

struct MlpGradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

/// Mean loss over the columns of `inputs`. Softmax uses cross-entropy against
/// `targets` (one-hot columns); the other outputs use 0.5 * ||out - target||^2.
double loss(const MLP& mlp, const Eigen::Ref<const Matrix>& inputs, const Eigen::Ref<const Matrix>& targets);

/// Loss plus its gradient with respect to every parameter (backprop).
double loss_and_gradient(const MLP& mlp, const Eigen::Ref<const Matrix>& inputs,
                         const Eigen::Ref<const Matrix>& targets, MlpGradients& grads);

struct BpSchedule {
  double alpha = 1e-3;
  double lambda = 0.0;  // decoupled weight decay, weights only
  int epochs = 1;
  Index batch_size = 64;
  OptimizerKind optimizer = OptimizerKind::Adam;
  AdamParams adam;
  bool shuffle = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct BpEpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  double seconds = 0.0;
};

class BpTrainer {
 public:
  BpTrainer(MLP& mlp, BpSchedule schedule);

  /// One optimizer step on a mini-batch; returns the pre-step loss.
  double train_batch(const Eigen::Ref<const Matrix>& inputs, const Eigen::Ref<const Matrix>& targets);
  BpEpochStats train_epoch(const Matrix& inputs, const Matrix& targets);
  void run(const Matrix& inputs, const Matrix& targets,
           const std::function<void(const BpEpochStats&)>& on_epoch = {});

  const EnergyTrace& trace() const { return trace_; }

 private:
  MLP& mlp_;
  BpSchedule schedule_;
  std::vector<Matrix> mw_, vw_;
  std::vector<Vector> mb_, vb_;
  long steps_ = 0;
  int epoch_ = 0;
  std::mt19937_64 rng_;
  EnergyTrace trace_;
};

MLP train_bp(MLP mlp, const Matrix& inputs, const Matrix& targets, const BpSchedule& schedule);

/// Argmax of the output per column, lowest index on ties.
std::vector<int> predict_classes(const MLP& mlp, const Eigen::Ref<const Matrix>& inputs);

/// Forward pass of an autoencoder; output clipped to [0, 1].
Matrix autoencode(const MLP& mlp, const Eigen::Ref<const Matrix>& inputs);

/// One-hot columns for `labels`.
Matrix onehot_matrix(const std::vector<int>& labels, int classes = 10);

}  // namespace pcg
