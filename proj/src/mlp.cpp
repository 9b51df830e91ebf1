#include "pcg/mlp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "pcg/errors.hpp"

namespace pcg {

namespace {

struct Tape {
  std::vector<Matrix> a;  // a[0] = input, a[l+1] = activation of layer l (output layer: post-nonlinearity)
  std::vector<Matrix> z;  // pre-activations
};

Matrix apply_output(MlpOutput kind, const Matrix& z) {
  switch (kind) {
    case MlpOutput::Softmax: {
      Matrix p = z;
      for (Index c = 0; c < p.cols(); ++c) {
        const double m = p.col(c).maxCoeff();
        p.col(c) = (p.col(c).array() - m).exp().matrix();
        p.col(c) /= p.col(c).sum();
      }
      return p;
    }
    case MlpOutput::ClippedLinear:
      return z.cwiseMax(0.0).cwiseMin(1.0);
    case MlpOutput::Linear:
      return z;
  }
  return z;
}

Tape run_forward(const MLP& mlp, const Eigen::Ref<const Matrix>& inputs) {
  mlp.validate();
  require_same_size(inputs.rows(), mlp.input_dim(), "mlp input rows");
  Tape tape;
  tape.a.push_back(inputs);
  const Index L = mlp.layers();
  for (Index l = 0; l < L; ++l) {
    Matrix z = mlp.weights[l] * tape.a.back();
    z.colwise() += mlp.biases[l];
    tape.a.push_back(l + 1 == L ? apply_output(mlp.output, z) : activate(mlp.hidden, z));
    tape.z.push_back(std::move(z));
  }
  return tape;
}

double loss_from_tape(const MLP& mlp, const Tape& tape, const Eigen::Ref<const Matrix>& targets) {
  const Matrix& out = tape.a.back();
  require_same_size(targets.rows(), out.rows(), "mlp target rows");
  require_same_size(targets.cols(), out.cols(), "mlp target count");
  const double B = static_cast<double>(out.cols());
  if (mlp.output == MlpOutput::Softmax) {
    const Matrix& z = tape.z.back();
    double total = 0.0;
    for (Index c = 0; c < z.cols(); ++c) {
      const double m = z.col(c).maxCoeff();
      const double lse = m + std::log((z.col(c).array() - m).exp().sum());
      total += (targets.col(c).array() * (lse - z.col(c).array())).sum();
    }
    return total / B;
  }
  return 0.5 * (out - targets).squaredNorm() / B;
}

}  // namespace

std::string to_string(MlpOutput o) {
  switch (o) {
    case MlpOutput::Softmax: return "softmax";
    case MlpOutput::ClippedLinear: return "clipped_linear";
    case MlpOutput::Linear: return "linear";
  }
  return "?";
}

MlpOutput parse_mlp_output(const std::string& name) {
  if (name == "softmax") return MlpOutput::Softmax;
  if (name == "clipped_linear") return MlpOutput::ClippedLinear;
  if (name == "linear") return MlpOutput::Linear;
  throw ConfigError("unknown mlp output '" + name + "' (expected softmax, clipped_linear or linear)");
}

Index MLP::input_dim() const { return weights.empty() ? 0 : weights.front().cols(); }
Index MLP::output_dim() const { return weights.empty() ? 0 : weights.back().rows(); }

std::vector<Index> MLP::dims() const {
  std::vector<Index> d;
  if (weights.empty()) return d;
  d.push_back(input_dim());
  for (const auto& w : weights) d.push_back(w.rows());
  return d;
}

Index MLP::parameter_count() const {
  Index total = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) total += weights[l].size() + biases[l].size();
  return total;
}

void MLP::validate() const {
  if (weights.empty()) throw DimensionError("mlp has no layers");
  if (weights.size() != biases.size()) throw DimensionError("mlp weight/bias layer counts differ");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (biases[l].size() != weights[l].rows()) {
      throw DimensionError("mlp layer " + std::to_string(l) + ": bias size does not match weight rows");
    }
    if (l > 0 && weights[l].cols() != weights[l - 1].rows()) {
      throw DimensionError("mlp layer " + std::to_string(l) + ": input width does not match previous layer");
    }
  }
}

MLP MLP::zeros(const std::vector<Index>& dims, Activation hidden, MlpOutput output) {
  if (dims.size() < 2) throw ConfigError("mlp needs at least an input and an output width");
  MLP mlp;
  mlp.hidden = hidden;
  mlp.output = output;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    if (dims[l] < 1 || dims[l + 1] < 1) throw ConfigError("mlp layer widths must be >= 1");
    mlp.weights.push_back(Matrix::Zero(dims[l + 1], dims[l]));
    mlp.biases.push_back(Vector::Zero(dims[l + 1]));
  }
  return mlp;
}

MLP MLP::random(const std::vector<Index>& dims, Activation hidden, MlpOutput output, std::uint64_t seed,
                double gain) {
  MLP mlp = zeros(dims, hidden, output);
  std::mt19937_64 rng(seed);
  for (auto& w : mlp.weights) {
    std::normal_distribution<double> normal(0.0, gain / std::sqrt(static_cast<double>(w.cols())));
    for (Index i = 0; i < w.rows(); ++i) {
      for (Index j = 0; j < w.cols(); ++j) w(i, j) = normal(rng);
    }
  }
  return mlp;
}

Matrix forward(const MLP& mlp, const Eigen::Ref<const Matrix>& inputs) {
  return std::move(run_forward(mlp, inputs).a.back());
}

double loss(const MLP& mlp, const Eigen::Ref<const Matrix>& inputs, const Eigen::Ref<const Matrix>& targets) {
  return loss_from_tape(mlp, run_forward(mlp, inputs), targets);
}

double loss_and_gradient(const MLP& mlp, const Eigen::Ref<const Matrix>& inputs,
                         const Eigen::Ref<const Matrix>& targets, MlpGradients& grads) {
  const Tape tape = run_forward(mlp, inputs);
  const double value = loss_from_tape(mlp, tape, targets);
  const Index L = mlp.layers();
  const double B = static_cast<double>(inputs.cols());
  grads.weights.resize(static_cast<std::size_t>(L));
  grads.biases.resize(static_cast<std::size_t>(L));

  // dLoss/dz at the output layer.
  Matrix delta = (tape.a.back() - targets) / B;
  if (mlp.output == MlpOutput::ClippedLinear) {
    delta.array() *= (tape.z.back().array() >= 0.0 && tape.z.back().array() <= 1.0).cast<double>();
  }
  for (Index l = L - 1; l >= 0; --l) {
    grads.weights[l].noalias() = delta * tape.a[l].transpose();
    grads.biases[l] = delta.rowwise().sum();
    if (l > 0) {
      Matrix back = mlp.weights[l].transpose() * delta;
      delta = back.cwiseProduct(activate_derivative(mlp.hidden, tape.z[l - 1]));
    }
  }
  return value;
}

void BpSchedule::validate() const {
  if (!(alpha >= 0.0)) throw ConfigError("baseline.alpha must be >= 0");
  if (!(lambda >= 0.0)) throw ConfigError("baseline.lambda must be >= 0");
  if (epochs < 0) throw ConfigError("baseline.epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("baseline.batch_size must be >= 1");
}

BpTrainer::BpTrainer(MLP& mlp, BpSchedule schedule) : mlp_(mlp), schedule_(std::move(schedule)), rng_(schedule_.seed) {
  schedule_.validate();
  mlp_.validate();
  for (std::size_t l = 0; l < mlp_.weights.size(); ++l) {
    mw_.push_back(Matrix::Zero(mlp_.weights[l].rows(), mlp_.weights[l].cols()));
    vw_.push_back(mw_.back());
    mb_.push_back(Vector::Zero(mlp_.biases[l].size()));
    vb_.push_back(mb_.back());
  }
}

double BpTrainer::train_batch(const Eigen::Ref<const Matrix>& inputs, const Eigen::Ref<const Matrix>& targets) {
  MlpGradients g;
  const double value = loss_and_gradient(mlp_, inputs, targets, g);
  ++steps_;
  if (!std::isfinite(value)) throw DivergenceError(steps_, "baseline loss is not finite");
  const double a = schedule_.alpha;
  const auto& p = schedule_.adam;
  const double c1 = 1.0 - std::pow(p.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(p.beta2, static_cast<double>(steps_));
  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    if (schedule_.optimizer == OptimizerKind::SGD) {
      param -= a * grad;
      return;
    }
    m = p.beta1 * m + (1.0 - p.beta1) * grad;
    v.array() = p.beta2 * v.array() + (1.0 - p.beta2) * grad.array().square();
    param.array() -= a * (m.array() / c1) / ((v.array() / c2).sqrt() + p.eps);
  };
  for (std::size_t l = 0; l < mlp_.weights.size(); ++l) {
    if (schedule_.lambda > 0.0) mlp_.weights[l] *= (1.0 - a * schedule_.lambda);
    update(mlp_.weights[l], g.weights[l], mw_[l], vw_[l]);
    update(mlp_.biases[l], g.biases[l], mb_[l], vb_[l]);
  }
  return value;
}

BpEpochStats BpTrainer::train_epoch(const Matrix& inputs, const Matrix& targets) {
  require_same_size(inputs.cols(), targets.cols(), "baseline inputs vs targets");
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<Index> order(static_cast<std::size_t>(inputs.cols()));
  std::iota(order.begin(), order.end(), Index{0});
  if (schedule_.shuffle) std::shuffle(order.begin(), order.end(), rng_);
  double total = 0.0;
  const auto bs = static_cast<std::size_t>(schedule_.batch_size);
  for (std::size_t start = 0; start < order.size(); start += bs) {
    const std::size_t stop = std::min(order.size(), start + bs);
    const std::vector<Index> cols(order.begin() + static_cast<std::ptrdiff_t>(start),
                                  order.begin() + static_cast<std::ptrdiff_t>(stop));
    const Matrix x = inputs(Eigen::all, cols);
    const Matrix y = targets(Eigen::all, cols);
    total += train_batch(x, y) * static_cast<double>(cols.size());
  }
  ++epoch_;
  BpEpochStats stats;
  stats.epoch = epoch_;
  stats.mean_loss = order.empty() ? 0.0 : total / static_cast<double>(order.size());
  stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  trace_.push(epoch_, stats.mean_loss, stats.seconds);
  return stats;
}

void BpTrainer::run(const Matrix& inputs, const Matrix& targets,
                    const std::function<void(const BpEpochStats&)>& on_epoch) {
  for (int e = 0; e < schedule_.epochs; ++e) {
    const BpEpochStats stats = train_epoch(inputs, targets);
    if (on_epoch) on_epoch(stats);
  }
}

MLP train_bp(MLP mlp, const Matrix& inputs, const Matrix& targets, const BpSchedule& schedule) {
  BpTrainer trainer(mlp, schedule);
  trainer.run(inputs, targets);
  return mlp;
}

std::vector<int> predict_classes(const MLP& mlp, const Eigen::Ref<const Matrix>& inputs) {
  const Matrix out = forward(mlp, inputs);
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(out.cols()));
  for (Index c = 0; c < out.cols(); ++c) {
    Index best = 0;
    for (Index i = 1; i < out.rows(); ++i) {
      if (out(i, c) > out(best, c)) best = i;
    }
    labels.push_back(static_cast<int>(best));
  }
  return labels;
}

Matrix autoencode(const MLP& mlp, const Eigen::Ref<const Matrix>& inputs) {
  return forward(mlp, inputs).cwiseMax(0.0).cwiseMin(1.0);
}

Matrix onehot_matrix(const std::vector<int>& labels, int classes) {
  Matrix out = Matrix::Zero(classes, static_cast<Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= classes) {
      throw ConfigError("label " + std::to_string(labels[i]) + " outside [0, " + std::to_string(classes) + ")");
    }
    out(labels[i], static_cast<Index>(i)) = 1.0;
  }
  return out;
}

}  // namespace pcg
