#include "pcg/engine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>

#include "pcg/errors.hpp"

namespace pcg {

// ---------------------------------------------------------------- traces

void EnergyTrace::push(long step, double energy, double seconds) {
  if (!samples_.empty() && step <= samples_.back().step) {
    throw ConfigError("energy trace steps must be strictly increasing (" + std::to_string(step) +
                      " after " + std::to_string(samples_.back().step) + ")");
  }
  samples_.push_back({step, energy, seconds});
}

void EnergyTrace::write_csv(std::ostream& os) const {
  os << "step,energy,seconds\n";
  os << std::setprecision(17);
  for (const auto& s : samples_) os << s.step << ',' << s.energy << ',' << s.seconds << '\n';
}

void EnergyTrace::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_csv(os);
}

bool converged(const EnergyTrace& trace, std::size_t window, double rel_tol) {
  if (window < 2) throw ConfigError("converged: window must be >= 2");
  const auto& s = trace.samples();
  if (s.size() < window) return false;
  double lo = s.back().energy;
  double hi = lo;
  for (std::size_t i = s.size() - window; i < s.size(); ++i) {
    if (!std::isfinite(s[i].energy)) return false;
    lo = std::min(lo, s[i].energy);
    hi = std::max(hi, s[i].energy);
  }
  const double range = hi - lo;
  if (range == 0.0) return true;
  const double scale = std::abs(s.front().energy);
  return scale > 0.0 && range / scale < rel_tol;
}

// ---------------------------------------------------------------- schedule

void TrainSchedule::validate() const {
  if (T < 1) throw ConfigError("train.T must be >= 1");
  if (!(gamma >= 0.0)) throw ConfigError("train.gamma must be >= 0");
  if (!(alpha > 0.0)) throw ConfigError("train.alpha must be > 0");
  if (!(lambda >= 0.0)) throw ConfigError("train.lambda must be >= 0");
  if (epochs < 0) throw ConfigError("train.epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (optimizer == OptimizerKind::Adam) {
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
      throw ConfigError("adam betas must lie in [0, 1)");
    }
    if (!(adam.eps > 0.0)) throw ConfigError("adam eps must be > 0");
  }
}

// ---------------------------------------------------------------- optimizer

WeightOptimizer::WeightOptimizer(OptimizerKind kind, double alpha, double lambda, AdamParams adam)
    : kind_(kind), alpha_(alpha), lambda_(lambda), adam_(adam) {}

void WeightOptimizer::step(PCGraph& graph, const Matrix& ascent) {
  require_same_size(ascent.rows(), graph.n(), "optimizer gradient rows");
  require_same_size(ascent.cols(), graph.n(), "optimizer gradient cols");
  ++steps_;
  graph.update_weights([&](Matrix& w) {
    if (lambda_ > 0.0) w *= (1.0 - alpha_ * lambda_);
    if (kind_ == OptimizerKind::SGD) {
      w.noalias() += alpha_ * ascent;
      return;
    }
    if (m_.size() == 0) {
      m_ = Matrix::Zero(w.rows(), w.cols());
      v_ = Matrix::Zero(w.rows(), w.cols());
    }
    // Descent on E: the gradient is -ascent.
    m_.array() = adam_.beta1 * m_.array() - (1.0 - adam_.beta1) * ascent.array();
    v_.array() = adam_.beta2 * v_.array() + (1.0 - adam_.beta2) * ascent.array().square();
    const double c1 = 1.0 - std::pow(adam_.beta1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(adam_.beta2, static_cast<double>(steps_));
    w.array() -= alpha_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + adam_.eps);
  });
}

// ---------------------------------------------------------------- training

Trainer::Trainer(PCGraph& graph, TrainSchedule schedule)
    : graph_(graph),
      schedule_(std::move(schedule)),
      optimizer_(schedule_.optimizer, schedule_.alpha, schedule_.lambda, schedule_.adam),
      rng_(schedule_.seed),
      start_(std::chrono::steady_clock::now()) {
  schedule_.validate();
  std::vector<std::uint8_t> soft(static_cast<std::size_t>(graph_.d()), 0);
  for (Index v : schedule_.initialized_only) {
    if (v < 0 || v >= graph_.d()) {
      throw ConfigError("initialized_only vertex " + std::to_string(v) + " is not sensory");
    }
    soft[static_cast<std::size_t>(v)] = 1;
  }
  for (Index v = 0; v < graph_.d(); ++v) {
    if (!soft[static_cast<std::size_t>(v)]) sensory_held_.push_back(v);
  }
}

double Trainer::train_batch(const Eigen::Ref<const Matrix>& batch) {
  require_same_size(batch.rows(), graph_.d(), "training sample size vs sensory count");
  const Index lanes = batch.cols();
  ++batches_;

  ClampSpec clamp;
  clamp.condition(sensory_held_, batch(sensory_held_, Eigen::all));
  if (!schedule_.initialized_only.empty()) {
    clamp.initialize(schedule_.initialized_only, batch(schedule_.initialized_only, Eigen::all));
  }
  clamp.free_init = schedule_.internal_init;
  clamp.seed = schedule_.seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(batches_));

  NodeState state = initial_state(graph_, clamp);
  for (int t = 0; t < schedule_.T; ++t) inference_step_inplace(graph_, state, schedule_.gamma, clamp.conditioned);

  const double e = energy(state.eps) / static_cast<double>(lanes);
  if (!std::isfinite(e)) throw DivergenceError(batches_, "training energy is not finite");

  optimizer_.step(graph_, weight_gradient(graph_, state));
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  trace_.push(batches_, e, seconds);
  return e;
}

EpochStats Trainer::train_epoch(const Matrix& data) {
  require_same_size(data.rows(), graph_.d(), "training data rows vs sensory count");
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<Index> order(static_cast<std::size_t>(data.cols()));
  std::iota(order.begin(), order.end(), Index{0});
  if (schedule_.shuffle) std::shuffle(order.begin(), order.end(), rng_);

  double total = 0.0;
  Matrix batch;
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(schedule_.batch_size)) {
    const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(schedule_.batch_size));
    const std::vector<Index> cols(order.begin() + static_cast<std::ptrdiff_t>(start),
                                  order.begin() + static_cast<std::ptrdiff_t>(stop));
    batch = data(Eigen::all, cols);
    total += train_batch(batch) * static_cast<double>(cols.size());
  }
  ++epoch_;
  EpochStats stats;
  stats.epoch = epoch_;
  stats.mean_energy = order.empty() ? 0.0 : total / static_cast<double>(order.size());
  stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return stats;
}

void Trainer::run(const Matrix& data, const std::function<void(const EpochStats&)>& on_epoch) {
  for (int e = 0; e < schedule_.epochs; ++e) {
    const EpochStats stats = train_epoch(data);
    if (on_epoch) on_epoch(stats);
  }
}

TrainResult train(PCGraph graph, const Matrix& data, const TrainSchedule& schedule) {
  Trainer trainer(graph, schedule);
  trainer.run(data);
  EnergyTrace trace = trainer.trace();
  return {std::move(graph), std::move(trace)};
}

// ---------------------------------------------------------------- queries

QueryResult run_inference(const PCGraph& graph, const ClampSpec& clamp, const QueryOptions& options) {
  if (options.T < 0) throw ConfigError("query T must be >= 0");
  if (!(options.gamma >= 0.0)) throw ConfigError("query gamma must be >= 0");
  QueryResult out;
  out.state = initial_state(graph, clamp);
  const double lanes = static_cast<double>(out.state.lanes());
  const auto t0 = std::chrono::steady_clock::now();
  auto record = [&](const NodeState& s) {
    const double e = energy(s.eps) / lanes;
    if (!std::isfinite(e)) throw DivergenceError(s.t, "query energy is not finite");
    if (options.record_trace || options.early_stop) {
      out.trace.push(s.t, e, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
  };
  record(out.state);
  for (int t = 0; t < options.T; ++t) {
    inference_step_inplace(graph, out.state, options.gamma, clamp.conditioned);
    record(out.state);
    if (options.early_stop && converged(out.trace, options.window, options.rel_tol)) break;
  }
  return out;
}

QueryResult query_by_conditioning(const PCGraph& graph, const ClampSpec& clamp, const QueryOptions& options) {
  if (clamp.conditioned.empty()) throw ConfigError("query by conditioning needs at least one conditioned vertex");
  if (static_cast<Index>(clamp.conditioned.size()) >= graph.n()) {
    throw ConfigError("every vertex is conditioned: nothing to infer");
  }
  return run_inference(graph, clamp, options);
}

QueryResult query_by_initialization(const PCGraph& graph, const ClampSpec& clamp, const QueryOptions& options) {
  if (clamp.initialized.empty()) throw ConfigError("query by initialization needs at least one initialized vertex");
  if (!clamp.conditioned.empty()) throw ConfigError("query by initialization leaves every vertex free");
  return run_inference(graph, clamp, options);
}

}  // namespace pcg
