#include "pcg/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "pcg/errors.hpp"

namespace pcg {

Matrix topk_fire(const Eigen::Ref<const Matrix>& activated, const std::vector<ClusterRange>& clusters,
                 double k_frac, Matrix* kept) {
  ClusterSpec{clusters, k_frac}.validate(activated.rows());
  Matrix out = activated;
  if (kept) *kept = Matrix::Ones(activated.rows(), activated.cols());
  std::vector<Index> order;
  for (const auto& cluster : clusters) {
    const Index size = cluster.size();
    // ceil with a tolerance so that e.g. 0.2 * 500 keeps exactly 100.
    const auto keep = std::min<Index>(size, static_cast<Index>(std::ceil(k_frac * static_cast<double>(size) - 1e-9)));
    if (keep >= size) continue;
    order.resize(static_cast<std::size_t>(size));
    for (Index lane = 0; lane < activated.cols(); ++lane) {
      std::iota(order.begin(), order.end(), cluster.begin);
      auto col = activated.col(lane);
      auto before = [&](Index a, Index b) { return col(a) > col(b) || (col(a) == col(b) && a < b); };
      std::nth_element(order.begin(), order.begin() + keep, order.end(), before);
      for (auto it = order.begin() + keep; it != order.end(); ++it) {
        out(*it, lane) = 0.0;
        if (kept) (*kept)(*it, lane) = 0.0;
      }
    }
  }
  return out;
}

Matrix activity(const PCGraph& graph, const Eigen::Ref<const Matrix>& x, Matrix* kept) {
  Matrix a = activate(graph.activation(), x);
  if (const auto& spec = graph.clusters()) return topk_fire(a, spec->clusters, spec->k_frac, kept);
  if (kept) *kept = Matrix::Ones(x.rows(), x.cols());
  return a;
}

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// m * v, through the compressed copy when there is one. Row-major operands
/// keep the sparse product vectorized over lanes.
Matrix product(const Matrix& dense, const SparseWeights* sparse, const Eigen::Ref<const Matrix>& v) {
  Matrix out(dense.rows(), v.cols());
  if (sparse) {
    const RowMatrix rows = v;
    RowMatrix r(dense.rows(), v.cols());
    r.noalias() = *sparse * rows;
    out = r;
  } else {
    out.noalias() = dense * v;
  }
  return out;
}

}  // namespace

Matrix predict(const PCGraph& graph, const Eigen::Ref<const Matrix>& x) {
  require_same_size(x.rows(), graph.n(), "predict: state rows vs vertex count");
  return product(graph.weights(), graph.sparse_weights(), activity(graph, x));
}

Matrix compute_errors(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& mu) {
  require_same_size(x.rows(), mu.rows(), "compute_errors rows");
  require_same_size(x.cols(), mu.cols(), "compute_errors lanes");
  return x - mu;
}

double energy(const Eigen::Ref<const Matrix>& eps) { return 0.5 * eps.squaredNorm(); }

Vector lane_energies(const Eigen::Ref<const Matrix>& eps) {
  return 0.5 * eps.colwise().squaredNorm().transpose();
}

void refresh(const PCGraph& graph, NodeState& state) {
  state.mu = predict(graph, state.x);
  state.eps = state.x - state.mu;
}

NodeState make_state(const PCGraph& graph, Matrix x) {
  NodeState s;
  s.x = std::move(x);
  refresh(graph, s);
  return s;
}

NodeState initial_state(const PCGraph& graph, const ClampSpec& clamp) {
  clamp.validate(graph.n());
  std::mt19937_64 rng(clamp.seed);
  Matrix x = clamp.free_init.sample(graph.n(), clamp.lanes(), rng);
  for (std::size_t r = 0; r < clamp.initialized.size(); ++r) {
    x.row(clamp.initialized[r]) = clamp.initialized_values.row(static_cast<Index>(r));
  }
  for (std::size_t r = 0; r < clamp.conditioned.size(); ++r) {
    x.row(clamp.conditioned[r]) = clamp.conditioned_values.row(static_cast<Index>(r));
  }
  if (const int sweeps = clamp.free_init.sweeps(); sweeps > 0) {
    std::vector<Index> free;
    std::vector<std::uint8_t> fixed(static_cast<std::size_t>(graph.n()), 0);
    for (Index v : clamp.conditioned) fixed[static_cast<std::size_t>(v)] = 1;
    for (Index v : clamp.initialized) fixed[static_cast<std::size_t>(v)] = 1;
    for (Index v = 0; v < graph.n(); ++v)
      if (!fixed[static_cast<std::size_t>(v)]) free.push_back(v);
    for (int s = 0; s < sweeps; ++s) {
      const Matrix mu = predict(graph, x);
      x(free, Eigen::all) = mu(free, Eigen::all);
    }
  }
  return make_state(graph, std::move(x));
}

void inference_step_inplace(const PCGraph& graph, NodeState& state, double gamma,
                            std::span<const Index> conditioned) {
  require_same_size(state.x.rows(), graph.n(), "inference_step: state rows vs vertex count");
  if (gamma == 0.0) {
    ++state.t;
    return;
  }
  Matrix kept;
  activity(graph, state.x, &kept);
  Matrix back;
  if (graph.sparse_transpose()) {
    back = product(graph.weights(), graph.sparse_transpose(), state.eps);
  } else {
    back.noalias() = graph.weights().transpose() * state.eps;
  }
  const Matrix slope = activate_derivative(graph.activation(), state.x).cwiseProduct(kept);

  Matrix next = state.x + gamma * (slope.cwiseProduct(back) - state.eps);
  for (Index v : conditioned) next.row(v) = state.x.row(v);
  state.x = std::move(next);
  refresh(graph, state);
  ++state.t;
}

NodeState inference_step(const PCGraph& graph, const NodeState& state, double gamma, const ClampSpec& clamp) {
  clamp.validate(graph.n());
  NodeState next = state;
  inference_step_inplace(graph, next, gamma, clamp.conditioned);
  return next;
}

Matrix weight_gradient(const PCGraph& graph, const NodeState& state) {
  require_same_size(state.x.rows(), graph.n(), "weight_gradient: state rows vs vertex count");
  Matrix g(graph.n(), graph.n());
  g.noalias() = state.eps * activity(graph, state.x).transpose();
  if (state.lanes() > 1) g /= static_cast<double>(state.lanes());
  return g;
}

}  // namespace pcg
