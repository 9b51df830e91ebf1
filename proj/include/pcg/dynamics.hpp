#pragma once

#include <span>
#include <vector>

#include "pcg/clamp.hpp"
#include "pcg/graph.hpp"
#include "pcg/types.hpp"

namespace pcg {

/// Value nodes, predictions and errors of every vertex at one inference step.
/// Each column is an independent lane (sample); a single query has one column.
struct NodeState {
  Matrix x;
  Matrix mu;
  Matrix eps;
  long t = 0;

  Index n() const { return x.rows(); }
  Index lanes() const { return x.cols(); }
};

/// Keeps, per cluster and per lane, the ceil(k_frac * size) largest entries and
/// zeroes the rest of the cluster. Ties go to the lower vertex index. Entries
/// outside every cluster pass through. When `kept` is non-null it receives a
/// 0/1 matrix marking which entries survived.
Matrix topk_fire(const Eigen::Ref<const Matrix>& activated, const std::vector<ClusterRange>& clusters,
                 double k_frac, Matrix* kept = nullptr);

/// f(x), followed by top-k firing when the graph carries clusters.
Matrix activity(const PCGraph& graph, const Eigen::Ref<const Matrix>& x, Matrix* kept = nullptr);

/// mu(i) = sum_j M(i,j) W(i,j) f(x(j)), per lane.
Matrix predict(const PCGraph& graph, const Eigen::Ref<const Matrix>& x);

Matrix compute_errors(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& mu);

/// Half the sum of squared errors, over all vertices and lanes.
double energy(const Eigen::Ref<const Matrix>& eps);

/// Energy of each lane separately.
Vector lane_energies(const Eigen::Ref<const Matrix>& eps);

/// Recomputes mu and eps from x.
void refresh(const PCGraph& graph, NodeState& state);

NodeState make_state(const PCGraph& graph, Matrix x);

/// Builds the t = 0 state for a run: free vertices drawn from clamp.free_init,
/// then initialized and conditioned vertices set to their values.
NodeState initial_state(const PCGraph& graph, const ClampSpec& clamp);

/// One synchronous gradient step on the value nodes. Every unclamped vertex moves by
/// gamma * (-eps(i) + f'(x(i)) * sum_k eps(k) W(k,i)); conditioned vertices are untouched.
NodeState inference_step(const PCGraph& graph, const NodeState& state, double gamma, const ClampSpec& clamp);

/// In-place form of inference_step used by the engine loops.
void inference_step_inplace(const PCGraph& graph, NodeState& state, double gamma,
                            std::span<const Index> conditioned);

/// Negative energy gradient with respect to the weights, eps (x) f(x), averaged
/// over lanes. Not masked; callers apply the mask.
Matrix weight_gradient(const PCGraph& graph, const NodeState& state);

}  // namespace pcg
