#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "pcg/activation.hpp"
#include "pcg/types.hpp"

namespace pcg {

using SparseWeights = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Masks with at most this edge density also keep a compressed copy of W.
inline constexpr double kSparseDensity = 0.25;

/// Half-open vertex range [begin, end).
struct ClusterRange {
  Index begin = 0;
  Index end = 0;

  Index size() const { return end - begin; }
  bool contains(Index v) const { return v >= begin && v < end; }
  friend bool operator==(const ClusterRange&, const ClusterRange&) = default;
};

/// Assembly structure: disjoint clusters of internal vertices, each of which
/// only lets its top ceil(k_frac * size) activities through.
struct ClusterSpec {
  std::vector<ClusterRange> clusters;
  double k_frac = 1.0;

  /// Throws ConfigError on overlap, empty or out-of-range clusters, or k_frac outside (0, 1].
  void validate(Index n) const;
  friend bool operator==(const ClusterSpec&, const ClusterSpec&) = default;
};

class TopologyMask {
 public:
  TopologyMask() = default;
  explicit TopologyMask(MaskMatrix matrix, std::optional<ClusterSpec> clusters = std::nullopt,
                        std::optional<double> p = std::nullopt, std::uint64_t seed = 0);

  Index n() const { return matrix_.rows(); }
  const MaskMatrix& matrix() const { return matrix_; }
  bool has_edge(Index post, Index pre) const { return matrix_(post, pre) != 0; }
  Index edge_count() const;
  Index fan_in(Index post) const;

  const std::optional<ClusterSpec>& clusters() const { return clusters_; }
  std::optional<double> p() const { return p_; }
  std::uint64_t seed() const { return seed_; }

  /// Square, binary, zero diagonal, valid clusters. Throws ConfigError.
  void validate() const;

 private:
  MaskMatrix matrix_;
  std::optional<ClusterSpec> clusters_;
  std::optional<double> p_;
  std::uint64_t seed_ = 0;
};

/// A predictive-coding graph: n vertices, the first d of which are sensory,
/// with weight W(post, pre) on every edge pre -> post of the mask.
///
/// Weights outside the mask are zero after construction and after every
/// mutation made through set_weights / update_weights.
class PCGraph {
 public:
  PCGraph(Index d, TopologyMask mask, Matrix weights, Activation activation,
          std::string descriptor = {});

  Index n() const { return weights_.rows(); }
  Index d() const { return d_; }
  const Matrix& weights() const { return weights_; }
  const TopologyMask& mask() const { return mask_; }
  Activation activation() const { return activation_; }
  const std::optional<ClusterSpec>& clusters() const { return mask_.clusters(); }
  const std::string& descriptor() const { return descriptor_; }
  bool is_sensory(Index v) const { return v < d_; }

  void set_weights(Matrix weights);

  /// Mutates the weight matrix in place and re-applies the mask afterwards.
  template <class Fn>
  void update_weights(Fn&& fn) {
    fn(weights_);
    apply_mask();
  }

  /// True iff W is exactly zero wherever the mask is zero.
  bool respects_mask() const;

  /// Compressed W and W^T over the mask's edges; null for dense masks.
  const SparseWeights* sparse_weights() const { return sparse_ ? &sparse_->w : nullptr; }
  const SparseWeights* sparse_transpose() const { return sparse_ ? &sparse_->wt : nullptr; }

 private:
  struct Compressed {
    SparseWeights w;
    SparseWeights wt;
  };

  void apply_mask();
  void build_sparse();
  void refresh_sparse();

  Index d_;
  TopologyMask mask_;
  Matrix weights_;
  Activation activation_;
  std::string descriptor_;
  std::optional<Compressed> sparse_;
};

}  // namespace pcg
