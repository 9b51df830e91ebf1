#include "pcg/graph.hpp"

#include <algorithm>
#include <utility>

#include "pcg/errors.hpp"

namespace pcg {

void require_same_size(long a, long b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": size " + std::to_string(a) + " != " + std::to_string(b));
  }
}

void ClusterSpec::validate(Index n) const {
  if (!(k_frac > 0.0 && k_frac <= 1.0)) {
    throw ConfigError("cluster k_frac must lie in (0, 1], got " + std::to_string(k_frac));
  }
  std::vector<ClusterRange> sorted = clusters;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.begin < b.begin; });
  for (std::size_t c = 0; c < sorted.size(); ++c) {
    const auto& r = sorted[c];
    if (r.begin < 0 || r.end > n || r.size() <= 0) {
      throw ConfigError("cluster [" + std::to_string(r.begin) + ", " + std::to_string(r.end) +
                        ") is empty or outside 0.." + std::to_string(n));
    }
    if (c > 0 && sorted[c - 1].end > r.begin) {
      throw ConfigError("clusters overlap at vertex " + std::to_string(r.begin));
    }
  }
}

TopologyMask::TopologyMask(MaskMatrix matrix, std::optional<ClusterSpec> clusters, std::optional<double> p,
                           std::uint64_t seed)
    : matrix_(std::move(matrix)), clusters_(std::move(clusters)), p_(p), seed_(seed) {
  validate();
}

Index TopologyMask::edge_count() const { return matrix_.cast<Index>().sum(); }

Index TopologyMask::fan_in(Index post) const { return matrix_.row(post).cast<Index>().sum(); }

void TopologyMask::validate() const {
  if (matrix_.rows() != matrix_.cols()) {
    throw ConfigError("mask must be square, got " + std::to_string(matrix_.rows()) + "x" +
                      std::to_string(matrix_.cols()));
  }
  if ((matrix_.array() > 1).any()) throw ConfigError("mask entries must be 0 or 1");
  for (Index i = 0; i < matrix_.rows(); ++i) {
    if (matrix_(i, i) != 0) throw ConfigError("mask has a self-loop at vertex " + std::to_string(i));
  }
  if (clusters_) clusters_->validate(matrix_.rows());
}

PCGraph::PCGraph(Index d, TopologyMask mask, Matrix weights, Activation activation, std::string descriptor)
    : d_(d),
      mask_(std::move(mask)),
      weights_(std::move(weights)),
      activation_(activation),
      descriptor_(std::move(descriptor)) {
  require_same_size(weights_.rows(), mask_.n(), "weight rows vs mask");
  require_same_size(weights_.cols(), mask_.n(), "weight cols vs mask");
  if (!(d_ > 0 && d_ < n())) {
    throw ConfigError("sensory count d must satisfy 0 < d < n (d=" + std::to_string(d_) +
                      ", n=" + std::to_string(n()) + ")");
  }
  build_sparse();
  apply_mask();
}

void PCGraph::set_weights(Matrix weights) {
  require_same_size(weights.rows(), n(), "weight rows");
  require_same_size(weights.cols(), n(), "weight cols");
  weights_ = std::move(weights);
  apply_mask();
}

void PCGraph::apply_mask() {
  weights_ = (mask_.matrix().array() == 0).select(0.0, weights_);
  refresh_sparse();
}

void PCGraph::build_sparse() {
  const double cells = static_cast<double>(n()) * static_cast<double>(n());
  if (static_cast<double>(mask_.edge_count()) > kSparseDensity * cells) return;
  std::vector<Eigen::Triplet<double>> edges;
  edges.reserve(static_cast<std::size_t>(mask_.edge_count()));
  for (Index j = 0; j < n(); ++j)
    for (Index i = 0; i < n(); ++i)
      if (mask_.has_edge(i, j)) edges.emplace_back(i, j, 0.0);
  Compressed c;
  c.w.resize(n(), n());
  c.w.setFromTriplets(edges.begin(), edges.end());
  c.wt = c.w.transpose();
  sparse_ = std::move(c);
}

void PCGraph::refresh_sparse() {
  if (!sparse_) return;
  auto fill = [this](SparseWeights& m, bool transposed) {
    for (Index r = 0; r < m.outerSize(); ++r) {
      for (SparseWeights::InnerIterator it(m, r); it; ++it) {
        it.valueRef() = transposed ? weights_(it.col(), r) : weights_(r, it.col());
      }
    }
  };
  fill(sparse_->w, false);
  fill(sparse_->wt, true);
}

bool PCGraph::respects_mask() const {
  return ((mask_.matrix().array() == 0) && (weights_.array() != 0.0)).count() == 0;
}

}  // namespace pcg
