#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pcg/graph.hpp"

namespace pcg {

struct GraphOptions {
  Activation activation = Activation::HardTanh;
  /// Weights start as N(0, (gain / sqrt(fan_in))^2) on every edge.
  double init_gain = 1.0;
  std::uint64_t seed = 0;
};

/// Zero-mean Gaussian weights with standard deviation gain / sqrt(fan_in) of the
/// postsynaptic vertex, drawn row by row over the edges of the mask.
Matrix initialize_weights(const TopologyMask& mask, double gain, std::uint64_t seed);

/// All edges i != j.
TopologyMask complete_mask(Index n);

PCGraph fully_connected(Index n, Index d, const GraphOptions& options = {});

/// Which end of a layer stack holds the sensory vertices. Predictions always
/// flow from dims[l] to dims[l + 1].
enum class FlowDirection {
  FromSensory,   // dims.front() is sensory: discriminative stack
  TowardSensory  // dims.back() is sensory: generative stack
};

struct LayeredSpec {
  std::vector<Index> dims;
  FlowDirection direction = FlowDirection::FromSensory;
  /// The layer at the non-sensory end is a label layer and joins the sensory
  /// range (placed right after the data vertices).
  bool labels = false;
  /// Intra-layer blocks on every layer.
  bool lateral = false;
  /// Intra-layer blocks on every non-sensory, non-label layer.
  bool recurrent = false;
};

struct LayeredLayout {
  TopologyMask mask;
  Index d = 0;
  /// Vertex range of each layer, in the order of LayeredSpec::dims.
  std::vector<ClusterRange> layers;
};

LayeredLayout layered_layout(const LayeredSpec& spec);
PCGraph layered(const LayeredSpec& spec, const GraphOptions& options = {});

/// Clusters of internal vertices wired as Erdos-Renyi blocks with edge
/// probability p, optionally fed by label vertices and predicting pixel vertices.
struct AssemblySpec {
  std::vector<Index> cluster_sizes;
  /// (from, to): every vertex of `from` projects to every vertex of `to` with probability p.
  std::vector<std::pair<int, int>> inter_edges;
  double p = 0.1;
  double k_frac = 0.2;
  std::uint64_t seed = 0;

  Index pixels = 0;
  Index labels = 0;
  std::vector<int> label_targets;  // clusters that receive edges from the label vertices
  std::vector<int> pixel_sources;  // clusters that predict the pixel vertices
  double attach_p = 1.0;           // edge probability of the sensory attachments
};

struct AssemblyLayout {
  TopologyMask mask;
  Index d = 0;
  std::vector<ClusterRange> clusters;
};

AssemblyLayout assembly_layout(const AssemblySpec& spec);
PCGraph assembly(const AssemblySpec& spec, const GraphOptions& options = {});

/// Feedforward chain 0 -> 1 -> ... -> count-1.
std::vector<std::pair<int, int>> chain_edges(int count);

/// W <- W (.) M, mask <- M.
PCGraph prune(const PCGraph& graph, const TopologyMask& mask);

std::string to_string(FlowDirection direction);
FlowDirection parse_direction(const std::string& name);

}  // namespace pcg
