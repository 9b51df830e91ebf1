#include "pcg/topology.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "pcg/errors.hpp"

namespace pcg {

namespace {

void fill_block(MaskMatrix& m, const ClusterRange& post, const ClusterRange& pre) {
  m.block(post.begin, pre.begin, post.size(), pre.size()).setOnes();
}

void clear_diagonal(MaskMatrix& m) { m.diagonal().setZero(); }

template <class T>
std::string join(const std::vector<T>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

}  // namespace

Matrix initialize_weights(const TopologyMask& mask, double gain, std::uint64_t seed) {
  const Index n = mask.n();
  Matrix w = Matrix::Zero(n, n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  for (Index i = 0; i < n; ++i) {
    const Index fan_in = mask.fan_in(i);
    if (fan_in == 0) continue;
    const double sd = gain / std::sqrt(static_cast<double>(fan_in));
    for (Index j = 0; j < n; ++j) {
      if (mask.has_edge(i, j)) w(i, j) = sd * unit(rng);
    }
  }
  return w;
}

TopologyMask complete_mask(Index n) {
  MaskMatrix m = MaskMatrix::Ones(n, n);
  clear_diagonal(m);
  return TopologyMask(std::move(m));
}

PCGraph fully_connected(Index n, Index d, const GraphOptions& options) {
  if (!(d > 0 && d < n)) {
    throw ConfigError("fully_connected requires 0 < d < n (d=" + std::to_string(d) + ", n=" + std::to_string(n) + ")");
  }
  TopologyMask mask = complete_mask(n);
  Matrix w = initialize_weights(mask, options.init_gain, options.seed);
  std::ostringstream desc;
  desc << "kind=fully_connected;n=" << n << ";d=" << d;
  return PCGraph(d, std::move(mask), std::move(w), options.activation, desc.str());
}

LayeredLayout layered_layout(const LayeredSpec& spec) {
  const auto& dims = spec.dims;
  if (dims.size() < 2) throw ConfigError("layered topology needs at least 2 layers");
  for (std::size_t l = 0; l < dims.size(); ++l) {
    if (dims[l] <= 0) throw ConfigError("layer " + std::to_string(l) + " is empty");
  }
  const std::size_t last = dims.size() - 1;
  const std::size_t sensory = spec.direction == FlowDirection::FromSensory ? 0 : last;
  const std::size_t label = spec.direction == FlowDirection::FromSensory ? last : 0;

  // Vertex order: sensory layer, label layer (if any), then the rest in flow order.
  LayeredLayout out;
  out.layers.resize(dims.size());
  Index next = 0;
  auto place = [&](std::size_t l) {
    out.layers[l] = {next, next + dims[l]};
    next += dims[l];
  };
  place(sensory);
  if (spec.labels) place(label);
  out.d = next;
  for (std::size_t l = 0; l < dims.size(); ++l) {
    if (l == sensory || (spec.labels && l == label)) continue;
    place(l);
  }

  MaskMatrix m = MaskMatrix::Zero(next, next);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) fill_block(m, out.layers[l + 1], out.layers[l]);
  for (std::size_t l = 0; l < dims.size(); ++l) {
    const bool hidden = l != sensory && !(spec.labels && l == label);
    if (spec.lateral || (spec.recurrent && hidden)) fill_block(m, out.layers[l], out.layers[l]);
  }
  clear_diagonal(m);
  out.mask = TopologyMask(std::move(m));
  return out;
}

PCGraph layered(const LayeredSpec& spec, const GraphOptions& options) {
  LayeredLayout layout = layered_layout(spec);
  Matrix w = initialize_weights(layout.mask, options.init_gain, options.seed);
  std::ostringstream desc;
  desc << "kind=layered;dims=" << join(spec.dims) << ";direction=" << to_string(spec.direction)
       << ";labels=" << spec.labels << ";lateral=" << spec.lateral << ";recurrent=" << spec.recurrent;
  return PCGraph(layout.d, std::move(layout.mask), std::move(w), options.activation, desc.str());
}

AssemblyLayout assembly_layout(const AssemblySpec& spec) {
  if (!(spec.p > 0.0 && spec.p <= 1.0)) throw ConfigError("assembly p must lie in (0, 1]");
  if (!(spec.k_frac > 0.0 && spec.k_frac <= 1.0)) throw ConfigError("assembly k_frac must lie in (0, 1]");
  if (!(spec.attach_p > 0.0 && spec.attach_p <= 1.0)) throw ConfigError("assembly attach_p must lie in (0, 1]");
  if (spec.cluster_sizes.empty()) throw ConfigError("assembly needs at least one cluster");
  if (spec.pixels < 0 || spec.labels < 0) throw ConfigError("negative sensory counts");
  const int count = static_cast<int>(spec.cluster_sizes.size());
  auto check = [&](int c, const char* what) {
    if (c < 0 || c >= count) {
      throw ConfigError(std::string(what) + " cluster index " + std::to_string(c) + " out of range (" +
                        std::to_string(count) + " clusters)");
    }
  };
  for (const auto& [from, to] : spec.inter_edges) {
    check(from, "inter-edge");
    check(to, "inter-edge");
  }
  for (int c : spec.label_targets) check(c, "label target");
  for (int c : spec.pixel_sources) check(c, "pixel source");

  AssemblyLayout out;
  out.d = spec.pixels + spec.labels;
  Index next = out.d;
  for (Index size : spec.cluster_sizes) {
    if (size <= 0) throw ConfigError("assembly clusters must be non-empty");
    out.clusters.push_back({next, next + size});
    next += size;
  }
  const ClusterRange pixels{0, spec.pixels};
  const ClusterRange labels{spec.pixels, spec.pixels + spec.labels};

  MaskMatrix m = MaskMatrix::Zero(next, next);
  std::mt19937_64 rng(spec.seed);
  auto sample_block = [&](const ClusterRange& post, const ClusterRange& pre, double p) {
    std::bernoulli_distribution edge(p);
    for (Index i = post.begin; i < post.end; ++i)
      for (Index j = pre.begin; j < pre.end; ++j)
        if (i != j && edge(rng)) m(i, j) = 1;
  };
  for (const auto& c : out.clusters) sample_block(c, c, spec.p);
  for (const auto& [from, to] : spec.inter_edges) sample_block(out.clusters[to], out.clusters[from], spec.p);
  if (spec.labels > 0)
    for (int c : spec.label_targets) sample_block(out.clusters[c], labels, spec.attach_p);
  if (spec.pixels > 0)
    for (int c : spec.pixel_sources) sample_block(pixels, out.clusters[c], spec.attach_p);

  out.mask = TopologyMask(std::move(m), ClusterSpec{out.clusters, spec.k_frac}, spec.p, spec.seed);
  return out;
}

PCGraph assembly(const AssemblySpec& spec, const GraphOptions& options) {
  AssemblyLayout layout = assembly_layout(spec);
  Matrix w = initialize_weights(layout.mask, options.init_gain, options.seed);
  std::ostringstream desc;
  desc << "kind=assembly;clusters=" << join(spec.cluster_sizes) << ";p=" << spec.p << ";k=" << spec.k_frac
       << ";pixels=" << spec.pixels << ";labels=" << spec.labels << ";seed=" << spec.seed;
  return PCGraph(layout.d, std::move(layout.mask), std::move(w), options.activation, desc.str());
}

std::vector<std::pair<int, int>> chain_edges(int count) {
  std::vector<std::pair<int, int>> edges;
  for (int c = 0; c + 1 < count; ++c) edges.emplace_back(c, c + 1);
  return edges;
}

PCGraph prune(const PCGraph& graph, const TopologyMask& mask) {
  require_same_size(mask.n(), graph.n(), "prune: mask vs graph");
  return PCGraph(graph.d(), mask, graph.weights(), graph.activation(), graph.descriptor() + ";pruned=1");
}

std::string to_string(FlowDirection direction) {
  return direction == FlowDirection::FromSensory ? "from_sensory" : "toward_sensory";
}

FlowDirection parse_direction(const std::string& name) {
  if (name == "from_sensory" || name == "discriminative") return FlowDirection::FromSensory;
  if (name == "toward_sensory" || name == "generative") return FlowDirection::TowardSensory;
  throw ConfigError("unknown layer direction '" + name + "' (expected from_sensory or toward_sensory)");
}

}  // namespace pcg
