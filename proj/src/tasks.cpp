#include "pcg/tasks.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "pcg/errors.hpp"

namespace pcg {

namespace {

std::vector<Index> range(Index begin, Index end) {
  std::vector<Index> v(static_cast<std::size_t>(end - begin));
  std::iota(v.begin(), v.end(), begin);
  return v;
}

Matrix onehot_block(const std::vector<int>& labels, Index first, Index count) {
  Matrix out = Matrix::Zero(kClasses, count);
  for (Index i = 0; i < count; ++i) out.col(i) = onehot(labels[static_cast<std::size_t>(first + i)]);
  return out;
}

/// Runs the query `body(first, count)` over consecutive lane chunks and stacks
/// rows [row_offset, row_offset + rows) of the final states. Chunks are independent, so they may run on several threads;
/// the result does not depend on the thread count.
template <class Fn>
Matrix by_chunks(Index total, const TaskOptions& options, Index row_offset, Index rows, Fn&& body) {
  Matrix out(rows, total);
  const Index step = std::max<Index>(1, options.chunk);
  const Index chunks = (total + step - 1) / step;
  if (options.traces) options.traces->assign(static_cast<std::size_t>(chunks), EnergyTrace{});
  std::atomic<Index> next{0};
  std::exception_ptr failure;
  std::mutex failure_lock;
  auto worker = [&] {
    for (Index c = next++; c < chunks; c = next++) {
      const Index first = c * step;
      const Index count = std::min(step, total - first);
      try {
        QueryResult r = body(first, count);
        out.middleCols(first, count) = r.state.x.middleRows(row_offset, rows);
        if (options.traces) (*options.traces)[static_cast<std::size_t>(c)] = std::move(r.trace);
      } catch (...) {
        std::lock_guard<std::mutex> guard(failure_lock);
        if (!failure) failure = std::current_exception();
        next = chunks;
      }
    }
  };
  const int extra = static_cast<int>(std::min<Index>(std::max(options.threads, 1), chunks)) - 1;
  std::vector<std::thread> pool;
  for (int i = 0; i < extra; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

ClampSpec base_clamp(const TaskOptions& options, Index first) {
  ClampSpec clamp;
  clamp.free_init = options.free_init;
  clamp.seed = options.seed + static_cast<std::uint64_t>(first);
  return clamp;
}

Matrix clipped(const Matrix& m) { return m.cwiseMax(0.0).cwiseMin(1.0); }

}  // namespace

std::vector<Index> SensoryLayout::pixel_vertices() const { return range(0, pixels); }

std::vector<Index> SensoryLayout::label_vertices() const { return range(label_begin, label_begin + label_count); }

SensoryLayout sensory_layout(const PCGraph& graph, Index pixels) {
  SensoryLayout layout;
  layout.pixels = pixels;
  if (graph.d() == pixels) return layout;
  if (graph.d() == pixels + kClasses) {
    layout.label_begin = pixels;
    layout.label_count = kClasses;
    return layout;
  }
  throw ConfigError("graph has " + std::to_string(graph.d()) + " sensory vertices; expected " +
                    std::to_string(pixels) + " pixels, optionally followed by 10 labels");
}

QueryMode parse_query_mode(const std::string& name) {
  if (name == "conditioning") return QueryMode::Conditioning;
  if (name == "initialization") return QueryMode::Initialization;
  throw ConfigError("unknown query mode '" + name + "' (expected conditioning or initialization)");
}

CueKind parse_cue_kind(const std::string& name) {
  if (name == "half") return CueKind::Half;
  if (name == "noisy") return CueKind::Noisy;
  throw ConfigError("unknown cue kind '" + name + "' (expected half or noisy)");
}

std::string to_string(QueryMode m) { return m == QueryMode::Conditioning ? "conditioning" : "initialization"; }

std::string to_string(CueKind c) { return c == CueKind::Half ? "half" : "noisy"; }

int argmax_label(const Eigen::Ref<const Vector>& values) {
  int best = 0;
  for (Index i = 1; i < values.size(); ++i) {
    if (values(i) > values(best)) best = static_cast<int>(i);
  }
  return best;
}

std::vector<int> classify(const PCGraph& graph, const Eigen::Ref<const Matrix>& images, const TaskOptions& options) {
  const SensoryLayout layout = sensory_layout(graph, images.rows());
  if (!layout.has_labels()) throw ConfigError("classify: graph has no label vertices");
  const auto pixels = layout.pixel_vertices();
  const Matrix labels = by_chunks(images.cols(), options, layout.label_begin, kClasses, [&](Index first, Index count) {
    ClampSpec clamp = base_clamp(options, first);
    clamp.condition(pixels, images.middleCols(first, count));
    return query_by_conditioning(graph, clamp, options.query);
  });
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(labels.cols()));
  for (Index i = 0; i < labels.cols(); ++i) out.push_back(argmax_label(labels.col(i)));
  return out;
}

int classify_one(const PCGraph& graph, const Eigen::Ref<const Vector>& image, const TaskOptions& options) {
  const Matrix m = image;
  return classify(graph, m, options).front();
}

Matrix generate(const PCGraph& graph, const std::vector<int>& labels, Index pixels, const TaskOptions& options) {
  const SensoryLayout layout = sensory_layout(graph, pixels);
  if (!layout.has_labels()) throw ConfigError("generate: graph has no label vertices");
  for (int l : labels) onehot(l);  // range check up front
  const auto label_vertices = layout.label_vertices();
  return clipped(by_chunks(static_cast<Index>(labels.size()), options, 0, pixels, [&](Index first, Index count) {
    ClampSpec clamp = base_clamp(options, first);
    clamp.condition(label_vertices, onehot_block(labels, first, count));
    return query_by_conditioning(graph, clamp, options.query);
  }));
}

Matrix reconstruct(const PCGraph& graph, const Eigen::Ref<const Matrix>& images, const std::vector<Index>& known,
                   QueryMode mode, const std::vector<int>* labels, const TaskOptions& options) {
  const Index pixels = images.rows();
  const SensoryLayout layout = sensory_layout(graph, pixels);
  if (known.empty()) throw ConfigError("reconstruct: the known pixel set is empty");
  for (Index p : known) {
    if (p < 0 || p >= pixels) throw ConfigError("reconstruct: known pixel " + std::to_string(p) + " out of range");
  }
  if (labels) {
    if (!layout.has_labels()) throw ConfigError("reconstruct: labels given but the graph has no label vertices");
    require_same_size(static_cast<long>(labels->size()), images.cols(), "reconstruct: labels vs images");
  }
  const auto label_vertices = layout.label_vertices();
  return clipped(by_chunks(images.cols(), options, 0, pixels, [&](Index first, Index count) {
    ClampSpec clamp = base_clamp(options, first);
    const Matrix known_values = images(known, Eigen::seqN(first, count));
    if (mode == QueryMode::Conditioning) {
      clamp.condition(known, known_values);
      if (labels) clamp.condition(label_vertices, onehot_block(*labels, first, count));
      return query_by_conditioning(graph, clamp, options.query);
    }
    clamp.initialize(known, known_values);
    if (labels) clamp.initialize(label_vertices, onehot_block(*labels, first, count));
    return query_by_initialization(graph, clamp, options.query);
  }));
}

Matrix denoise(const PCGraph& graph, const Eigen::Ref<const Matrix>& noisy, const TaskOptions& options) {
  const Index pixels = noisy.rows();
  const SensoryLayout layout = sensory_layout(graph, pixels);
  const auto pixel_vertices = layout.pixel_vertices();
  return clipped(by_chunks(noisy.cols(), options, 0, pixels, [&](Index first, Index count) {
    ClampSpec clamp = base_clamp(options, first);
    clamp.initialize(pixel_vertices, noisy.middleCols(first, count));
    return query_by_initialization(graph, clamp, options.query);
  }));
}

RetrievalResult am_retrieve(const PCGraph& graph, const Eigen::Ref<const Matrix>& memories,
                            const Eigen::Ref<const Matrix>& cues, const std::vector<Index>& known, CueKind kind,
                            const TaskOptions& options, double threshold) {
  require_same_size(memories.rows(), cues.rows(), "am_retrieve: memory vs cue rows");
  require_same_size(memories.cols(), cues.cols(), "am_retrieve: memory vs cue count");
  RetrievalResult out;
  out.images = kind == CueKind::Half ? reconstruct(graph, cues, known, QueryMode::Conditioning, nullptr, options)
                                     : denoise(graph, cues, options);
  out.mse = mse_per_column(out.images, memories);
  Index hits = 0;
  for (Index i = 0; i < out.mse.size(); ++i) {
    out.success.push_back(out.mse(i) < threshold);
    hits += out.success.back() ? 1 : 0;
  }
  out.rate = out.mse.size() ? static_cast<double>(hits) / static_cast<double>(out.mse.size()) : 0.0;
  return out;
}

AccuracyReport evaluate_accuracy(const BatchClassifier& classifier, const ImageDataset& data) {
  if (data.size() == 0) throw ConfigError("evaluate_accuracy: empty dataset");
  const std::vector<int> predicted = classifier(data.images);
  require_same_size(static_cast<long>(predicted.size()), data.size(), "classifier output count");
  AccuracyReport report;
  report.count = data.size();
  Index correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const int truth = data.labels[i];
    const int guess = predicted[i];
    if (guess < 0 || guess >= kClasses) throw ConfigError("classifier returned class " + std::to_string(guess));
    ++report.confusion[static_cast<std::size_t>(truth)][static_cast<std::size_t>(guess)];
    correct += truth == guess ? 1 : 0;
  }
  report.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  return report;
}

AccuracyReport evaluate_accuracy(const PCGraph& graph, const ImageDataset& data, const TaskOptions& options) {
  return evaluate_accuracy([&](const Matrix& images) { return classify(graph, images, options); }, data);
}

}  // namespace pcg
