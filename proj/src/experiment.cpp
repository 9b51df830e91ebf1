#include "pcg/experiment.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "pcg/checkpoint.hpp"
#include "pcg/engine.hpp"
#include "pcg/errors.hpp"
#include "pcg/mlp.hpp"
#include "pcg/tasks.hpp"
#include "pcg/topology.hpp"

namespace pcg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Any failure to read the requested checkpoint.
class CheckpointFailure : public Error {
 public:
  using Error::Error;
};

struct Context {
  const ExperimentConfig& cfg;
  const RunOptions& options;
  std::ostream& log;
  fs::path out;
  std::string digest;
  json artifacts = json::array();

  std::string path(const std::string& name) {
    artifacts.push_back(name);
    return (out / name).string();
  }
};

json confusion_json(const AccuracyReport& r) {
  json rows = json::array();
  for (const auto& row : r.confusion) rows.push_back(row);
  return rows;
}

void write_traces(Context& ctx, const std::string& stem, const std::vector<EnergyTrace>& traces) {
  for (std::size_t i = 0; i < traces.size(); ++i) {
    traces[i].write_csv(ctx.path(stem + "_trace_" + std::to_string(i) + ".csv"));
  }
}

void export_grid(Context& ctx, const std::string& name, const std::vector<Matrix>& rows_of_images,
                 const ImageDataset& like) {
  if (rows_of_images.empty() || rows_of_images.front().cols() == 0) return;
  const Index cols = rows_of_images.front().cols();
  Matrix tiles(like.pixels(), cols * static_cast<Index>(rows_of_images.size()));
  for (std::size_t r = 0; r < rows_of_images.size(); ++r) {
    tiles.middleCols(static_cast<Index>(r) * cols, cols) = rows_of_images[r];
  }
  GridLayout layout{static_cast<Index>(rows_of_images.size()), cols, like.rows, like.cols};
  export_image_grid(tiles, layout, ctx.path(name));
}

ImageDataset test_subset(const Datasets& data, Index count) {
  return count > 0 ? data.test.head(count) : data.test;
}

struct Trained {
  PCGraph graph;
  int epochs = 0;
};

Trained train_graph(Context& ctx, const Datasets& data) {
  const auto& cfg = ctx.cfg;
  PCGraph graph = build_graph(cfg.topology, data.train.pixels(), cfg.data.labels);
  const Matrix samples = cfg.data.labels ? data.train.with_onehot_labels() : data.train.images;
  Trainer trainer(graph, cfg.train_schedule(graph.d(), data.train.pixels()));
  ctx.log << "training " << graph.descriptor() << " on " << samples.cols() << " samples\n";
  try {
    trainer.run(samples, [&](const EpochStats& s) {
      ctx.log << "  epoch " << s.epoch << "  energy " << s.mean_energy << "  (" << s.seconds << " s)\n";
    });
  } catch (const DivergenceError&) {
    trainer.trace().write_csv((ctx.out / "divergence_trace.csv").string());
    throw;
  }
  trainer.trace().write_csv(ctx.path("train_trace.csv"));
  return {std::move(graph), trainer.epochs_completed()};
}

Trained obtain_graph(Context& ctx, const Datasets& data) {
  if (!ctx.options.checkpoint.empty() && ctx.options.verb != "train") {
    std::optional<Checkpoint> loaded;
    try {
      loaded = load_checkpoint(ctx.options.checkpoint);
    } catch (const Error& e) {
      throw CheckpointFailure(e.what());
    }
    Checkpoint& ck = *loaded;
    ctx.log << "loaded " << ctx.options.checkpoint << " (" << ck.graph.descriptor() << ")\n";
    return {std::move(ck.graph), ck.meta.epochs};
  }
  Trained t = train_graph(ctx, data);
  const std::string ck_path =
      ctx.options.checkpoint.empty() ? ctx.path("model.ckpt") : ctx.options.checkpoint;
  save_checkpoint(t.graph, {t.epochs, ctx.cfg.seed, ctx.digest}, ck_path);
  return t;
}

json task_classify(Context& ctx, const PCGraph& graph, const Datasets& data) {
  const ImageDataset test = test_subset(data, ctx.cfg.classify.count);
  std::vector<EnergyTrace> traces;
  TaskOptions opts = ctx.cfg.task_options();
  opts.traces = &traces;
  const AccuracyReport r = evaluate_accuracy(graph, test, opts);
  if (!traces.empty()) traces.front().write_csv(ctx.path("classify_trace.csv"));
  ctx.log << "classify: accuracy " << r.accuracy << " on " << r.count << " images\n";
  return {{"accuracy", r.accuracy}, {"count", r.count}, {"confusion", confusion_json(r)}};
}

json task_generate(Context& ctx, const PCGraph& graph, const Datasets& data) {
  const auto& labels = ctx.cfg.generate.labels;
  std::vector<EnergyTrace> traces;
  TaskOptions opts = ctx.cfg.task_options();
  opts.traces = &traces;
  const Matrix images = generate(graph, labels, data.train.pixels(), opts);
  write_traces(ctx, "generate", traces);
  export_grid(ctx, "generate.pgm", {images}, data.train);
  const std::vector<int> back = classify(graph, images, ctx.cfg.task_options());
  int agree = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) agree += back[i] == labels[i] ? 1 : 0;
  ctx.log << "generate: " << agree << "/" << labels.size() << " classified back to their label\n";
  return {{"labels", labels}, {"classified_back", back}, {"self_consistent", agree}};
}

json task_reconstruct(Context& ctx, const PCGraph& graph, const Datasets& data) {
  const auto& rc = ctx.cfg.reconstruct;
  const ImageDataset test = data.test.head(rc.count);
  const Corruption c = Corruption::mask_region(rc.fraction, rc.region);
  Matrix cues(test.pixels(), test.size());
  std::vector<Index> known;
  std::vector<Index> masked;
  for (Index i = 0; i < test.size(); ++i) {
    CorruptedImage ci = corrupt(test.images.col(i), test.rows, test.cols, c);
    cues.col(i) = ci.image;
    known = std::move(ci.known);
    masked = std::move(ci.masked);
  }
  std::vector<EnergyTrace> traces;
  TaskOptions opts = ctx.cfg.task_options();
  opts.traces = &traces;
  const Matrix out = reconstruct(graph, cues, known, rc.mode, rc.with_label ? &test.labels : nullptr, opts);
  write_traces(ctx, "reconstruct", traces);
  const Vector mse = mse_per_column(out(masked, Eigen::all), test.images(masked, Eigen::all));
  const Vector zero = test.images(masked, Eigen::all).colwise().squaredNorm().transpose() /
                      static_cast<double>(masked.size());
  Index better = 0;
  for (Index i = 0; i < mse.size(); ++i) better += mse(i) < zero(i) ? 1 : 0;
  const Index shown = std::min<Index>(10, test.size());
  export_grid(ctx, "reconstruct.pgm", {test.images.leftCols(shown), cues.leftCols(shown), out.leftCols(shown)},
              test);
  ctx.log << "reconstruct: masked MSE " << mse.mean() << " vs zero-fill " << zero.mean() << "\n";
  return {{"count", test.size()},
          {"masked_mse", mse.mean()},
          {"zero_fill_masked_mse", zero.mean()},
          {"fraction_better_than_zero_fill", static_cast<double>(better) / static_cast<double>(mse.size())}};
}

Matrix gaussian_cues(const ImageDataset& set, double variance, std::uint64_t seed) {
  Matrix cues(set.pixels(), set.size());
  for (Index i = 0; i < set.size(); ++i) {
    cues.col(i) = corrupt(set.images.col(i), set.rows, set.cols, Corruption::gaussian(variance, corruption_seed(seed, i)))
                      .image;
  }
  return cues;
}

json task_denoise(Context& ctx, const PCGraph& graph, const Datasets& data) {
  const auto& dc = ctx.cfg.denoise;
  const ImageDataset test = data.test.head(dc.count);
  const Matrix noisy = gaussian_cues(test, dc.variance, ctx.cfg.seed);
  std::vector<EnergyTrace> traces;
  TaskOptions opts = ctx.cfg.task_options();
  opts.traces = &traces;
  const Matrix out = denoise(graph, noisy, opts);
  write_traces(ctx, "denoise", traces);
  const double in_mse = mse_per_column(noisy, test.images).mean();
  const double out_mse = mse_per_column(out, test.images).mean();
  const Index shown = std::min<Index>(10, test.size());
  export_grid(ctx, "denoise.pgm", {test.images.leftCols(shown), noisy.leftCols(shown), out.leftCols(shown)}, test);
  ctx.log << "denoise: MSE " << in_mse << " -> " << out_mse << "\n";
  return {{"count", test.size()},
          {"variance", dc.variance},
          {"input_mse", in_mse},
          {"output_mse", out_mse},
          {"improvement", in_mse > 0.0 ? 1.0 - out_mse / in_mse : 0.0}};
}

json task_am(Context& ctx, const Datasets& data) {
  const auto& am = ctx.cfg.am;
  const ImageDataset memories = data.train.head(am.memories);
  TopologyConfig tc = ctx.cfg.topology;
  tc.kind = "fully_connected";
  tc.n = am.n;
  PCGraph graph = build_graph(tc, memories.pixels(), false);
  TrainSchedule s;
  s.T = am.T;
  s.gamma = am.gamma_values;
  s.alpha = am.alpha_weights;
  s.lambda = am.lambda;
  s.epochs = am.epochs;
  s.batch_size = memories.size();
  s.seed = ctx.cfg.seed;
  Trainer trainer(graph, s);
  ctx.log << "am: memorizing " << memories.size() << " images on n=" << am.n << "\n";
  try {
    trainer.run(memories.images);
  } catch (const DivergenceError&) {
    trainer.trace().write_csv((ctx.out / "divergence_trace.csv").string());
    throw;
  }
  trainer.trace().write_csv(ctx.path("am_train_trace.csv"));

  TaskOptions opts = ctx.cfg.task_options();
  opts.query.T = am.query_T;
  opts.query.gamma = am.gamma_values;
  json result = {{"memories", memories.size()}, {"n", am.n}, {"final_train_energy", trainer.trace().back().energy}};
  for (CueKind kind : am.cues) {
    Matrix cues;
    std::vector<Index> known;
    if (kind == CueKind::Half) {
      const Corruption c = Corruption::mask_region(am.fraction, am.region);
      cues.resize(memories.pixels(), memories.size());
      for (Index i = 0; i < memories.size(); ++i) {
        CorruptedImage ci = corrupt(memories.images.col(i), memories.rows, memories.cols, c);
        cues.col(i) = ci.image;
        known = std::move(ci.known);
      }
    } else {
      cues = gaussian_cues(memories, am.variance, ctx.cfg.seed);
    }
    const RetrievalResult r = am_retrieve(graph, memories.images, cues, known, kind, opts);
    const Index shown = std::min<Index>(10, memories.size());
    export_grid(ctx, "am_" + to_string(kind) + ".pgm",
                {memories.images.leftCols(shown), cues.leftCols(shown), r.images.leftCols(shown)}, memories);
    ctx.log << "am: " << to_string(kind) << " cues retrieve " << r.rate << "\n";
    result[to_string(kind)] = {{"rate", r.rate}, {"mean_mse", r.mse.mean()}};
  }
  return result;
}

json task_baseline(Context& ctx, const Datasets& data) {
  const auto& bc = ctx.cfg.baseline;
  std::vector<Index> dims = {data.train.pixels()};
  dims.insert(dims.end(), bc.hidden.begin(), bc.hidden.end());
  BpSchedule schedule = ctx.cfg.baseline_schedule();
  auto progress = [&](const BpEpochStats& s) {
    ctx.log << "  epoch " << s.epoch << "  loss " << s.mean_loss << "  (" << s.seconds << " s)\n";
  };
  if (!bc.autoencoder) {
    dims.push_back(kClasses);
    MLP mlp = MLP::random(dims, bc.activation, bc.output, ctx.cfg.topology.seed);
    BpTrainer trainer(mlp, schedule);
    ctx.log << "baseline: training mlp classifier\n";
    trainer.run(data.train.images, onehot_matrix(data.train.labels), progress);
    trainer.trace().write_csv(ctx.path("baseline_trace.csv"));
    const ImageDataset test = test_subset(data, ctx.cfg.classify.count);
    const AccuracyReport r =
        evaluate_accuracy([&](const Matrix& x) { return predict_classes(mlp, x); }, test);
    ctx.log << "baseline: accuracy " << r.accuracy << "\n";
    return {{"accuracy", r.accuracy}, {"count", r.count}, {"confusion", confusion_json(r)}};
  }
  dims.push_back(data.train.pixels());
  MLP mlp = MLP::random(dims, bc.activation, MlpOutput::ClippedLinear, ctx.cfg.topology.seed);
  BpTrainer trainer(mlp, schedule);
  ctx.log << "baseline: training autoencoder\n";
  trainer.run(data.train.images, data.train.images, progress);
  trainer.trace().write_csv(ctx.path("baseline_trace.csv"));
  const ImageDataset test = data.test.head(ctx.cfg.denoise.count);
  const Matrix noisy = gaussian_cues(test, ctx.cfg.denoise.variance, ctx.cfg.seed);
  const Matrix out = autoencode(mlp, noisy);
  const double in_mse = mse_per_column(noisy, test.images).mean();
  const double out_mse = mse_per_column(out, test.images).mean();
  const Index shown = std::min<Index>(10, test.size());
  export_grid(ctx, "baseline_denoise.pgm", {test.images.leftCols(shown), noisy.leftCols(shown), out.leftCols(shown)},
              test);
  return {{"input_mse", in_mse}, {"output_mse", out_mse}};
}

std::vector<std::string> verb_tasks(const ExperimentConfig& cfg, const std::string& verb) {
  auto listed = [&](const std::string& t) { return std::find(cfg.tasks.begin(), cfg.tasks.end(), t) != cfg.tasks.end(); };
  if (verb == "train") return cfg.tasks;
  if (verb == "evaluate") return {"classify"};
  if (verb == "am") return {"am"};
  if (verb == "baseline") return {"baseline"};
  if (verb == "query") {
    std::vector<std::string> out;
    for (const char* t : {"generate", "reconstruct", "denoise"}) {
      if (listed(t)) out.emplace_back(t);
    }
    if (out.empty()) throw ConfigError("query: experiment.tasks lists none of generate, reconstruct, denoise");
    return out;
  }
  throw ConfigError("unknown verb '" + verb + "' (expected train, query, evaluate, am or baseline)");
}

}  // namespace

std::uint64_t corruption_seed(std::uint64_t seed, Index i) {
  return seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(i) + 1;
}

Datasets load_datasets(const DataConfig& data, std::uint64_t seed) {
  Datasets out;
  if (data.source == "synthetic") {
    out.train = synthetic_digits(data.train_count > 0 ? data.train_count : 500, data.synthetic_side, seed);
    out.test = synthetic_digits(data.test_count > 0 ? data.test_count : 100, data.synthetic_side, seed + 1);
    return out;
  }
  const fs::path dir = data.resolved_dir();
  auto need = [&](const std::string& name) {
    const fs::path p = dir / name;
    if (!fs::exists(p)) {
      throw DataError("missing dataset file " + p.string() + " (set data.dir or $" + kDataDirEnv + ")");
    }
    return p.string();
  };
  out.train = load_idx(need(data.train_images), need(data.train_labels));
  out.test = load_idx(need(data.test_images), need(data.test_labels));
  if (data.train_count > 0) out.train = out.train.head(data.train_count);
  if (data.test_count > 0) out.test = out.test.head(data.test_count);
  return out;
}

PCGraph build_graph(const TopologyConfig& tc, Index pixels, bool labels) {
  GraphOptions opts;
  opts.activation = tc.activation;
  opts.init_gain = tc.init_gain;
  opts.seed = tc.seed;
  const Index label_count = labels ? kClasses : 0;
  if (tc.kind == "fully_connected") return fully_connected(tc.n, pixels + label_count, opts);
  if (tc.kind == "layered") {
    LayeredSpec spec;
    spec.direction = tc.direction;
    spec.labels = labels;
    spec.lateral = tc.lateral;
    spec.recurrent = tc.recurrent;
    spec.dims.push_back(pixels);
    spec.dims.insert(spec.dims.end(), tc.hidden.begin(), tc.hidden.end());
    if (labels) spec.dims.push_back(kClasses);
    if (tc.direction == FlowDirection::TowardSensory) std::reverse(spec.dims.begin(), spec.dims.end());
    return layered(spec, opts);
  }
  if (tc.kind == "assembly") {
    AssemblySpec spec;
    spec.cluster_sizes = tc.clusters;
    const int count = static_cast<int>(tc.clusters.size());
    spec.inter_edges = chain_edges(count);
    if (tc.back_edges) {
      for (int c = 0; c + 1 < count; ++c) spec.inter_edges.emplace_back(c + 1, c);
    }
    spec.p = tc.p;
    spec.k_frac = tc.k;
    spec.seed = tc.seed;
    spec.pixels = pixels;
    spec.labels = label_count;
    if (labels) spec.label_targets = {tc.label_cluster};
    spec.pixel_sources = {tc.pixel_cluster < 0 ? count - 1 : tc.pixel_cluster};
    spec.attach_p = tc.attach_p;
    return assembly(spec, opts);
  }
  throw ConfigError("topology.kind: unknown kind '" + tc.kind + "'");
}

RunOutcome execute(ExperimentConfig cfg, const RunOptions& options, std::ostream& log) {
  if (options.seed) cfg.seed = *options.seed;
  if (options.threads) cfg.threads = *options.threads;
  if (!options.out_dir.empty()) cfg.output_dir = options.out_dir;
  cfg.validate();
  const std::vector<std::string> tasks = verb_tasks(cfg, options.verb);

  Context ctx{cfg, options, log, fs::path(cfg.output_dir), config_digest(cfg)};
  fs::create_directories(ctx.out);
  std::ofstream(ctx.out / "config.ini") << canonical_text(cfg);

  const Datasets data = load_datasets(cfg.data, cfg.seed);
  json metrics = json::object();
  std::optional<Trained> trained;
  auto graph = [&]() -> const PCGraph& {
    if (!trained) trained = obtain_graph(ctx, data);
    return trained->graph;
  };
  if (options.verb == "train") graph();
  for (const auto& t : tasks) {
    if (t == "classify") metrics[t] = task_classify(ctx, graph(), data);
    if (t == "generate") metrics[t] = task_generate(ctx, graph(), data);
    if (t == "reconstruct") metrics[t] = task_reconstruct(ctx, graph(), data);
    if (t == "denoise") metrics[t] = task_denoise(ctx, graph(), data);
    if (t == "am") metrics[t] = task_am(ctx, data);
    if (t == "baseline") metrics[t] = task_baseline(ctx, data);
  }
  if (trained) metrics["train"] = {{"epochs", trained->epochs}, {"descriptor", trained->graph.descriptor()}};

  json report = {{"experiment", cfg.name},   {"verb", options.verb},  {"config_digest", ctx.digest},
                 {"seed", cfg.seed},         {"metrics", metrics},    {"artifacts", ctx.artifacts}};
  RunOutcome outcome;
  outcome.report = report.dump(2);
  outcome.report_path = (ctx.out / "report.json").string();
  std::ofstream(outcome.report_path) << outcome.report << '\n';
  log << "report: " << outcome.report_path << "\n";
  return outcome;
}

int run(const ExperimentConfig& config, const RunOptions& options, std::ostream& log, std::ostream& err) {
  try {
    execute(config, options, log);
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DivergenceError& e) {
    err << "divergence: " << e.what() << " (trace written to divergence_trace.csv)\n";
    return kExitDivergence;
  } catch (const CheckpointFailure& e) {
    err << "checkpoint error: " << e.what() << '\n';
    return kExitCheckpoint;
  } catch (const FormatError& e) {
    err << "data format error: " << e.what() << '\n';
    return kExitDataMissing;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitDataMissing;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

int run(const std::string& config_path, const RunOptions& options, std::ostream& log, std::ostream& err) {
  try {
    return run(load_config(config_path), options, log, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitDataMissing;
  }
}

}  // namespace pcg
