#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "pcg/checkpoint.hpp"
#include "pcg/config.hpp"
#include "pcg/data.hpp"
#include "pcg/dynamics.hpp"
#include "pcg/engine.hpp"
#include "pcg/errors.hpp"
#include "pcg/experiment.hpp"
#include "pcg/mlp.hpp"
#include "pcg/tasks.hpp"
#include "pcg/topology.hpp"

namespace py = pybind11;
using namespace pcg;

namespace {

GraphOptions graph_options(const std::string& activation, double init_gain, std::uint64_t seed) {
  GraphOptions o;
  o.activation = parse_activation(activation);
  o.init_gain = init_gain;
  o.seed = seed;
  return o;
}

std::vector<std::vector<double>> trace_rows(const EnergyTrace& trace) {
  std::vector<std::vector<double>> rows;
  rows.reserve(trace.size());
  for (const auto& s : trace.samples()) rows.push_back({double(s.step), s.energy, s.seconds});
  return rows;
}

ClampSpec make_clamp(const std::vector<Index>& conditioned, const Matrix& conditioned_values,
                     const std::vector<Index>& initialized, const Matrix& initialized_values,
                     const std::string& free_init, std::uint64_t seed) {
  ClampSpec c;
  if (!conditioned.empty()) c.condition(conditioned, conditioned_values);
  if (!initialized.empty()) c.initialize(initialized, initialized_values);
  c.free_init = parse_init_policy(free_init);
  c.seed = seed;
  return c;
}

TaskOptions task_options(int T, double gamma, const std::string& free_init, std::uint64_t seed, int threads) {
  TaskOptions o;
  o.query.T = T;
  o.query.gamma = gamma;
  o.query.record_trace = false;
  o.free_init = parse_init_policy(free_init);
  o.seed = seed;
  o.threads = threads;
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Predictive-coding graphs: masked energy-based networks of any topology";

  static py::exception<Error> base(m, "PcgError");
  static py::exception<ConfigError> config_error(m, "ConfigError", base.ptr());
  static py::exception<DimensionError> dimension_error(m, "DimensionError", base.ptr());
  static py::exception<FormatError> format_error(m, "FormatError", base.ptr());
  static py::exception<DataError> data_error(m, "DataError", base.ptr());
  static py::exception<DivergenceError> divergence_error(m, "DivergenceError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      config_error(e.what());
    } catch (const DimensionError& e) {
      dimension_error(e.what());
    } catch (const FormatError& e) {
      format_error(e.what());
    } catch (const DataError& e) {
      data_error(e.what());
    } catch (const DivergenceError& e) {
      divergence_error(e.what());
    } catch (const Error& e) {
      base(e.what());
    }
  });

  py::class_<PCGraph>(m, "Graph")
      .def_property_readonly("n", &PCGraph::n)
      .def_property_readonly("d", &PCGraph::d)
      .def_property_readonly("weights", [](const PCGraph& g) { return Matrix(g.weights()); })
      .def_property_readonly("mask", [](const PCGraph& g) { return MaskMatrix(g.mask().matrix()); })
      .def_property_readonly("activation", [](const PCGraph& g) { return std::string(to_string(g.activation())); })
      .def_property_readonly("descriptor", &PCGraph::descriptor)
      .def_property_readonly("edge_count", [](const PCGraph& g) { return g.mask().edge_count(); })
      .def_property_readonly("clusters",
                             [](const PCGraph& g) {
                               std::vector<std::pair<Index, Index>> out;
                               if (g.clusters()) {
                                 for (const auto& c : g.clusters()->clusters) out.emplace_back(c.begin, c.end);
                               }
                               return out;
                             })
      .def("set_weights", &PCGraph::set_weights, py::arg("weights"), "Replace W; entries off the mask are zeroed.")
      .def("copy", [](const PCGraph& g) { return PCGraph(g); })
      .def("__repr__", [](const PCGraph& g) {
        std::ostringstream os;
        os << "<Graph n=" << g.n() << " d=" << g.d() << " edges=" << g.mask().edge_count() << " "
           << to_string(g.activation()) << ">";
        return os.str();
      });

  // Topologies
  m.def(
      "fully_connected",
      [](Index n, Index d, const std::string& activation, double init_gain, std::uint64_t seed) {
        return fully_connected(n, d, graph_options(activation, init_gain, seed));
      },
      py::arg("n"), py::arg("d"), py::arg("activation") = "hardtanh", py::arg("init_gain") = 1.0,
      py::arg("seed") = 0);
  m.def(
      "layered",
      [](const std::vector<Index>& dims, bool labels, const std::string& direction, bool lateral, bool recurrent,
         const std::string& activation, double init_gain, std::uint64_t seed) {
        LayeredSpec spec;
        spec.dims = dims;
        spec.labels = labels;
        spec.direction = parse_direction(direction);
        spec.lateral = lateral;
        spec.recurrent = recurrent;
        return layered(spec, graph_options(activation, init_gain, seed));
      },
      py::arg("dims"), py::arg("labels") = false, py::arg("direction") = "from_sensory", py::arg("lateral") = false,
      py::arg("recurrent") = false, py::arg("activation") = "hardtanh", py::arg("init_gain") = 1.0,
      py::arg("seed") = 0);
  m.def(
      "assembly",
      [](const std::vector<Index>& cluster_sizes, const std::vector<std::pair<int, int>>& inter_edges, double p,
         double k_frac, std::uint64_t seed, Index pixels, Index labels, const std::vector<int>& label_targets,
         const std::vector<int>& pixel_sources, double attach_p, const std::string& activation, double init_gain,
         std::uint64_t weight_seed) {
        AssemblySpec spec;
        spec.cluster_sizes = cluster_sizes;
        spec.inter_edges = inter_edges;
        spec.p = p;
        spec.k_frac = k_frac;
        spec.seed = seed;
        spec.pixels = pixels;
        spec.labels = labels;
        spec.label_targets = label_targets;
        spec.pixel_sources = pixel_sources;
        spec.attach_p = attach_p;
        return assembly(spec, graph_options(activation, init_gain, weight_seed));
      },
      py::arg("cluster_sizes"), py::arg("inter_edges"), py::arg("p") = 0.1, py::arg("k_frac") = 0.2,
      py::arg("seed") = 0, py::arg("pixels") = 0, py::arg("labels") = 0,
      py::arg("label_targets") = std::vector<int>{}, py::arg("pixel_sources") = std::vector<int>{},
      py::arg("attach_p") = 1.0, py::arg("activation") = "hardtanh", py::arg("init_gain") = 1.0,
      py::arg("weight_seed") = 0);
  m.def("chain_edges", &chain_edges, py::arg("count"));
  m.def(
      "prune", [](const PCGraph& g, const MaskMatrix& mask) { return prune(g, TopologyMask(mask, g.clusters())); },
      py::arg("graph"), py::arg("mask"), "W <- W * M, with M a 0/1 (post, pre) matrix.");

  // Dynamics
  m.def(
      "predict", [](const PCGraph& g, const Matrix& x) { return predict(g, x); }, py::arg("graph"), py::arg("x"),
      "mu = W f(x), one column per lane.");
  m.def(
      "errors", [](const PCGraph& g, const Matrix& x) { return compute_errors(x, predict(g, x)); },
      py::arg("graph"), py::arg("x"));
  m.def(
      "energy", [](const PCGraph& g, const Matrix& x) { return energy(compute_errors(x, predict(g, x))); },
      py::arg("graph"), py::arg("x"), "Half the sum of squared errors over vertices and lanes.");
  m.def(
      "inference_step",
      [](const PCGraph& g, const Matrix& x, double gamma, const std::vector<Index>& conditioned) {
        NodeState s = make_state(g, x);
        inference_step_inplace(g, s, gamma, conditioned);
        return Matrix(s.x);
      },
      py::arg("graph"), py::arg("x"), py::arg("gamma"), py::arg("conditioned") = std::vector<Index>{});
  m.def(
      "weight_gradient", [](const PCGraph& g, const Matrix& x) { return weight_gradient(g, make_state(g, x)); },
      py::arg("graph"), py::arg("x"), "-dE/dW averaged over lanes (unmasked).");
  m.def(
      "topk_fire",
      [](const Matrix& activated, const std::vector<std::pair<Index, Index>>& clusters, double k_frac) {
        std::vector<ClusterRange> ranges;
        for (auto [b, e] : clusters) ranges.push_back({b, e});
        return topk_fire(activated, ranges, k_frac);
      },
      py::arg("activated"), py::arg("clusters"), py::arg("k_frac"));

  // Training and queries
  m.def(
      "train",
      [](const PCGraph& graph, const Matrix& data, int T, double gamma, double alpha, double lambda, int epochs,
         Index batch_size, const std::string& optimizer, const std::string& internal_init, std::uint64_t seed) {
        TrainSchedule s;
        s.T = T;
        s.gamma = gamma;
        s.alpha = alpha;
        s.lambda = lambda;
        s.epochs = epochs;
        s.batch_size = batch_size;
        s.optimizer = parse_optimizer(optimizer);
        s.internal_init = parse_init_policy(internal_init);
        s.seed = seed;
        TrainResult r = [&] {
          py::gil_scoped_release release;
          return train(graph, data, s);
        }();
        return py::make_tuple(std::move(r.graph), trace_rows(r.trace));
      },
      py::arg("graph"), py::arg("data"), py::arg("T") = 20, py::arg("gamma") = 0.5, py::arg("alpha") = 1e-4,
      py::arg("lambda_") = 0.0, py::arg("epochs") = 1, py::arg("batch_size") = 32, py::arg("optimizer") = "adam",
      py::arg("internal_init") = "zeros", py::arg("seed") = 0,
      "Returns (trained graph, [[batch, energy, seconds], ...]). `data` has one column per sample, d rows.");
  m.def(
      "query",
      [](const PCGraph& graph, const std::string& mode, const std::vector<Index>& vertices, const Matrix& values,
         int T, double gamma, const std::string& free_init, std::uint64_t seed) {
        QueryOptions q;
        q.T = T;
        q.gamma = gamma;
        QueryResult r;
        if (mode == "conditioning") {
          r = query_by_conditioning(graph, make_clamp(vertices, values, {}, {}, free_init, seed), q);
        } else if (mode == "initialization") {
          r = query_by_initialization(graph, make_clamp({}, {}, vertices, values, free_init, seed), q);
        } else {
          throw ConfigError("mode must be conditioning or initialization, got '" + mode + "'");
        }
        return py::make_tuple(Matrix(r.state.x), trace_rows(r.trace));
      },
      py::arg("graph"), py::arg("mode"), py::arg("vertices"), py::arg("values"), py::arg("T") = 2000,
      py::arg("gamma") = 0.5, py::arg("free_init") = "zeros", py::arg("seed") = 0,
      "Returns (final x, [[step, energy, seconds], ...]). `values` is len(vertices) x lanes.");

  // Tasks
  m.def(
      "classify",
      [](const PCGraph& g, const Matrix& images, int T, double gamma, const std::string& free_init, int threads) {
        py::gil_scoped_release release;
        return classify(g, images, task_options(T, gamma, free_init, 0, threads));
      },
      py::arg("graph"), py::arg("images"), py::arg("T") = 200, py::arg("gamma") = 0.1,
      py::arg("free_init") = "zeros", py::arg("threads") = 1);
  m.def(
      "generate",
      [](const PCGraph& g, const std::vector<int>& labels, Index pixels, int T, double gamma,
         const std::string& free_init) {
        py::gil_scoped_release release;
        return generate(g, labels, pixels, task_options(T, gamma, free_init, 0, 1));
      },
      py::arg("graph"), py::arg("labels"), py::arg("pixels") = 784, py::arg("T") = 200, py::arg("gamma") = 0.1,
      py::arg("free_init") = "zeros");
  m.def(
      "reconstruct",
      [](const PCGraph& g, const Matrix& images, const std::vector<Index>& known, const std::string& mode,
         std::optional<std::vector<int>> labels, int T, double gamma) {
        py::gil_scoped_release release;
        return reconstruct(g, images, known, parse_query_mode(mode), labels ? &*labels : nullptr,
                           task_options(T, gamma, "zeros", 0, 1));
      },
      py::arg("graph"), py::arg("images"), py::arg("known"), py::arg("mode") = "conditioning",
      py::arg("labels") = py::none(), py::arg("T") = 200, py::arg("gamma") = 0.1);
  m.def(
      "denoise",
      [](const PCGraph& g, const Matrix& noisy, int T, double gamma) {
        py::gil_scoped_release release;
        return denoise(g, noisy, task_options(T, gamma, "zeros", 0, 1));
      },
      py::arg("graph"), py::arg("noisy"), py::arg("T") = 200, py::arg("gamma") = 0.1);
  m.def(
      "am_retrieve",
      [](const PCGraph& g, const Matrix& memories, const Matrix& cues, const std::vector<Index>& known,
         const std::string& kind, int T, double gamma, double threshold) {
        RetrievalResult r = [&] {
          py::gil_scoped_release release;
          return am_retrieve(g, memories, cues, known, parse_cue_kind(kind), task_options(T, gamma, "zeros", 0, 1),
                             threshold);
        }();
        return py::make_tuple(r.images, r.mse, r.rate);
      },
      py::arg("graph"), py::arg("memories"), py::arg("cues"), py::arg("known"), py::arg("kind"), py::arg("T") = 500,
      py::arg("gamma") = 0.1, py::arg("threshold") = kRetrievalThreshold,
      "Returns (retrieved images, per-memory MSE, retrieval rate).");

  // Data
  m.def(
      "load_idx",
      [](const std::string& images, const std::string& labels) {
        ImageDataset d = load_idx(images, labels);
        return py::make_tuple(d.images, d.labels);
      },
      py::arg("images_path"), py::arg("labels_path"), "Returns (pixels x count matrix in [0, 1], labels).");
  m.def(
      "corrupt_gaussian",
      [](const Vector& image, double variance, std::uint64_t seed) {
        return corrupt(image, 28, 28, Corruption::gaussian(variance, seed)).image;
      },
      py::arg("image"), py::arg("variance"), py::arg("seed") = 0);
  m.def(
      "mask_region",
      [](const Vector& image, Index rows, Index cols, double fraction, const std::string& region) {
        CorruptedImage c = corrupt(image, rows, cols, Corruption::mask_region(fraction, parse_region(region)));
        return py::make_tuple(c.image, c.known);
      },
      py::arg("image"), py::arg("rows") = 28, py::arg("cols") = 28, py::arg("fraction") = 0.5,
      py::arg("region") = "top", "Returns (masked image, indices of the kept pixels).");
  m.def(
      "synthetic_digits",
      [](Index count, Index side, std::uint64_t seed) {
        ImageDataset d = synthetic_digits(count, side, seed);
        return py::make_tuple(d.images, d.labels);
      },
      py::arg("count"), py::arg("side") = 10, py::arg("seed") = 0);

  // Persistence and runner
  m.def(
      "save_checkpoint",
      [](const PCGraph& g, const std::string& path, int epochs, std::uint64_t seed) {
        save_checkpoint(g, {epochs, seed, ""}, path);
      },
      py::arg("graph"), py::arg("path"), py::arg("epochs") = 0, py::arg("seed") = 0);
  m.def(
      "load_checkpoint", [](const std::string& path) { return load_checkpoint(path).graph; }, py::arg("path"));
  m.def(
      "run_experiment",
      [](const std::string& config_path, const std::string& verb, const std::string& out_dir,
         const std::string& checkpoint) {
        RunOptions o;
        o.verb = verb;
        o.out_dir = out_dir;
        o.checkpoint = checkpoint;
        std::ostringstream log, err;
        int code;
        {
          py::gil_scoped_release release;
          code = run(config_path, o, log, err);
        }
        return py::make_tuple(code, log.str(), err.str());
      },
      py::arg("config_path"), py::arg("verb") = "train", py::arg("out_dir") = "", py::arg("checkpoint") = "",
      "Runs the experiment runner; returns (exit code, log, diagnostics).");

  // Backprop baseline
  py::class_<MLP>(m, "MLP")
      .def_property_readonly("dims", &MLP::dims)
      .def("forward", [](const MLP& mlp, const Matrix& x) { return forward(mlp, x); })
      .def("predict", [](const MLP& mlp, const Matrix& x) { return predict_classes(mlp, x); });
  m.def(
      "train_mlp",
      [](const std::vector<Index>& dims, const Matrix& inputs, const Matrix& targets, const std::string& hidden,
         const std::string& output, double alpha, int epochs, Index batch_size, std::uint64_t seed) {
        BpSchedule s;
        s.alpha = alpha;
        s.epochs = epochs;
        s.batch_size = batch_size;
        s.seed = seed;
        MLP init = MLP::random(dims, parse_activation(hidden), parse_mlp_output(output), seed + 1);
        py::gil_scoped_release release;
        return train_bp(std::move(init), inputs, targets, s);
      },
      py::arg("dims"), py::arg("inputs"), py::arg("targets"), py::arg("hidden") = "hardtanh",
      py::arg("output") = "softmax", py::arg("alpha") = 1e-3, py::arg("epochs") = 1, py::arg("batch_size") = 64,
      py::arg("seed") = 0);
  m.def("onehot", [](const std::vector<int>& labels) { return onehot_matrix(labels); }, py::arg("labels"));
}
