#include "pcg/config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "pcg/errors.hpp"

namespace pcg {

namespace pt = boost::property_tree;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

long long parse_integer(const std::string& s) {
  std::size_t used = 0;
  const long long v = std::stoll(s, &used);
  if (used != s.size()) throw std::invalid_argument(s);
  return v;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument(s);
  return v;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
  if (s == "false" || s == "no" || s == "off" || s == "0") return false;
  throw std::invalid_argument(s);
}

std::string init_to_string(const InitPolicy& p) {
  switch (p.kind) {
    case InitKind::Zeros: return "zeros";
    case InitKind::Gaussian: return "gaussian:" + fmt_double(p.a);
    case InitKind::Uniform: return "uniform:" + fmt_double(p.a) + ":" + fmt_double(p.b);
    case InitKind::Forward: return "forward:" + std::to_string(p.sweeps());
  }
  return "zeros";
}

InitPolicy parse_init(const std::string& s) {
  const auto parts = split(s, ':');
  if (parts.size() == 1 && parts[0] == "zeros") return InitPolicy::zeros();
  if (parts.size() == 2 && parts[0] == "gaussian") return InitPolicy::gaussian(parse_double(parts[1]));
  if (parts.size() == 2 && parts[0] == "forward") {
    const double sweeps = parse_double(parts[1]);
    if (sweeps >= 1 && sweeps == std::floor(sweeps)) return InitPolicy::forward(static_cast<int>(sweeps));
  }
  if (parts.size() == 3 && parts[0] == "uniform") {
    return InitPolicy::uniform(parse_double(parts[1]), parse_double(parts[2]));
  }
  throw ConfigError("expected zeros, gaussian:<sigma>, uniform:<lo>:<hi> or forward:<sweeps>, got '" + s + "'");
}

// One visitor drives parsing, printing and key bookkeeping so the three never drift apart.

struct Parser {
  const pt::ptree& root;
  std::vector<std::string>& errors;
  std::map<std::string, std::set<std::string>> known;
  std::string section;

  void begin(const std::string& name) {
    section = name;
    known[name];
  }

  template <class T, class Conv>
  void field(const std::string& key, T& out, const char* expected, Conv&& conv) {
    known[section].insert(key);
    const auto sec = root.get_child_optional(section);
    if (!sec) return;
    const auto raw = sec->get_optional<std::string>(key);
    if (!raw) return;
    const std::string value = trim(*raw);
    try {
      out = conv(value);
    } catch (const ConfigError& e) {
      errors.push_back(section + "." + key + ": " + e.what());
    } catch (const std::exception&) {
      errors.push_back(section + "." + key + ": expected " + expected + ", got '" + value + "'");
    }
  }

  void operator()(const std::string& k, std::string& v) {
    field(k, v, "a string", [](const std::string& s) { return s; });
  }
  void operator()(const std::string& k, int& v) {
    field(k, v, "an integer", [](const std::string& s) { return static_cast<int>(parse_integer(s)); });
  }
  void operator()(const std::string& k, long& v) {
    field(k, v, "an integer", [](const std::string& s) { return static_cast<long>(parse_integer(s)); });
  }
  void operator()(const std::string& k, std::uint64_t& v) {
    field(k, v, "a non-negative integer", [](const std::string& s) {
      if (!s.empty() && s[0] == '-') throw std::invalid_argument(s);
      std::size_t used = 0;
      const auto r = std::stoull(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return static_cast<std::uint64_t>(r);
    });
  }
  void operator()(const std::string& k, double& v) { field(k, v, "a number", parse_double); }
  void operator()(const std::string& k, bool& v) { field(k, v, "true or false", parse_bool); }
  void operator()(const std::string& k, std::vector<Index>& v) {
    field(k, v, "a comma-separated list of integers", [](const std::string& s) {
      std::vector<Index> r;
      for (const auto& p : split(s, ',')) r.push_back(static_cast<Index>(parse_integer(p)));
      return r;
    });
  }
  void operator()(const std::string& k, std::vector<int>& v) {
    field(k, v, "a comma-separated list of integers", [](const std::string& s) {
      std::vector<int> r;
      for (const auto& p : split(s, ',')) r.push_back(static_cast<int>(parse_integer(p)));
      return r;
    });
  }
  void operator()(const std::string& k, std::vector<std::string>& v) {
    field(k, v, "a comma-separated list", [](const std::string& s) { return split(s, ','); });
  }
  void operator()(const std::string& k, std::vector<CueKind>& v) {
    field(k, v, "a list of half/noisy", [](const std::string& s) {
      std::vector<CueKind> r;
      for (const auto& p : split(s, ',')) r.push_back(parse_cue_kind(p));
      return r;
    });
  }
  void operator()(const std::string& k, Activation& v) { field(k, v, "an activation", parse_activation); }
  void operator()(const std::string& k, FlowDirection& v) { field(k, v, "a direction", parse_direction); }
  void operator()(const std::string& k, OptimizerKind& v) { field(k, v, "sgd or adam", parse_optimizer); }
  void operator()(const std::string& k, Region& v) { field(k, v, "top or bottom", parse_region); }
  void operator()(const std::string& k, QueryMode& v) { field(k, v, "a query mode", parse_query_mode); }
  void operator()(const std::string& k, MlpOutput& v) { field(k, v, "an mlp output", parse_mlp_output); }
  void operator()(const std::string& k, InitPolicy& v) { field(k, v, "an init policy", parse_init); }
};

struct Printer {
  std::ostringstream os;
  bool first = true;

  void begin(const std::string& name) {
    os << (first ? "" : "\n") << '[' << name << "]\n";
    first = false;
  }
  void put(const std::string& k, const std::string& v) { os << k << " = " << v << '\n'; }

  template <class T>
  static std::string join(const std::vector<T>& xs) {
    std::ostringstream s;
    for (std::size_t i = 0; i < xs.size(); ++i) s << (i ? "," : "") << xs[i];
    return s.str();
  }

  void operator()(const std::string& k, const std::string& v) { put(k, v); }
  void operator()(const std::string& k, int v) { put(k, std::to_string(v)); }
  void operator()(const std::string& k, long v) { put(k, std::to_string(v)); }
  void operator()(const std::string& k, std::uint64_t v) { put(k, std::to_string(v)); }
  void operator()(const std::string& k, double v) { put(k, fmt_double(v)); }
  void operator()(const std::string& k, bool v) { put(k, v ? "true" : "false"); }
  void operator()(const std::string& k, const std::vector<Index>& v) { put(k, join(v)); }
  void operator()(const std::string& k, const std::vector<int>& v) { put(k, join(v)); }
  void operator()(const std::string& k, const std::vector<std::string>& v) { put(k, join(v)); }
  void operator()(const std::string& k, const std::vector<CueKind>& v) {
    std::vector<std::string> names;
    for (CueKind c : v) names.push_back(to_string(c));
    put(k, join(names));
  }
  void operator()(const std::string& k, Activation v) { put(k, std::string(to_string(v))); }
  void operator()(const std::string& k, FlowDirection v) { put(k, to_string(v)); }
  void operator()(const std::string& k, OptimizerKind v) { put(k, to_string(v)); }
  void operator()(const std::string& k, Region v) { put(k, to_string(v)); }
  void operator()(const std::string& k, QueryMode v) { put(k, to_string(v)); }
  void operator()(const std::string& k, MlpOutput v) { put(k, to_string(v)); }
  void operator()(const std::string& k, const InitPolicy& v) { put(k, init_to_string(v)); }
};

template <class Cfg, class V>
void visit(Cfg& c, V& v) {
  v.begin("experiment");
  v("name", c.name);
  v("seed", c.seed);
  v("output_dir", c.output_dir);
  v("tasks", c.tasks);
  v("threads", c.threads);

  v.begin("data");
  v("source", c.data.source);
  v("dir", c.data.dir);
  v("train_images", c.data.train_images);
  v("train_labels", c.data.train_labels);
  v("test_images", c.data.test_images);
  v("test_labels", c.data.test_labels);
  v("train_count", c.data.train_count);
  v("test_count", c.data.test_count);
  v("synthetic_side", c.data.synthetic_side);
  v("labels", c.data.labels);

  v.begin("topology");
  v("kind", c.topology.kind);
  v("n", c.topology.n);
  v("hidden", c.topology.hidden);
  v("direction", c.topology.direction);
  v("lateral", c.topology.lateral);
  v("recurrent", c.topology.recurrent);
  v("clusters", c.topology.clusters);
  v("back_edges", c.topology.back_edges);
  v("label_cluster", c.topology.label_cluster);
  v("pixel_cluster", c.topology.pixel_cluster);
  v("p", c.topology.p);
  v("k", c.topology.k);
  v("attach_p", c.topology.attach_p);
  v("activation", c.topology.activation);
  v("init_gain", c.topology.init_gain);
  v("seed", c.topology.seed);

  v.begin("train");
  v("T", c.train.T);
  v("gamma_values", c.train.gamma_values);
  v("alpha_weights", c.train.alpha_weights);
  v("lambda", c.train.lambda);
  v("epochs", c.train.epochs);
  v("batch_size", c.train.batch_size);
  v("optimizer", c.train.optimizer);
  v("internal_init", c.train.internal_init);
  v("label_mode", c.train.label_mode);

  v.begin("query");
  v("T", c.query.T);
  v("gamma_values", c.query.gamma_values);
  v("early_stop", c.query.early_stop);
  v("window", c.query.window);
  v("rel_tol", c.query.rel_tol);
  v("free_init", c.query.free_init);
  v("chunk", c.query.chunk);

  v.begin("classify");
  v("count", c.classify.count);

  v.begin("generate");
  v("labels", c.generate.labels);

  v.begin("reconstruct");
  v("count", c.reconstruct.count);
  v("fraction", c.reconstruct.fraction);
  v("region", c.reconstruct.region);
  v("mode", c.reconstruct.mode);
  v("with_label", c.reconstruct.with_label);

  v.begin("denoise");
  v("count", c.denoise.count);
  v("variance", c.denoise.variance);

  v.begin("am");
  v("n", c.am.n);
  v("memories", c.am.memories);
  v("cues", c.am.cues);
  v("variance", c.am.variance);
  v("fraction", c.am.fraction);
  v("region", c.am.region);
  v("T", c.am.T);
  v("gamma_values", c.am.gamma_values);
  v("alpha_weights", c.am.alpha_weights);
  v("lambda", c.am.lambda);
  v("epochs", c.am.epochs);
  v("query_T", c.am.query_T);

  v.begin("baseline");
  v("hidden", c.baseline.hidden);
  v("activation", c.baseline.activation);
  v("output", c.baseline.output);
  v("alpha", c.baseline.alpha);
  v("lambda", c.baseline.lambda);
  v("epochs", c.baseline.epochs);
  v("batch_size", c.baseline.batch_size);
  v("autoencoder", c.baseline.autoencoder);
}

const std::set<std::string> kTaskNames = {"classify", "generate", "reconstruct", "denoise", "am", "baseline"};

Index pixel_count(const DataConfig& d) { return d.source == "synthetic" ? d.synthetic_side * d.synthetic_side : 784; }

}  // namespace

std::string DataConfig::resolved_dir() const {
  if (!dir.empty()) return dir;
  if (const char* env = std::getenv(kDataDirEnv); env && *env) return env;
  return "data/mnist";
}

std::string to_string(OptimizerKind k) { return k == OptimizerKind::SGD ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "sgd") return OptimizerKind::SGD;
  if (name == "adam") return OptimizerKind::Adam;
  throw ConfigError("unknown optimizer '" + name + "' (expected sgd or adam)");
}

void ExperimentConfig::validate() const {
  std::vector<std::string> e;
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) e.push_back(msg);
  };
  need(threads >= 1, "experiment.threads: must be >= 1");
  for (const auto& t : tasks) need(kTaskNames.count(t) > 0, "experiment.tasks: unknown task '" + t + "'");

  need(data.source == "mnist" || data.source == "synthetic", "data.source: expected mnist or synthetic");
  need(data.train_count >= 0, "data.train_count: must be >= 0");
  need(data.test_count >= 0, "data.test_count: must be >= 0");
  need(data.synthetic_side >= 4, "data.synthetic_side: must be >= 4");

  const Index pixels = pixel_count(data);
  const Index d = pixels + (data.labels ? kClasses : 0);
  const auto& tp = topology;
  if (tp.kind == "fully_connected") {
    need(tp.n > d, "topology.n: must exceed the " + std::to_string(d) + " sensory vertices");
  } else if (tp.kind == "layered") {
    need(!tp.hidden.empty(), "topology.hidden: layered graphs need at least one hidden layer");
    for (Index h : tp.hidden) need(h >= 1, "topology.hidden: widths must be >= 1");
  } else if (tp.kind == "assembly") {
    need(!tp.clusters.empty(), "topology.clusters: need at least one cluster");
    for (Index c : tp.clusters) need(c >= 1, "topology.clusters: sizes must be >= 1");
    const int count = static_cast<int>(tp.clusters.size());
    need(tp.label_cluster >= 0 && tp.label_cluster < count, "topology.label_cluster: out of range");
    need(tp.pixel_cluster >= -1 && tp.pixel_cluster < count, "topology.pixel_cluster: out of range (-1 = last)");
    need(tp.p > 0.0 && tp.p <= 1.0, "topology.p: must lie in (0, 1]");
    need(tp.k > 0.0 && tp.k <= 1.0, "topology.k: must lie in (0, 1]");
    need(tp.attach_p > 0.0 && tp.attach_p <= 1.0, "topology.attach_p: must lie in (0, 1]");
  } else {
    e.push_back("topology.kind: expected fully_connected, layered or assembly, got '" + tp.kind + "'");
  }
  need(tp.init_gain >= 0.0, "topology.init_gain: must be >= 0");

  need(train.T >= 1, "train.T: must be >= 1");
  need(train.gamma_values >= 0.0, "train.gamma_values: must be >= 0");
  need(train.alpha_weights > 0.0, "train.alpha_weights: must be > 0");
  need(train.lambda >= 0.0, "train.lambda: must be >= 0");
  need(train.epochs >= 0, "train.epochs: must be >= 0");
  need(train.batch_size >= 1, "train.batch_size: must be >= 1");
  need(train.label_mode == "conditioned" || train.label_mode == "initialized",
       "train.label_mode: expected conditioned or initialized");

  need(query.T >= 0, "query.T: must be >= 0");
  need(query.gamma_values >= 0.0, "query.gamma_values: must be >= 0");
  need(query.window >= 2, "query.window: must be >= 2");
  need(query.rel_tol > 0.0, "query.rel_tol: must be > 0");
  need(query.chunk >= 1, "query.chunk: must be >= 1");

  auto uses = [&](const std::string& t) { return std::find(tasks.begin(), tasks.end(), t) != tasks.end(); };
  if (uses("classify") || uses("generate") || reconstruct.with_label) {
    need(data.labels, "data.labels: classify, generate and labelled reconstruction need label vertices");
  }
  need(classify.count >= 0, "classify.count: must be >= 0");
  need(!generate.labels.empty(), "generate.labels: must not be empty");
  for (int l : generate.labels) need(l >= 0 && l < kClasses, "generate.labels: labels must lie in 0..9");
  need(reconstruct.count >= 1, "reconstruct.count: must be >= 1");
  need(reconstruct.fraction > 0.0 && reconstruct.fraction < 1.0, "reconstruct.fraction: must lie in (0, 1)");
  need(denoise.count >= 1, "denoise.count: must be >= 1");
  need(denoise.variance >= 0.0, "denoise.variance: must be >= 0");

  need(am.n > pixels, "am.n: must exceed the " + std::to_string(pixels) + " pixel vertices");
  need(am.memories >= 1, "am.memories: must be >= 1");
  need(!am.cues.empty(), "am.cues: must not be empty");
  need(am.variance >= 0.0, "am.variance: must be >= 0");
  need(am.fraction > 0.0 && am.fraction < 1.0, "am.fraction: must lie in (0, 1)");
  need(am.T >= 1, "am.T: must be >= 1");
  need(am.gamma_values >= 0.0, "am.gamma_values: must be >= 0");
  need(am.alpha_weights > 0.0, "am.alpha_weights: must be > 0");
  need(am.lambda >= 0.0, "am.lambda: must be >= 0");
  need(am.epochs >= 0, "am.epochs: must be >= 0");
  need(am.query_T >= 0, "am.query_T: must be >= 0");

  for (Index h : baseline.hidden) need(h >= 1, "baseline.hidden: widths must be >= 1");
  need(baseline.alpha >= 0.0, "baseline.alpha: must be >= 0");
  need(baseline.lambda >= 0.0, "baseline.lambda: must be >= 0");
  need(baseline.epochs >= 0, "baseline.epochs: must be >= 0");
  need(baseline.batch_size >= 1, "baseline.batch_size: must be >= 1");

  if (!e.empty()) {
    std::string msg = "invalid config:";
    for (const auto& line : e) msg += "\n  " + line;
    throw ConfigError(msg);
  }
}

TrainSchedule ExperimentConfig::train_schedule(Index d, Index pixels) const {
  TrainSchedule s;
  s.T = train.T;
  s.gamma = train.gamma_values;
  s.alpha = train.alpha_weights;
  s.lambda = train.lambda;
  s.epochs = train.epochs;
  s.batch_size = train.batch_size;
  s.optimizer = train.optimizer;
  s.internal_init = train.internal_init;
  s.seed = seed;
  if (train.label_mode == "initialized") {
    for (Index v = pixels; v < d; ++v) s.initialized_only.push_back(v);
  }
  return s;
}

TaskOptions ExperimentConfig::task_options() const {
  TaskOptions o;
  o.query.T = query.T;
  o.query.gamma = query.gamma_values;
  o.query.early_stop = query.early_stop;
  o.query.window = query.window;
  o.query.rel_tol = query.rel_tol;
  o.free_init = query.free_init;
  o.seed = seed;
  o.chunk = query.chunk;
  o.threads = threads;
  return o;
}

BpSchedule ExperimentConfig::baseline_schedule() const {
  BpSchedule s;
  s.alpha = baseline.alpha;
  s.lambda = baseline.lambda;
  s.epochs = baseline.epochs;
  s.batch_size = baseline.batch_size;
  s.seed = seed;
  return s;
}

ExperimentConfig parse_config(std::istream& in, const std::string& source) {
  pt::ptree root;
  try {
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  ExperimentConfig cfg;
  std::vector<std::string> errors;
  Parser parser{root, errors, {}, {}};
  visit(cfg, parser);
  for (const auto& [section, body] : root) {
    const auto known = parser.known.find(section);
    if (known == parser.known.end()) {
      errors.push_back(section + ": unknown section");
      continue;
    }
    if (body.empty() && !body.data().empty()) {
      errors.push_back(section + ": top-level keys must live in a [section]");
      continue;
    }
    for (const auto& [key, value] : body) {
      if (!known->second.count(key)) errors.push_back(section + "." + key + ": unknown key");
    }
  }
  if (!errors.empty()) {
    std::string msg = source + ": invalid config:";
    for (const auto& line : errors) msg += "\n  " + line;
    throw ConfigError(msg);
  }
  cfg.validate();
  return cfg;
}

InitPolicy parse_init_policy(const std::string& text) {
  try {
    return parse_init(trim(text));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("expected an init policy, got '" + text + "'");
  }
}

std::string to_string(const InitPolicy& policy) { return init_to_string(policy); }

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path);
  return parse_config(in, path);
}

std::string canonical_text(const ExperimentConfig& config) {
  Printer printer;
  visit(config, printer);
  return printer.os.str();
}

std::string config_digest(const ExperimentConfig& config) {
  ExperimentConfig what = config;
  what.output_dir = ExperimentConfig{}.output_dir;
  what.threads = ExperimentConfig{}.threads;
  const std::string text = canonical_text(what);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 digest failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

}  // namespace pcg
