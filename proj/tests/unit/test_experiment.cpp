#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pcg/checkpoint.hpp"
#include "pcg/errors.hpp"
#include "pcg/experiment.hpp"

using namespace pcg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "pcg_unit_experiment" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ExperimentConfig tiny_config() {
  ExperimentConfig c;
  c.name = "tiny";
  c.data.source = "synthetic";
  c.data.synthetic_side = 6;
  c.data.train_count = 60;
  c.data.test_count = 20;
  c.topology.n = 60;
  c.train.T = 10;
  c.train.gamma_values = 0.2;
  c.train.alpha_weights = 1e-3;
  c.train.lambda = 0.0;
  c.train.epochs = 2;
  c.train.batch_size = 20;
  c.query.T = 30;
  c.query.gamma_values = 0.1;
  c.reconstruct.count = 5;
  c.denoise.count = 5;
  c.am.n = 60;
  c.am.memories = 3;
  c.am.epochs = 2;
  c.am.query_T = 20;
  c.baseline.hidden = {8};
  c.baseline.epochs = 1;
  c.tasks = {"classify", "generate", "reconstruct", "denoise"};
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_tiny(const ExperimentConfig& c, const RunOptions& o) {
  std::ostringstream log, err;
  return run(c, o, log, err);
}

#ifdef PCG_CLI_PATH
int cli(const std::string& args) {
  const std::string cmd = std::string(PCG_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}
#endif

}  // namespace

TEST_SUITE("experiment") {
  TEST_CASE("train writes a report, traces, grids and a checkpoint") {
    const fs::path out = scratch("train");
    RunOptions o;
    o.out_dir = out.string();
    REQUIRE(run_tiny(tiny_config(), o) == kExitOk);
    for (const char* f : {"report.json", "config.ini", "model.ckpt", "train_trace.csv", "classify_trace.csv"}) {
      CHECK_MESSAGE(fs::exists(out / f), f);
    }
    const std::string report = slurp(out / "report.json");
    CHECK(report.find("\"accuracy\"") != std::string::npos);
    CHECK(report.find("\"config_digest\"") != std::string::npos);
    const Checkpoint ck = load_checkpoint((out / "model.ckpt").string());
    CHECK(ck.meta.epochs == 2);
    CHECK(ck.meta.config_digest.size() == 64);
  }

  TEST_CASE("same seed, same report; checkpoint reuse skips training") {
    const fs::path a = scratch("det");
    RunOptions o;
    o.out_dir = a.string();
    REQUIRE(run_tiny(tiny_config(), o) == kExitOk);
    const std::string ra = slurp(a / "report.json");
    RunOptions elsewhere;
    elsewhere.out_dir = scratch("det_b").string();
    REQUIRE(run_tiny(tiny_config(), elsewhere) == kExitOk);
    CHECK(ra == slurp(fs::path(elsewhere.out_dir) / "report.json"));

    RunOptions eval;
    eval.verb = "evaluate";
    eval.checkpoint = (a / "model.ckpt").string();
    eval.out_dir = scratch("det_eval").string();
    REQUIRE(run_tiny(tiny_config(), eval) == kExitOk);
    const std::string re = slurp(fs::path(eval.out_dir) / "report.json");
    CHECK_FALSE(fs::exists(fs::path(eval.out_dir) / "model.ckpt"));
    // Same graph, same test images, same accuracy.
    const auto acc = [](const std::string& r) { return r.substr(r.find("\"accuracy\""), 40); };
    CHECK(acc(re) == acc(ra));
  }

  TEST_CASE("failures map to exit codes") {
    RunOptions o;
    o.out_dir = scratch("codes").string();
    ExperimentConfig bad = tiny_config();
    bad.train.T = 0;
    CHECK(run_tiny(bad, o) == kExitConfig);

    ExperimentConfig missing = tiny_config();
    missing.data.source = "mnist";
    missing.data.dir = "/nonexistent/mnist";
    missing.data.synthetic_side = 28;
    missing.topology.n = 900;
    missing.am.n = 900;
    CHECK(run_tiny(missing, o) == kExitDataMissing);

    RunOptions ck = o;
    ck.verb = "evaluate";
    ck.checkpoint = "/nonexistent/model.ckpt";
    CHECK(run_tiny(tiny_config(), ck) == kExitCheckpoint);
    const fs::path junk = fs::path(o.out_dir) / "junk.ckpt";
    std::ofstream(junk) << "PCGRAPH";
    ck.checkpoint = junk.string();
    CHECK(run_tiny(tiny_config(), ck) == kExitCheckpoint);

    ExperimentConfig wild = tiny_config();
    wild.topology.init_gain = 40.0;
    wild.topology.activation = Activation::Identity;
    wild.train.gamma_values = 3.0;
    wild.train.T = 100;
    CHECK(run_tiny(wild, o) == kExitDivergence);
    CHECK(fs::exists(fs::path(o.out_dir) / "divergence_trace.csv"));

    RunOptions verb = o;
    verb.verb = "dance";
    CHECK(run_tiny(tiny_config(), verb) == kExitConfig);
    std::ostringstream log, err;
    CHECK(run("/nonexistent/config.ini", o, log, err) == kExitDataMissing);
  }

  TEST_CASE("am and baseline verbs") {
    RunOptions o;
    o.out_dir = scratch("am").string();
    o.verb = "am";
    REQUIRE(run_tiny(tiny_config(), o) == kExitOk);
    CHECK(slurp(fs::path(o.out_dir) / "report.json").find("\"rate\"") != std::string::npos);
    o.out_dir = scratch("baseline").string();
    o.verb = "baseline";
    REQUIRE(run_tiny(tiny_config(), o) == kExitOk);
    CHECK(slurp(fs::path(o.out_dir) / "report.json").find("\"baseline\"") != std::string::npos);
  }

  TEST_CASE("build_graph follows the topology section") {
    TopologyConfig t;
    t.kind = "layered";
    t.hidden = {5, 4};
    const PCGraph g = build_graph(t, 9, true);
    CHECK(g.d() == 19);
    CHECK(g.n() == 9 + 10 + 5 + 4);
    CHECK(g.mask().edge_count() == 9 * 5 + 5 * 4 + 4 * 10);
    t.kind = "assembly";
    t.clusters = {6, 6};
    t.p = 0.5;
    const PCGraph a = build_graph(t, 9, false);
    CHECK(a.d() == 9);
    CHECK(a.clusters()->clusters.size() == 2);
    t.kind = "ring";
    CHECK_THROWS_AS(build_graph(t, 9, false), ConfigError);
    CHECK(corruption_seed(1, 0) != corruption_seed(1, 1));
    CHECK(corruption_seed(1, 0) != corruption_seed(2, 0));
  }

#ifdef PCG_CLI_PATH
  TEST_CASE("command-line exit codes") {
    const fs::path dir = scratch("cli");
    CHECK(cli("train --config /nonexistent.ini") == 2);
    CHECK(cli("--bogus") == 2);
    const fs::path bad = dir / "bad.ini";
    std::ofstream(bad) << "[train]\nT = zero\n";
    CHECK(cli("train --config " + bad.string()) == 2);
    const fs::path missing = dir / "missing.ini";
    std::ofstream(missing) << "[data]\ndir = /nonexistent/mnist\n[topology]\nn = 900\n";
    CHECK(cli("train --config " + missing.string() + " --out " + (dir / "o").string()) == 3);
    const fs::path smoke = fs::path(PCG_SOURCE_DIR) / "configs" / "smoke.ini";
    CHECK(cli("evaluate --config " + smoke.string() + " --checkpoint /nonexistent.ckpt --out " +
              (dir / "o").string()) == 5);
  }
#endif
}
