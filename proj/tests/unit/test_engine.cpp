#include <doctest.h>

#include <cmath>
#include <sstream>

#include "pcg/engine.hpp"
#include "pcg/errors.hpp"
#include "pcg/topology.hpp"

using namespace pcg;

namespace {

Matrix sample_data(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

}  // namespace

TEST_SUITE("engine") {
  TEST_CASE("converged() on geometric decay matches the closed form") {
    const std::size_t window = 20;
    const double tol = 1e-3;
    // Over the last `window` samples of 0.5^t the range is 0.5^(s-w) - 0.5^(s-1),
    // relative to the first energy 1.
    std::size_t expected = 0;
    for (std::size_t s = window; s < 200 && expected == 0; ++s) {
      const double range = std::pow(0.5, static_cast<double>(s - window)) - std::pow(0.5, static_cast<double>(s - 1));
      if (range < tol) expected = s;
    }
    REQUIRE(expected == 30);
    EnergyTrace trace;
    std::size_t first = 0;
    for (long t = 0; t < 100 && first == 0; ++t) {
      trace.push(t, std::pow(0.5, static_cast<double>(t)), 0.0);
      if (converged(trace, window, tol)) first = trace.size();
    }
    CHECK(first == expected);
  }

  TEST_CASE("converged() edge cases") {
    EnergyTrace flat;
    for (long t = 0; t < 5; ++t) flat.push(t, 2.0, 0.0);
    CHECK_FALSE(converged(flat, 6, 1e-6));
    CHECK(converged(flat, 5, 1e-6));
    EnergyTrace bad;
    for (long t = 0; t < 5; ++t) bad.push(t, t == 4 ? NAN : 1.0, 0.0);
    CHECK_FALSE(converged(bad, 3, 1e-3));
    CHECK_THROWS_AS(converged(flat, 1, 1e-3), ConfigError);
  }

  TEST_CASE("energy trace steps are strictly increasing and serialize as CSV") {
    EnergyTrace t;
    t.push(0, 1.5, 0.0);
    t.push(3, 0.25, 0.1);
    CHECK_THROWS_AS(t.push(3, 0.1, 0.2), ConfigError);
    std::ostringstream os;
    t.write_csv(os);
    CHECK(os.str().rfind("step,energy,seconds\n0,1.5,0\n3,0.25,", 0) == 0);
  }

  TEST_CASE("T = 1, gamma = 0: one plain gradient step from the initial state") {
    GraphOptions opts;
    opts.seed = 4;
    opts.activation = Activation::Tanh;
    PCGraph g = fully_connected(8, 3, opts);
    const Matrix data = sample_data(3, 5, 1);

    ClampSpec clamp;
    clamp.condition({0, 1, 2}, data);
    const NodeState s0 = initial_state(g, clamp);
    const Matrix expected = g.weights() + 0.01 * weight_gradient(g, s0);

    TrainSchedule sched;
    sched.T = 1;
    sched.gamma = 0.0;
    sched.alpha = 0.01;
    sched.optimizer = OptimizerKind::SGD;
    sched.batch_size = 5;
    Trainer trainer(g, sched);
    const double e = trainer.train_batch(data);
    CHECK(e == doctest::Approx(energy(s0.eps) / 5.0));
    Matrix masked = expected;
    masked.diagonal().setZero();
    CHECK((g.weights() - masked).cwiseAbs().maxCoeff() < 1e-15);
  }

  TEST_CASE("training overfits a single point") {
    GraphOptions opts;
    opts.seed = 9;
    PCGraph g = fully_connected(12, 4, opts);
    const Matrix x = sample_data(4, 1, 2);
    TrainSchedule sched;
    sched.T = 20;
    sched.gamma = 0.1;
    sched.alpha = 0.01;
    sched.batch_size = 1;
    Trainer trainer(g, sched);
    const double first = trainer.train_batch(x);
    double last = first;
    for (int i = 0; i < 500; ++i) last = trainer.train_batch(x);
    CHECK(first > 0.0);
    CHECK(last < 0.01 * first);
    CHECK(g.respects_mask());
  }

  TEST_CASE("weight decay alone shrinks weights geometrically") {
    for (OptimizerKind kind : {OptimizerKind::SGD, OptimizerKind::Adam}) {
      PCGraph g = fully_connected(6, 2);
      const Matrix w0 = g.weights();
      WeightOptimizer opt(kind, 0.1, 0.5);
      const Matrix zero = Matrix::Zero(6, 6);
      for (int k = 0; k < 10; ++k) opt.step(g, zero);
      CHECK((g.weights() - w0 * std::pow(1.0 - 0.05, 10)).cwiseAbs().maxCoeff() < 1e-14);
    }
  }

  TEST_CASE("Adam's first step moves each weight by alpha against the gradient") {
    PCGraph g = fully_connected(4, 1);
    const Matrix w0 = g.weights();
    Matrix ascent = Matrix::Constant(4, 4, 0.3);
    ascent(1, 0) = -2.0;
    WeightOptimizer opt(OptimizerKind::Adam, 1e-3, 0.0);
    opt.step(g, ascent);
    const Matrix delta = g.weights() - w0;
    CHECK(delta(0, 1) == doctest::Approx(1e-3).epsilon(1e-6));
    CHECK(delta(1, 0) == doctest::Approx(-1e-3).epsilon(1e-6));
    CHECK(delta(2, 2) == 0.0);
  }

  TEST_CASE("training is deterministic for a fixed seed") {
    const Matrix data = sample_data(5, 40, 3);
    TrainSchedule sched;
    sched.T = 5;
    sched.gamma = 0.1;
    sched.alpha = 1e-3;
    sched.epochs = 2;
    sched.batch_size = 8;
    sched.internal_init = InitPolicy::gaussian(0.1);
    sched.seed = 12;
    GraphOptions opts;
    opts.seed = 1;
    const TrainResult a = train(fully_connected(15, 5, opts), data, sched);
    const TrainResult b = train(fully_connected(15, 5, opts), data, sched);
    CHECK(a.graph.weights() == b.graph.weights());
    CHECK(a.trace.size() == 10);
    sched.seed = 13;
    const TrainResult c = train(fully_connected(15, 5, opts), data, sched);
    CHECK(c.graph.weights() != a.graph.weights());
  }

  TEST_CASE("schedule validation") {
    TrainSchedule s;
    CHECK_NOTHROW(s.validate());
    s.T = 0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = {};
    s.alpha = 0.0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = {};
    s.gamma = -1.0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = {};
    s.batch_size = 0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = {};
    s.T = 2000;
    s.gamma = 0.0;
    CHECK_NOTHROW(s.validate());
    PCGraph g = fully_connected(5, 2);
    TrainSchedule soft;
    soft.initialized_only = {3};
    CHECK_THROWS_AS(Trainer(g, soft), ConfigError);
  }

  TEST_CASE("queries: gamma = 0, nothing to infer, mode checks") {
    const PCGraph g = fully_connected(6, 2);
    ClampSpec clamp;
    clamp.condition(0, 0.4).condition(1, 0.9);
    clamp.free_init = InitPolicy::gaussian(0.3);
    clamp.seed = 5;
    QueryOptions q;
    q.T = 25;
    q.gamma = 0.0;
    const QueryResult r = query_by_conditioning(g, clamp, q);
    CHECK(r.state.x == initial_state(g, clamp).x);
    CHECK(r.trace.size() == 26);

    ClampSpec all;
    for (Index v = 0; v < 6; ++v) all.condition(v, 0.0);
    CHECK_THROWS_AS(query_by_conditioning(g, all, q), ConfigError);
    CHECK_THROWS_AS(query_by_conditioning(g, ClampSpec{}, q), ConfigError);
    CHECK_THROWS_AS(query_by_initialization(g, clamp, q), ConfigError);

    ClampSpec init;
    init.initialize(0, 1.0);
    q.gamma = 0.1;
    const QueryResult free = query_by_initialization(g, init, q);
    CHECK(free.state.t == 25);
  }

  TEST_CASE("query energy decreases and early stop ends the run") {
    GraphOptions opts;
    opts.seed = 2;
    const PCGraph g = fully_connected(30, 10, opts);
    ClampSpec clamp;
    for (Index v = 0; v < 10; ++v) clamp.condition(v, 0.5);
    QueryOptions q;
    q.T = 5000;
    q.gamma = 0.05;
    q.early_stop = true;
    q.window = 50;
    q.rel_tol = 1e-6;
    const QueryResult r = query_by_conditioning(g, clamp, q);
    CHECK(r.state.t < 5000);
    CHECK(converged(r.trace, 50, 1e-6));
    const auto& s = r.trace.samples();
    for (std::size_t i = 1; i < s.size(); ++i) REQUIRE(s[i].energy <= s[i - 1].energy + 1e-15);
  }

  TEST_CASE("diverging training raises DivergenceError") {
    GraphOptions opts;
    opts.init_gain = 50.0;
    opts.activation = Activation::Identity;
    PCGraph g = fully_connected(10, 3, opts);
    TrainSchedule s;
    s.T = 200;
    s.gamma = 5.0;
    s.batch_size = 4;
    Trainer t(g, s);
    CHECK_THROWS_AS(t.train_batch(sample_data(3, 4, 1)), DivergenceError);
  }
}
