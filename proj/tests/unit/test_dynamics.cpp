#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "pcg/dynamics.hpp"
#include "pcg/errors.hpp"
#include "pcg/topology.hpp"
#include "reference_pc.hpp"

using namespace pcg;
using pcg::testing::rel_err;

namespace {

/// Random masked graph with unit-scale weights.
PCGraph random_graph(Index n, Activation a, std::uint64_t seed, double density = 0.6) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution edge(density);
  MaskMatrix m = MaskMatrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) m(i, j) = (i != j && edge(rng)) ? 1 : 0;
  }
  TopologyMask mask(m);
  return PCGraph(1, mask, initialize_weights(mask, 1.0, seed + 1), a);
}

/// Value nodes kept at least `margin` away from the HardTanh kinks.
Vector random_state(Index n, std::uint64_t seed, double margin = 1e-3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.8, 1.8);
  Vector x(n);
  for (Index i = 0; i < n; ++i) {
    do x(i) = u(rng);
    while (std::abs(std::abs(x(i)) - 1.0) < margin);
  }
  return x;
}

double graph_energy(const PCGraph& g, const Vector& x) { return energy(compute_errors(x, predict(g, x))); }

}  // namespace

TEST_SUITE("dynamics") {
  TEST_CASE("gamma = 0 leaves the state unchanged") {
    const PCGraph g = random_graph(8, Activation::Tanh, 1);
    ClampSpec none;
    const NodeState s = make_state(g, random_state(8, 2));
    const NodeState next = inference_step(g, s, 0.0, none);
    CHECK(next.x == s.x);
    CHECK(next.eps == s.eps);
  }

  TEST_CASE("two-vertex example: update equals -gamma dE/dx") {
    MaskMatrix m = MaskMatrix::Zero(2, 2);
    m(1, 0) = 1;
    Matrix W = Matrix::Zero(2, 2);
    W(1, 0) = 1.0;
    const PCGraph g(1, TopologyMask(m), W, Activation::Identity);
    Vector x(2);
    x << 1.0, 0.0;
    const NodeState s = make_state(g, x);
    CHECK(s.eps(0, 0) == 1.0);
    CHECK(s.eps(1, 0) == -1.0);
    const double gamma = 0.1;
    const NodeState next = inference_step(g, s, gamma, ClampSpec{});
    const Vector grad = testing::central_gradient([&](const Vector& v) { return graph_energy(g, v); }, x, 1e-5);
    for (Index i = 0; i < 2; ++i) {
      CHECK(rel_err((next.x(i, 0) - x(i)) / gamma, -grad(i)) < 1e-6);
    }
  }

  TEST_CASE("inference direction equals -dE/dx on random graphs") {
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      for (Activation a : {Activation::Identity, Activation::HardTanh, Activation::Tanh}) {
        const Index n = 3 + static_cast<Index>(seed % 15);
        const PCGraph g = random_graph(n, a, 100 + seed);
        const Vector x = random_state(n, 200 + seed);
        const NodeState s = make_state(g, x);
        const double gamma = 0.01;
        const NodeState next = inference_step(g, s, gamma, ClampSpec{});
        const auto f = [&](const Vector& v) { return testing::loop_energy(g.weights(), a, v); };
        const Vector grad = testing::central_gradient(f, x, 1e-5);
        for (Index i = 0; i < n; ++i) {
          const double analytic = (next.x(i, 0) - x(i)) / gamma;
          CHECK(std::abs(analytic + grad(i)) <= 1e-5 * std::max(1.0, std::abs(grad(i))));
          ++checked;
        }
      }
    }
    CHECK(checked > 500);
  }

  TEST_CASE("weight gradient equals -dE/dW on the edges") {
    for (Activation a : {Activation::Identity, Activation::HardTanh, Activation::Tanh}) {
      PCGraph g = random_graph(5, a, 42);
      const Vector x = random_state(5, 43);
      const NodeState s = make_state(g, x);
      const Matrix G = weight_gradient(g, s);
      const double h = 1e-5;
      for (Index i = 0; i < 5; ++i) {
        for (Index j = 0; j < 5; ++j) {
          if (!g.mask().has_edge(i, j)) continue;
          PCGraph up = g, down = g;
          up.update_weights([&](Matrix& w) { w(i, j) += h; });
          down.update_weights([&](Matrix& w) { w(i, j) -= h; });
          const double fd = (graph_energy(up, x) - graph_energy(down, x)) / (2 * h);
          CHECK(std::abs(G(i, j) + fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
        }
      }
    }
  }

  TEST_CASE("weight gradient is the outer product eps f(x)^T and vanishes with eps") {
    const PCGraph g = random_graph(6, Activation::Tanh, 5);
    NodeState s = make_state(g, random_state(6, 6));
    const Matrix G = weight_gradient(g, s);
    const Matrix outer = s.eps.col(0) * activate(Activation::Tanh, s.x).col(0).transpose();
    CHECK((G - outer).cwiseAbs().maxCoeff() < 1e-15);
    s.eps.setZero();
    CHECK(weight_gradient(g, s).isZero(0.0));
  }

  TEST_CASE("batched weight gradient is the lane average") {
    const PCGraph g = random_graph(6, Activation::HardTanh, 8);
    Matrix x(6, 3);
    for (Index c = 0; c < 3; ++c) x.col(c) = random_state(6, 50 + static_cast<std::uint64_t>(c));
    const NodeState batch = make_state(g, x);
    Matrix mean = Matrix::Zero(6, 6);
    for (Index c = 0; c < 3; ++c) mean += weight_gradient(g, make_state(g, x.col(c))) / 3.0;
    CHECK((weight_gradient(g, batch) - mean).cwiseAbs().maxCoeff() < 1e-14);
  }

  TEST_CASE("conditioned vertices are bit-identical across steps") {
    const PCGraph g = random_graph(10, Activation::HardTanh, 9);
    ClampSpec clamp;
    clamp.condition(0, 0.123456789).condition(4, -0.75);
    clamp.free_init = InitPolicy::gaussian(0.5);
    clamp.seed = 3;
    NodeState s = initial_state(g, clamp);
    for (int t = 0; t < 200; ++t) {
      s = inference_step(g, s, 0.2, clamp);
      REQUIRE(s.x(0, 0) == 0.123456789);
      REQUIRE(s.x(4, 0) == -0.75);
    }
    CHECK(s.t == 200);
  }

  TEST_CASE("a step commutes with a relabelling of the vertices") {
    const Index n = 9;
    const PCGraph g = random_graph(n, Activation::Tanh, 21);
    const Vector x = random_state(n, 22);
    std::vector<Index> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(23));
    // perm maps new index -> old index.
    MaskMatrix pm(n, n);
    Matrix pw(n, n);
    Vector px(n);
    for (Index a = 0; a < n; ++a) {
      px(a) = x(perm[a]);
      for (Index b = 0; b < n; ++b) {
        pm(a, b) = g.mask().matrix()(perm[a], perm[b]);
        pw(a, b) = g.weights()(perm[a], perm[b]);
      }
    }
    const PCGraph pg(1, TopologyMask(pm), pw, Activation::Tanh);
    const NodeState one = inference_step(g, make_state(g, x), 0.3, ClampSpec{});
    const NodeState two = inference_step(pg, make_state(pg, px), 0.3, ClampSpec{});
    for (Index a = 0; a < n; ++a) CHECK(std::abs(two.x(a, 0) - one.x(perm[a], 0)) < 1e-14);
  }

  TEST_CASE("energy is non-increasing for small gamma") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      GraphOptions opts;
      opts.seed = seed;
      opts.activation = Activation::Tanh;
      const PCGraph g = fully_connected(50, 10, opts);
      NodeState s = make_state(g, random_state(50, seed + 1000));
      double prev = energy(s.eps);
      for (int t = 0; t < 100; ++t) {
        s = inference_step(g, s, 0.05, ClampSpec{});
        const double e = energy(s.eps);
        REQUIRE(e <= prev);
        prev = e;
      }
    }
  }

  TEST_CASE("top-k: keep-all and hand-sorted example") {
    Vector v(5);
    v << 5, 1, 4, 2, 3;
    const std::vector<ClusterRange> c = {{0, 5}};
    CHECK(topk_fire(v, c, 1.0) == Matrix(v));
    Vector expected(5);
    expected << 5, 0, 4, 0, 0;
    CHECK(topk_fire(v, c, 0.4) == Matrix(expected));
  }

  TEST_CASE("top-k matches a stable-sort oracle, ties to the lower index") {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> small(0, 3);  // lots of ties
    for (int trial = 0; trial < 200; ++trial) {
      Vector v(12);
      for (Index i = 0; i < 12; ++i) v(i) = small(rng);
      const std::vector<ClusterRange> clusters = {{1, 6}, {6, 12}};
      const double k = 0.1 + 0.1 * (trial % 9);
      Matrix kept;
      const Matrix out = topk_fire(v, clusters, k, &kept);
      Vector oracle = v;
      for (const auto& c : clusters) {
        std::vector<Index> idx(static_cast<std::size_t>(c.size()));
        std::iota(idx.begin(), idx.end(), c.begin);
        std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return v(a) > v(b); });
        const auto keep = static_cast<std::size_t>(std::ceil(k * static_cast<double>(c.size()) - 1e-9));
        for (std::size_t r = keep; r < idx.size(); ++r) oracle(idx[r]) = 0.0;
      }
      REQUIRE(out.col(0) == oracle);
      CHECK(out(0, 0) == v(0));  // outside every cluster: passes through
      CHECK(kept(0, 0) == 1.0);
    }
  }

  TEST_CASE("top-k rejects overlapping clusters and bad fractions") {
    const Vector v = Vector::Ones(6);
    CHECK_THROWS_AS(topk_fire(v, {{0, 4}, {3, 6}}, 0.5), ConfigError);
    CHECK_THROWS_AS(topk_fire(v, {{0, 3}}, 0.0), ConfigError);
    CHECK_THROWS_AS(topk_fire(v, {{0, 3}}, 1.5), ConfigError);
  }

  TEST_CASE("initial_state: free, initialized and conditioned vertices") {
    GraphOptions opts;
    const PCGraph g = fully_connected(6, 2, opts);
    ClampSpec clamp;
    clamp.condition(0, 0.5).initialize(3, -0.25);
    clamp.free_init = InitPolicy::uniform(-1.0, 1.0);
    clamp.seed = 99;
    const NodeState a = initial_state(g, clamp);
    const NodeState b = initial_state(g, clamp);
    CHECK(a.x == b.x);
    CHECK(a.x(0, 0) == 0.5);
    CHECK(a.x(3, 0) == -0.25);
    CHECK((a.x.array().abs() <= 1.0).all());
    clamp.seed = 100;
    CHECK(initial_state(g, clamp).x != a.x);
  }

  TEST_CASE("forward init reproduces the feedforward pass of a layer stack") {
    GraphOptions opts;
    opts.activation = Activation::Tanh;
    opts.seed = 3;
    const PCGraph g = layered({.dims = {5, 4, 3, 2}}, opts);
    const Vector data = Vector::LinSpaced(5, -0.5, 0.9);
    ClampSpec clamp;
    clamp.condition({0, 1, 2, 3, 4}, data);
    clamp.free_init = InitPolicy::forward(3);
    const NodeState s = initial_state(g, clamp);

    Vector h = data;
    Index begin = 5;
    for (Index size : {4, 3, 2}) {
      const Matrix W = g.weights().block(begin, begin - h.size(), size, h.size());
      h = W * h.unaryExpr([](double v) { return std::tanh(v); });
      CHECK((s.x.col(0).segment(begin, size) - h).cwiseAbs().maxCoeff() < 1e-12);
      begin += size;
    }
    // Every error vanishes, so the feedforward state is a fixed point.
    CHECK(s.eps.col(0).tail(g.n() - 5).cwiseAbs().maxCoeff() < 1e-12);

    clamp.free_init = InitPolicy::forward(1);
    const NodeState one = initial_state(g, clamp);
    CHECK(one.x.col(0).tail(5).isZero(0.0));
  }

  TEST_CASE("forward init leaves initialized vertices alone") {
    const PCGraph g = layered({.dims = {3, 3, 2}});
    ClampSpec clamp;
    clamp.condition({0, 1, 2}, Vector::Ones(3));
    clamp.initialize(6, 0.75);
    clamp.free_init = InitPolicy::forward(2);
    const NodeState s = initial_state(g, clamp);
    CHECK(s.x(6, 0) == 0.75);
    CHECK(s.x(7, 0) != 0.0);
  }

  TEST_CASE("clamp validation") {
    ClampSpec c;
    c.condition(1, 0.0).initialize(1, 0.0);
    CHECK_THROWS_AS(c.validate(4), ConfigError);
    ClampSpec out_of_range;
    out_of_range.condition(9, 1.0);
    CHECK_THROWS_AS(out_of_range.validate(4), ConfigError);
    ClampSpec dup;
    dup.condition(2, 1.0).condition(2, 0.0);
    CHECK_THROWS_AS(dup.validate(4), ConfigError);
  }
}
