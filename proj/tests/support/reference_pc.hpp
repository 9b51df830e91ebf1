#pragma once

// Independent oracles for the test suites: a per-layer predictive-coding
// network written with explicit loops, and finite-difference helpers.

#include <functional>
#include <vector>

#include "pcg/activation.hpp"
#include "pcg/types.hpp"

namespace pcg::testing {

/// Layer stack x_0 -> x_1 -> ... -> x_{L-1}; layer 0 has no parent, so its
/// prediction is zero. weights[l] maps layer l to layer l + 1.
struct LayerNet {
  std::vector<Matrix> weights;  // weights[l]: size(l+1) x size(l)
  Activation activation = Activation::Identity;

  /// Energy of a per-layer state.
  double energy(const std::vector<Vector>& x) const;

  /// One synchronous inference step, leaving the layers listed in `held` untouched.
  std::vector<Vector> step(const std::vector<Vector>& x, double gamma, const std::vector<bool>& held) const;
};

/// mu(i) = sum_j W(i, j) f(x(j)) with plain loops.
Vector loop_predict(const Matrix& W, Activation a, const Vector& x);

/// E(x) = 0.5 * ||x - W f(x)||^2 with plain loops (no top-k).
double loop_energy(const Matrix& W, Activation a, const Vector& x);

/// Central difference of `f` at `x` along every coordinate.
Vector central_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h);

/// |a - b| / max(|a|, |b|, floor).
double rel_err(double a, double b, double floor = 1e-8);

}  // namespace pcg::testing
