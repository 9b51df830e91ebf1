#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "pcg/types.hpp"

namespace pcg {

enum class InitKind { Zeros, Gaussian, Uniform, Forward };

/// How value nodes that are neither conditioned nor initialized start a run.
struct InitPolicy {
  InitKind kind = InitKind::Zeros;
  double a = 0.0;  // sigma for Gaussian, lower bound for Uniform, sweep count for Forward
  double b = 0.0;  // upper bound for Uniform

  static InitPolicy zeros() { return {}; }
  static InitPolicy gaussian(double sigma) { return {InitKind::Gaussian, sigma, 0.0}; }
  static InitPolicy uniform(double lo, double hi) { return {InitKind::Uniform, lo, hi}; }
  /// Start from zeros, then `sweeps` times set every free vertex to its prediction.
  /// On a layered stack, one sweep per layer reproduces the feedforward pass.
  static InitPolicy forward(int sweeps) { return {InitKind::Forward, static_cast<double>(sweeps), 0.0}; }
  int sweeps() const { return kind == InitKind::Forward ? static_cast<int>(a) : 0; }

  Matrix sample(Index rows, Index cols, std::mt19937_64& rng) const;
};

/// Which vertices a run fixes (conditioning, held for every step) and which it
/// only sets at t = 0 (initialization). Values are stored column-per-lane so a
/// single spec can drive a batch of independent samples.
struct ClampSpec {
  std::vector<Index> conditioned;
  Matrix conditioned_values;  // conditioned.size() x lanes
  std::vector<Index> initialized;
  Matrix initialized_values;  // initialized.size() x lanes
  InitPolicy free_init;
  std::uint64_t seed = 0;

  /// Single-lane helpers.
  ClampSpec& condition(Index vertex, double value);
  ClampSpec& initialize(Index vertex, double value);

  ClampSpec& condition(const std::vector<Index>& vertices, const Matrix& values);
  ClampSpec& initialize(const std::vector<Index>& vertices, const Matrix& values);

  /// Number of lanes implied by the value blocks (1 when both are empty).
  Index lanes() const;

  /// Indices < n, disjoint sets, no duplicates, value blocks consistently shaped.
  void validate(Index n) const;
};

}  // namespace pcg
