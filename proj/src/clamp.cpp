#include "pcg/clamp.hpp"

#include <string>

#include "pcg/errors.hpp"

namespace pcg {

Matrix InitPolicy::sample(Index rows, Index cols, std::mt19937_64& rng) const {
  Matrix out = Matrix::Zero(rows, cols);
  switch (kind) {
    case InitKind::Zeros:
    case InitKind::Forward:
      break;
    case InitKind::Gaussian: {
      std::normal_distribution<double> dist(0.0, a);
      for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) out(i, j) = dist(rng);
      break;
    }
    case InitKind::Uniform: {
      std::uniform_real_distribution<double> dist(a, b);
      for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) out(i, j) = dist(rng);
      break;
    }
  }
  return out;
}

namespace {

void append_rows(std::vector<Index>& idx, Matrix& values, const std::vector<Index>& new_idx,
                 const Matrix& new_values) {
  require_same_size(static_cast<long>(new_idx.size()), new_values.rows(), "clamp indices vs value rows");
  if (idx.empty()) {
    idx = new_idx;
    values = new_values;
    return;
  }
  require_same_size(values.cols(), new_values.cols(), "clamp lanes");
  Matrix merged(values.rows() + new_values.rows(), values.cols());
  merged << values, new_values;
  values = std::move(merged);
  idx.insert(idx.end(), new_idx.begin(), new_idx.end());
}

}  // namespace

ClampSpec& ClampSpec::condition(Index vertex, double value) {
  return condition(std::vector<Index>{vertex}, Matrix::Constant(1, 1, value));
}

ClampSpec& ClampSpec::initialize(Index vertex, double value) {
  return initialize(std::vector<Index>{vertex}, Matrix::Constant(1, 1, value));
}

ClampSpec& ClampSpec::condition(const std::vector<Index>& vertices, const Matrix& values) {
  append_rows(conditioned, conditioned_values, vertices, values);
  return *this;
}

ClampSpec& ClampSpec::initialize(const std::vector<Index>& vertices, const Matrix& values) {
  append_rows(initialized, initialized_values, vertices, values);
  return *this;
}

Index ClampSpec::lanes() const {
  if (!conditioned.empty()) return conditioned_values.cols();
  if (!initialized.empty()) return initialized_values.cols();
  return 1;
}

void ClampSpec::validate(Index n) const {
  require_same_size(static_cast<long>(conditioned.size()), conditioned.empty() ? 0 : conditioned_values.rows(),
                    "conditioned indices vs values");
  require_same_size(static_cast<long>(initialized.size()), initialized.empty() ? 0 : initialized_values.rows(),
                    "initialized indices vs values");
  if (!conditioned.empty() && !initialized.empty()) {
    require_same_size(conditioned_values.cols(), initialized_values.cols(), "clamp lanes");
  }
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(n), 0);
  auto mark = [&](Index v, std::uint8_t tag) {
    if (v < 0 || v >= n) {
      throw ConfigError("clamp index " + std::to_string(v) + " out of range for n=" + std::to_string(n));
    }
    auto& s = seen[static_cast<std::size_t>(v)];
    if (s != 0) {
      throw ConfigError(s == tag ? "duplicate clamp index " + std::to_string(v)
                                 : "vertex " + std::to_string(v) + " is both conditioned and initialized");
    }
    s = tag;
  };
  for (Index v : conditioned) mark(v, 1);
  for (Index v : initialized) mark(v, 2);
  if (free_init.kind == InitKind::Gaussian && !(free_init.a >= 0.0)) {
    throw ConfigError("gaussian init sigma must be >= 0");
  }
  if (free_init.kind == InitKind::Uniform && !(free_init.a < free_init.b)) {
    throw ConfigError("uniform init requires lo < hi");
  }
}

}  // namespace pcg
