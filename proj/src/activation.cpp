#include "pcg/activation.hpp"

#include <cmath>

#include "pcg/errors.hpp"

namespace pcg {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Identity:
      return "identity";
    case Activation::HardTanh:
      return "hardtanh";
    case Activation::Tanh:
      return "tanh";
  }
  return "unknown";
}

Activation parse_activation(std::string_view name) {
  if (name == "identity" || name == "linear") return Activation::Identity;
  if (name == "hardtanh") return Activation::HardTanh;
  if (name == "tanh") return Activation::Tanh;
  throw ConfigError("unknown activation '" + std::string(name) + "' (expected identity, hardtanh or tanh)");
}

double activate(Activation a, double x) {
  switch (a) {
    case Activation::Identity:
      return x;
    case Activation::HardTanh:
      return x < -1.0 ? -1.0 : (x > 1.0 ? 1.0 : x);
    case Activation::Tanh:
      return std::tanh(x);
  }
  return x;
}

double activate_derivative(Activation a, double x) {
  switch (a) {
    case Activation::Identity:
      return 1.0;
    case Activation::HardTanh:
      return std::abs(x) <= 1.0 ? 1.0 : 0.0;
    case Activation::Tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
  }
  return 1.0;
}

Matrix activate(Activation a, const Eigen::Ref<const Matrix>& x) {
  switch (a) {
    case Activation::Identity:
      return x;
    case Activation::HardTanh:
      return x.cwiseMax(-1.0).cwiseMin(1.0);
    case Activation::Tanh:
      return x.array().tanh().matrix();
  }
  return x;
}

Matrix activate_derivative(Activation a, const Eigen::Ref<const Matrix>& x) {
  switch (a) {
    case Activation::Identity:
      return Matrix::Ones(x.rows(), x.cols());
    case Activation::HardTanh:
      return (x.array().abs() <= 1.0).cast<double>().matrix();
    case Activation::Tanh:
      return (1.0 - x.array().tanh().square()).matrix();
  }
  return Matrix::Ones(x.rows(), x.cols());
}

}  // namespace pcg
