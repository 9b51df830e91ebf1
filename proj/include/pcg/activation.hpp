#pragma once

#include <string>
#include <string_view>

#include "pcg/types.hpp"

namespace pcg {

enum class Activation { Identity, HardTanh, Tanh };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

/// Pointwise non-linearity f.
double activate(Activation a, double x);

/// Pointwise derivative f'. HardTanh uses 1.0 at the kinks |x| = 1.
double activate_derivative(Activation a, double x);

Matrix activate(Activation a, const Eigen::Ref<const Matrix>& x);
Matrix activate_derivative(Activation a, const Eigen::Ref<const Matrix>& x);

}  // namespace pcg
