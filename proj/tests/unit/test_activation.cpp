#include <doctest.h>

#include <cmath>

#include "pcg/activation.hpp"
#include "pcg/errors.hpp"

using namespace pcg;

TEST_SUITE("activation") {
  TEST_CASE("identity, hardtanh and tanh values") {
    CHECK(activate(Activation::Identity, -3.5) == -3.5);
    CHECK(activate(Activation::HardTanh, 2.0) == 1.0);
    CHECK(activate(Activation::HardTanh, -7.0) == -1.0);
    CHECK(activate(Activation::HardTanh, 0.25) == 0.25);
    CHECK(activate(Activation::Tanh, 0.3) == doctest::Approx(std::tanh(0.3)));
  }

  TEST_CASE("hardtanh derivative is 1 on the closed interval, 0 outside") {
    CHECK(activate_derivative(Activation::HardTanh, 1.0) == 1.0);
    CHECK(activate_derivative(Activation::HardTanh, -1.0) == 1.0);
    CHECK(activate_derivative(Activation::HardTanh, 0.0) == 1.0);
    CHECK(activate_derivative(Activation::HardTanh, 1.0000001) == 0.0);
    CHECK(activate_derivative(Activation::HardTanh, -3.0) == 0.0);
  }

  TEST_CASE("derivatives match central differences away from kinks") {
    for (Activation a : {Activation::Identity, Activation::HardTanh, Activation::Tanh}) {
      for (double x : {-2.3, -0.7, -0.1, 0.0, 0.4, 0.95, 1.8}) {
        const double h = 1e-6;
        const double fd = (activate(a, x + h) - activate(a, x - h)) / (2 * h);
        CHECK(activate_derivative(a, x) == doctest::Approx(fd).epsilon(1e-7));
      }
    }
  }

  TEST_CASE("matrix forms agree with the scalar forms") {
    Matrix x(2, 3);
    x << -2, -0.5, 0.3, 1.0, 1.5, 0.0;
    for (Activation a : {Activation::Identity, Activation::HardTanh, Activation::Tanh}) {
      const Matrix f = activate(a, x);
      const Matrix df = activate_derivative(a, x);
      for (Index i = 0; i < x.rows(); ++i) {
        for (Index j = 0; j < x.cols(); ++j) {
          CHECK(f(i, j) == activate(a, x(i, j)));
          CHECK(df(i, j) == activate_derivative(a, x(i, j)));
        }
      }
    }
  }

  TEST_CASE("names round-trip and unknown names are rejected") {
    for (Activation a : {Activation::Identity, Activation::HardTanh, Activation::Tanh}) {
      CHECK(parse_activation(to_string(a)) == a);
    }
    CHECK_THROWS_AS(parse_activation("relu"), ConfigError);
  }
}
