#pragma once

#include "bivlogit/model.hpp"

namespace bivlogit {

// Gauss-Hermite rule for expectations under N(0,1): E f(Z) ~ sum_i w_i f(x_i).
struct QuadratureRule {
  Vector nodes;
  Vector weights;
  int order = 0;

  static QuadratureRule gauss_hermite(int order);
};

}  // namespace bivlogit
