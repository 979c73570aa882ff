#pragma once

#include "bivlogit/model.hpp"

#include <functional>
#include <string>
#include <vector>

namespace bivlogit {

// Value to minimize; fills grad when non-null.
using ObjectiveFn = std::function<double(const Vector& x, Vector* grad)>;

struct OptimOptions {
  int max_iter = 500;
  double grad_tol = 1e-8;       // scaled gradient infinity norm
  double stall_tol = 1e-6;      // accepted when the line search can make no further progress
  double separation_bound = 25.0;
};

struct OptimResult {
  Vector x;
  double value = 0.0;
  Vector grad;
  int iterations = 0;
  bool converged = false;
  bool separation = false;
  std::vector<double> trace;  // objective after every accepted step
  std::string message;
};

double scaled_gradient_norm(const Vector& x, double value, const Vector& grad);

// Quasi-Newton (BFGS) with Armijo backtracking; objective values never increase.
OptimResult minimize_bfgs(const ObjectiveFn& fn, Vector x0, const OptimOptions& opts = {});

// Central differences of fn's value.
Vector finite_difference_gradient(const ObjectiveFn& fn, const Vector& x, double rel_step = 1e-5);
// Symmetrized central differences of fn's analytic gradient.
Matrix finite_difference_hessian(const ObjectiveFn& fn, const Vector& x, double rel_step = 1e-5);

double gradient_relative_error(const Vector& analytic, const Vector& numeric);

}  // namespace bivlogit
