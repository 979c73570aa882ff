#pragma once

#include "bivlogit/model.hpp"

#include <map>
#include <string>
#include <vector>

namespace bivlogit {

struct FitResult {
  std::vector<std::string> names;
  Vector estimates;
  Matrix covariance;
  Matrix hessian;  // observed information of the summed log-likelihood
  double loglik = 0.0;
  bool converged = false;
  bool separation = false;
  int iterations = 0;
  std::string message;
  std::map<std::string, double> diagnostics;

  Vector se() const { return covariance.diagonal().cwiseMax(0.0).cwiseSqrt(); }
  double estimate(const std::string& name) const;
  double se(const std::string& name) const;
  Eigen::Index index_of(const std::string& name) const;
};

// Inverse of a symmetric positive definite information matrix; throws when singular.
Matrix invert_information(const Matrix& info);

}  // namespace bivlogit
