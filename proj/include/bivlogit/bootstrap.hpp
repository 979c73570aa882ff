#pragma once

#include "bivlogit/simulate.hpp"

#include <functional>
#include <string>

namespace bivlogit {

// Returns the statistic for a (resampled) panel; throwing or returning
// non-finite values marks the replicate as failed.
using PanelEstimator = std::function<Vector(const Panel&)>;

struct BootstrapOptions {
  int replicates = 200;
  std::uint64_t seed = 1;
  // Every replicate reuses the resample of replicate 0.
  bool identical_resamples = false;
};

struct BootstrapResult {
  Vector se;
  Matrix draws;  // successful replicates in replicate order
  int used = 0;
  int dropped = 0;
  bool warning = false;
  std::string message;
};

std::vector<std::size_t> resample_indices(std::size_t n, std::uint64_t seed, std::uint64_t replicate);

BootstrapResult bootstrap_se(const Panel& panel, const PanelEstimator& estimator,
                             const BootstrapOptions& opts = {});

}  // namespace bivlogit
