#pragma once

#include "bivlogit/fit_result.hpp"
#include "bivlogit/optimize.hpp"
#include "bivlogit/simulate.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

namespace bivlogit {

struct SufficientStat {
  Cell initial;
  int mid_sum1 = 0;
  int mid_sum2 = 0;
  int mid_cross = 0;
  bool restricted = false;
  Cell tail;         // unrestricted: (y1_T, y2_T)
  int tail_sum = 0;  // restricted: y1_T + y2_T

  std::uint64_t key() const;
  friend bool operator==(const SufficientStat& a, const SufficientStat& b) { return a.key() == b.key(); }
};

struct ComparisonClass {
  SufficientStat stat;
  std::vector<PairSequence> members;
};

SufficientStat sufficient_stat(const PairSequence& seq, bool restricted);
ComparisonClass comparison_class(const SufficientStat& stat, int T);

// Statistics entering the conditional likelihood:
// (sum y1_t y1_{t-1}, sum y1_t y2_{t-1}, sum y2_t y1_{t-1}, sum y2_t y2_{t-1}, sum_{t>=1} y2_t).
std::array<int, 5> cmle_features(const PairSequence& seq);

// Comparison classes of all 4 * 4^T sequences, indexed by initial * 4^T + code.
class ClassTable {
 public:
  ClassTable(int T, bool restricted);
  static std::shared_ptr<const ClassTable> get(int T, bool restricted);

  int periods() const { return T_; }
  bool restricted() const { return restricted_; }
  std::size_t universe() const { return class_of_.size(); }
  std::size_t index(const PairSequence& seq) const;
  int class_of(std::size_t index) const { return class_of_[index]; }
  const std::vector<std::uint32_t>& members(int cls) const { return members_[cls]; }
  std::size_t num_classes() const { return members_.size(); }
  const std::array<int, 5>& features(std::size_t index) const { return features_[index]; }

 private:
  int T_;
  bool restricted_;
  std::vector<int> class_of_;
  std::vector<std::vector<std::uint32_t>> members_;
  std::vector<std::array<int, 5>> features_;
};

double cond_loglik_unrestricted(const CommonParams& params, const PairSequence& seq);
double cond_loglik_restricted(const CommonParams& params, const PairSequence& seq);

// Conditional log-likelihood summed over a binned panel.
class CmleProblem {
 public:
  CmleProblem(const Panel& panel, bool restricted);

  Eigen::Index dim() const { return restricted_ ? 5 : 4; }
  std::vector<std::string> names() const;
  // theta = (g11, g12, g21, g22[, kappa]); info receives the observed information.
  double loglik(const Vector& theta, Vector* grad = nullptr, Matrix* info = nullptr) const;
  std::size_t households() const { return households_; }
  std::size_t singleton_households() const { return singletons_; }
  std::size_t informative_households() const { return households_ - singletons_; }

 private:
  bool restricted_;
  std::shared_ptr<const ClassTable> table_;
  std::vector<double> counts_;
  std::vector<int> active_classes_;
  std::size_t households_ = 0;
  std::size_t singletons_ = 0;
};

FitResult fit_cmle(const Panel& panel, bool restricted, const OptimOptions& opts = {});

}  // namespace bivlogit
