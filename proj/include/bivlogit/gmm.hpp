#pragma once

#include "bivlogit/appendix_moments.hpp"
#include "bivlogit/fit_result.hpp"
#include "bivlogit/simulate.hpp"

#include <array>
#include <vector>

namespace bivlogit {

inline constexpr int kStackedMoments = 4 * kNumMoments;

// Row of moment j (1..6) for an initial pair in the stacked 24-vector.
inline int moment_row(Cell initial, int j) { return kNumMoments * initial.index() + (j - 1); }

struct MomentVector {
  Eigen::Matrix<double, kStackedMoments, 1> values = Eigen::Matrix<double, kStackedMoments, 1>::Zero();
  // Supporting pattern (1..5) matched for each moment of the household's initial pair; 0 if none.
  std::array<int, kNumMoments> matched{};
  Cell initial;
};

MomentVector household_moments(const PairSequence& seq, const MomentSymbols& s, double rho);

struct ValidationReport {
  double max_abs = 0.0;
  double max_rel = 0.0;
  int worst_moment = 0;
  Cell worst_initial;
  double worst_alpha = 0.0;
};

// Exact expectations of every moment under the restricted T=3 model, enumerating
// all 64 continuations for each initial pair and each alpha in the grid.
ValidationReport validate_moments(const Eigen::Matrix2d& gamma, double kappa, double rho,
                                  const std::vector<double>& alpha_grid);
// Same with explicit symbols (used to check that a wrong symbol map is detected).
ValidationReport validate_moments(const MomentSymbols& s, const Eigen::Matrix2d& gamma, double kappa,
                                  double rho, const std::vector<double>& alpha_grid);

// Seeded sweep: gamma ~ U[-2,2]^4, kappa ~ U[-1,1], rho ~ U[-1,2], alpha on a
// 7-point grid over [-3,3]. literal_b maps B to kappa itself instead of exp(kappa).
struct MomentSuiteReport {
  ValidationReport worst;
  int draws = 0;
  Eigen::Matrix2d worst_gamma = Eigen::Matrix2d::Zero();
  double worst_kappa = 0.0;
  double worst_rho = 0.0;
};

MomentSuiteReport moment_validity_suite(int draws = 100, std::uint64_t seed = 1, bool literal_b = false);

struct SampleMoments {
  Vector mean;          // 24
  Matrix cov;           // covariance of household contributions (divisor n)
  Matrix cov_of_mean;   // cov / n
  Vector match_fraction;  // share of households matching some pattern of each moment
  std::size_t n = 0;
};

SampleMoments sample_moments(const Panel& panel, const Eigen::Matrix2d& gamma, double kappa, double rho);

// Sample moments as an affine function of P = exp(rho): mean(P) = U + V P.
struct MomentProblem {
  MomentProblem(const Panel& panel, const Eigen::Matrix2d& gamma, double kappa);

  Vector mean(double P) const { return U + V * P; }
  Matrix cov(double P) const;  // covariance of household contributions (divisor n)

  Vector U, V;
  Matrix Suu, Suv, Svv;  // uncentered second moments of (u_i, v_i)
  Vector match_fraction;
  std::size_t n = 0;
};

struct GmmOptions {
  double rho_low = -2.0;
  double rho_high = 4.0;
  double variance_floor = 1e-12;
};

struct GmmResult {
  double rho_hat = 0.0;
  double exp_rho_hat = 0.0;  // unconstrained minimizer in exp(rho)
  double objective = 0.0;
  Vector weighting;  // diagonal; zero for dropped moments
  double se = 0.0;   // conditional on the first stage
  bool boundary_flag = false;
  int dropped_moments = 0;
  Vector match_fraction;
};

// Quadratic objective in P = exp(rho) with fixed diagonal weights.
struct GmmObjective {
  Vector U, V, w;
  double operator()(double P) const;
};

GmmObjective gmm_objective(const MomentProblem& prob, const GmmOptions& opts = {});
GmmResult fit_gmm_rho(const Panel& panel, const Eigen::Matrix2d& gamma, double kappa,
                      const GmmOptions& opts = {});

// Restricted CMLE followed by GMM for rho.
struct TwoStepResult {
  FitResult first;
  GmmResult second;
  // (gamma11, gamma12, gamma21, gamma22, kappa, rho)
  Vector estimates() const;
  static std::vector<std::string> names();
};

TwoStepResult fit_two_step(const Panel& panel, const GmmOptions& opts = {});

}  // namespace bivlogit
