#pragma once

#include "bivlogit/fit_result.hpp"
#include "bivlogit/optimize.hpp"
#include "bivlogit/quadrature.hpp"
#include "bivlogit/simulate.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace bivlogit {

// alpha = d0 + d1 y1_0 + d2 y2_0 + d3 y1_0 y2_0 + nu, nu ~ N(0, sigma^2); alpha2 = alpha + kappa.
struct CREParams {
  CommonParams common;
  std::array<double, 4> delta{};
  double sigma = 1.0;

  double mean(Cell initial) const {
    return delta[0] + delta[1] * initial.y1 + delta[2] * initial.y2 + delta[3] * initial.y1 * initial.y2;
  }
  void validate() const;

  // (g11, g12, g21, g22, rho, kappa, d0, d1, d2, d3, log sigma)
  Vector pack() const;
  static CREParams unpack(const Vector& theta);
  static std::vector<std::string> names();
};

inline constexpr int kCreDim = 11;
inline constexpr int kCreLogSigma = 10;

double cre_household_loglik(const CREParams& cre, const PairSequence& seq, const QuadratureRule& quad);

// Weighted sequence frequencies over the 4 * 4^T universe (initial * 4^T + code).
class CreProblem {
 public:
  CreProblem(int T, std::vector<double> weights, QuadratureRule quad);
  static CreProblem from_panel(const Panel& panel, const QuadratureRule& quad);

  int periods() const { return T_; }
  double total_weight() const { return total_; }
  const QuadratureRule& quadrature() const { return quad_; }

  // Weighted log-likelihood sum and gradient with respect to the packed vector.
  double loglik(const Vector& theta, Vector* grad = nullptr) const;
  double loglik_serial(const Vector& theta, Vector* grad = nullptr) const;

 private:
  template <bool Parallel>
  double loglik_impl(const Vector& theta, Vector* grad) const;
  void initial_block(int init, const Vector& theta, double& f, Vector* grad) const;

  int T_;
  std::vector<double> w_;
  double total_ = 0.0;
  QuadratureRule quad_;
};

struct CreFitOptions {
  int order = 32;
  std::array<bool, kCreDim> fixed{};  // held at the start value
  bool sigma_zero = false;            // degenerate effects: alpha = mu(y0)
  Vector start;                       // packed; empty means a neutral default
  OptimOptions optim;
};

FitResult fit_cre(const Panel& panel, const CreFitOptions& opts = {});
FitResult fit_cre(const CreProblem& prob, const CreFitOptions& opts);

struct PlimOptions {
  int order = 32;
  int max_order = 256;
  int starts = 5;
  double tol = 1e-4;
  std::uint64_t seed = 7;
};

struct PlimResult {
  Vector estimates;  // packed CRE vector
  double objective = 0.0;
  int order = 0;
  bool converged = false;
  std::vector<double> start_objectives;

  // The six common parameters (g11, g12, g21, g22, rho, kappa).
  Vector common() const { return estimates.head(6); }
  std::string table_row() const;
};

// Expected log-likelihood weights: 1/4 * sum_alpha P(alpha | y0) p(seq | y0, alpha).
std::vector<double> plim_weights(const CommonParams& truth, const HeterogeneityDist& dist, int T,
                                 const QuadratureRule& quad);

PlimResult cre_plim(const CommonParams& truth, const HeterogeneityDist& dist, int T = 3,
                    const PlimOptions& opts = {});

}  // namespace bivlogit
