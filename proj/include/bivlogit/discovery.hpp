#pragma once

#include "bivlogit/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace bivlogit {

struct CountConfig {
  int T = 3;
  bool restricted = false;
  bool with_covariates = false;  // one scalar covariate per spouse per period
  Cell initial{0, 0};
  int alpha_draws = 0;      // rows of the floating-point matrix; 0 means 4 * 4^T
  int param_draws = 5;      // minimum number of stacked parameter draws
  double rank_tol = 1e-8;   // relative singular-value cutoff for the floating-point diagnostic
  double alpha_range = 6.0; // fixed effects drawn uniformly on [-range, range]
  bool svd_diagnostics = true;

  int default_alpha_draws() const { return alpha_draws > 0 ? alpha_draws : 4 * static_cast<int>(num_continuations(T)); }
  void validate() const;
};

struct CountReport {
  int n_tot = 0;
  int n_para = 0;
  int n_rho = 0;
  int para_draws = 0;  // parameter draws stacked for n_para
  int rho_draws = 0;   // rho draws stacked for n_rho
  // Floating-point diagnostics at the first parameter draw.
  int numeric_rank = -1;          // rank at the relative cutoff
  double sv_last_signal = 0.0;    // relative singular value at the exact rank
  double sv_first_null = 0.0;     // relative singular value just past the exact rank
  bool numeric_agrees = false;

  std::string table_row() const;  // "n_tot / n_para / n_rho"
};

// Real probability matrix: one row per fixed-effect draw, one column per continuation
// of config.initial. Restricted configurations use alpha2 = alpha1 + params.kappa.
Matrix probability_matrix(const CountConfig& config, const CommonParams& params,
                          const std::vector<FixedEffects>& alpha_draws, const CovariatePath& xpath = {});
Matrix probability_matrix_serial(const CountConfig& config, const CommonParams& params,
                                 const std::vector<FixedEffects>& alpha_draws, const CovariatePath& xpath = {});

std::vector<FixedEffects> draw_fixed_effects(const CountConfig& config, double kappa, int n, std::uint64_t seed);

// Generic common parameters (and covariate path when configured) for a given seed.
CommonParams generic_params(const CountConfig& config, std::uint64_t seed);
CovariatePath generic_covariates(const CountConfig& config, std::uint64_t seed);

// Ranks are computed exactly over the prime field GF(2^61 - 1) at random
// parameter points, twice with independent seeds; disagreement raises AmbiguousRank.
CountReport count_moments(const CountConfig& config, std::uint64_t seed = 1);

// Orthonormal basis (4^T x n_tot) of the null space at the given parameters,
// computed in extended precision.
Matrix extract_moment_basis(const CountConfig& config, const CommonParams& params, std::uint64_t seed = 1,
                            const CovariatePath& xpath = {});

}  // namespace bivlogit
