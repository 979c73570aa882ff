#pragma once

#include "bivlogit/model.hpp"

#include <array>
#include <utility>

namespace bivlogit {

// Exponentiated parameters entering the closed-form moment weights.
struct MomentSymbols {
  double G11 = 1.0, G12 = 1.0, G21 = 1.0, G22 = 1.0;
  double B = 1.0;  // exp(kappa)

  static MomentSymbols from(const Eigen::Matrix2d& gamma, double kappa);
};

inline constexpr int kNumMoments = 6;
inline constexpr int kMomentSupport = 5;

// The five T=3 outcome tuples (y1_0..y1_3, y2_0..y2_3) touched by moment j (1..6)
// for the given initial pair.
std::array<std::array<int, 8>, kMomentSupport> moment_patterns(Cell initial, int j);
// Continuation codes of the same patterns.
std::array<std::uint32_t, kMomentSupport> moment_pattern_codes(Cell initial, int j);

// Weights m_1..m_5 of moment j at P = exp(rho).
std::array<double, kMomentSupport> moment_weights(const MomentSymbols& s, Cell initial, int j, double P);

// (u_k, v_k) with m_k = u_k + v_k * exp(rho).
std::array<std::pair<double, double>, kMomentSupport> moment_coefficients(const MomentSymbols& s,
                                                                          Cell initial, int j);
std::array<std::pair<double, double>, kMomentSupport> moment_coefficients(const Eigen::Matrix2d& gamma,
                                                                          double kappa, Cell initial,
                                                                          int j);

}  // namespace bivlogit
