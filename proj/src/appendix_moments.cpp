#include "bivlogit/appendix_moments.hpp"

#include "bivlogit/error.hpp"

#include <cmath>

// Closed-form moment weights for the restricted T=3 model without covariates.
// G_ij = exp(gamma_ij), B = exp(kappa), P = exp(rho); (a, b) is the initial pair.

namespace bivlogit {

MomentSymbols MomentSymbols::from(const Eigen::Matrix2d& gamma, double kappa) {
  return {std::exp(gamma(0, 0)), std::exp(gamma(0, 1)), std::exp(gamma(1, 0)), std::exp(gamma(1, 1)),
          std::exp(kappa)};
}

namespace {

double pw(double x, int n) { return std::pow(x, n); }

void check_index(int j) {
  if (j < 1 || j > kNumMoments) throw InvalidInput("moment index must be in 1..6");
}

}  // namespace

std::array<std::array<int, 8>, kMomentSupport> moment_patterns(Cell initial, int j) {
  check_index(j);
  const int a = initial.y1, b = initial.y2;
  using P = std::array<int, 8>;
  switch (j) {
    case 1:
      return {P{a, 0, 0, 1, b, 0, 1, 0}, P{a, 0, 0, 1, b, 0, 1, 1}, P{a, 0, 1, 0, b, 0, 1, 0},
              P{a, 0, 1, 0, b, 1, 1, 0}, P{a, 0, 1, 1, b, 0, 1, 0}};
    case 2:
      return {P{a, 0, 0, 1, b, 1, 0, 0}, P{a, 0, 0, 1, b, 1, 0, 1}, P{a, 0, 1, 0, b, 0, 1, 1},
              P{a, 1, 0, 0, b, 1, 0, 0}, P{a, 1, 0, 0, b, 1, 1, 0}};
    case 3:
      return {P{a, 0, 1, 1, b, 1, 0, 1}, P{a, 0, 1, 1, b, 1, 1, 1}, P{a, 1, 0, 0, b, 1, 1, 1},
              P{a, 1, 1, 1, b, 0, 1, 0}, P{a, 1, 1, 1, b, 0, 1, 1}};
    case 4:
      return {P{a, 1, 0, 0, b, 1, 0, 1}, P{a, 1, 0, 1, b, 0, 0, 1}, P{a, 1, 0, 1, b, 1, 0, 1},
              P{a, 1, 1, 0, b, 1, 0, 0}, P{a, 1, 1, 0, b, 1, 0, 1}};
    case 5:
      return {P{a, 0, 0, 0, b, 0, 1, 0}, P{a, 0, 0, 0, b, 0, 1, 1}, P{a, 0, 1, 0, b, 0, 0, 0},
              P{a, 0, 1, 0, b, 0, 0, 1}, P{a, 0, 1, 0, b, 1, 0, 0}};
    default:
      return {P{a, 0, 0, 0, b, 1, 0, 1}, P{a, 0, 1, 0, b, 1, 0, 1}, P{a, 0, 1, 1, b, 0, 0, 0},
              P{a, 0, 1, 1, b, 0, 0, 1}, P{a, 1, 0, 0, b, 0, 1, 0}};
  }
}

std::array<std::uint32_t, kMomentSupport> moment_pattern_codes(Cell initial, int j) {
  std::array<std::uint32_t, kMomentSupport> out{};
  const auto pats = moment_patterns(initial, j);
  for (int k = 0; k < kMomentSupport; ++k) out[k] = PairSequence::from_tuple(pats[k]).code();
  return out;
}

std::array<double, kMomentSupport> moment_weights(const MomentSymbols& s, Cell initial, int j, double P) {
  check_index(j);
  const double G11 = s.G11, G12 = s.G12, G21 = s.G21, G22 = s.G22, B = s.B;
  const int a = initial.y1, b = initial.y2;
  const double B2 = B * B;

  // shared by moments 1 and 2
  const double inner1 = G12 * (-B * G21 * G22 * G22 + (B + 1) * G22 + G11 * (G21 * G22 * (B * G22 - B - 1) + 1) - 1) +
                        B * (G21 - 1) * G22 + G11 * (G21 - 1) * G22 * G12 * G12;

  switch (j) {
    case 1: {
      // moment 1, m1 .. m5
      const double m1 = B * G11 * G22 * P * inner1;
      const double m2 =
          G11 * (B2 * (G21 - 1) * G22 * G22 +
                 G12 * G12 * (-B * G22 * G22 * P + G11 * (B * G21 * G22 * G22 * P - (B + 1) * G22 + 1) + (B + 1) * G22 - 1) +
                 B * G22 * G12 * (B * G22 - G21 * ((B + 1) * G22 - 1) + G11 * (1 - G21 * P) + G22 + P - 2));
      const double m3 = -B * G11 * G12 * G22 * inner1;
      const double m4 =
          -G11 * G12 * pw(G21, -a) * pw(G22, 1 - b) *
          (G11 * (B2 * (G21 - 1) * G21 * G22 * G22 + B * G22 * G12 * (2 * G21 * (P - 2) + G21 * G21 + 1) - (G21 - 1) * G12 * G12) +
           G12 * G11 * G11 * (B * G21 * G22 * (1 - G21 * P) + G12 * (G21 - 1)) +
           B * G22 * (G12 * (G21 - P) - B * (G21 - 1) * G21 * G22));
      const double m5 =
          B * G22 *
          (G11 * G11 * G12 * G12 * (-B * G21 * G21 * G22 * G22 * P + (B + 1) * G21 * G22 - 1) +
           G11 * G12 * (B * G22 * (G21 * (-(B + 1) * G22 + P - 2) + (B + 1) * G22 * G21 * G21 + 1) + G12 * (G21 * G22 * (B * G22 * P - B - 1) + 1)) +
           B * G22 * (G12 * (G21 - P) - B * (G21 - 1) * G21 * G22));
      return {m1, m2, m3, m4, m5};
    }
    case 2: {
      // moment 2
      const double pre = pw(G11, a) * pw(G12, b);
      const double m1 = -B * G21 * P * pre * inner1;
      const double m2 =
          -G21 * pre *
          (B2 * (G21 - 1) * G22 * G22 +
           G12 * G12 * (-B * G22 * G22 * P + G11 * (B * G21 * G22 * G22 * P - (B + 1) * G22 + 1) + (B + 1) * G22 - 1) +
           B * G22 * G12 * (B * G22 - G21 * ((B + 1) * G22 - 1) + G11 * (1 - G21 * P) + G22 + P - 2));
      const double m3 =
          pre * pw(G21, a) * pw(G22, b - 1) *
          (G11 * G11 * G12 * G12 * (B * G21 * G21 * G22 * G22 * P - (B + 1) * G21 * G22 + 1) -
           G11 * G12 * (B * G22 * (G21 * (-(B + 1) * G22 + P - 2) + (B + 1) * G22 * G21 * G21 + 1) + G12 * (G21 * G22 * (B * G22 * P - B - 1) + 1)) +
           B * G22 * (B * (G21 - 1) * G21 * G22 + G12 * (P - G21)));
      const double m4 = B * G21 * inner1;
      const double m5 =
          G12 * (G11 * (B2 * (G21 - 1) * G21 * G22 * G22 + B * G22 * G12 * (2 * G21 * (P - 2) + G21 * G21 + 1) - (G21 - 1) * G12 * G12) +
                 G12 * G11 * G11 * (B * G21 * G22 * (1 - G21 * P) + G12 * (G21 - 1)) +
                 B * G22 * (G12 * (G21 - P) - B * (G21 - 1) * G21 * G22));
      return {m1, m2, m3, m4, m5};
    }
    case 3: {
      // moment 3
      const double in3a =
          G11 * (B2 * G21 * (G21 - G22) * G22 + B * G12 * (2 * G22 * G21 * (P - 2) + G21 * G21 + G22 * G22) + G12 * G12 * (G22 - G21)) +
          G11 * G11 * (B * G21 * (G22 - G21 * P) + G12 * (G21 - G22)) +
          B * G12 * G22 * (B * G21 * (G22 - G21) + G12 * (G21 - G22 * P));
      const double in3b = G11 * ((G21 - G22) * G12 * (B * G21 * G22 + 1) - B * (G21 - 1) * G21 * G22 - (G21 - 1) * G22 * G12 * G12) +
                          B * G12 * G21 * (G22 - 1) * G22 + G12 * G21 * (G22 - 1) * G11 * G11;
      const double m1 = -B * pw(G11, a + 1) * pw(G21, -a) * pw(G12, b) * pw(G22, 1 - b) * in3a;
      const double m2 = -B * pw(G11, a + 1) * pw(G21, -a) * pw(G12, b) * pw(G22, -b) * in3b;
      const double m3 =
          G11 * G11 * G12 * pw(G21, -a) * pw(G22, -b - 1) *
          (G11 * (B2 * (G21 - 1) * G21 * G22 * G22 + G12 * G12 * (G21 * (B * G22 * G22 * P - B * G22 - 1) + G22) +
                  B * G22 * G12 * (G21 * (-G22 + P - 2) + G21 * G21 + G22)) +
           G12 * G11 * G11 * (B * G21 * G22 * (1 - G21 * P) + G12 * (G21 - G22)) +
           B * G12 * G22 * (G12 * (G21 - G22 * P) - B * (G21 - 1) * G21 * G22));
      const double m4 =
          B2 * G22 *
          (B2 * G12 * G21 * G21 * (G22 - 1) * G22 +
           G11 * G11 * (G12 * (B * G22 * G21 * G21 * P + G21 * (1 - B * G22) - G22) + B * G21 * (G22 - G21 * P) + (G22 - G21) * G12 * G12) +
           B * G21 * G11 * (-B * G21 * (G22 - 1) * G22 + G12 * G12 * (G22 - G22 * G22 * P) + G12 * (G22 * (G22 + P - 2) - G21 * (G22 - 1))));
      const double m5 = B2 * G11 * in3b;
      return {m1, m2, m3, m4, m5};
    }
    case 4: {
      // moment 4
      const double m1 =
          G12 * (G11 * (-G21 * (B2 + G12 * (B - B * G22 * P) + B * G22 - B * P + 2 * B + 1) + B * (B + 1) * G22 * G21 * G21 + B + 1) +
                 G12 * G11 * G11 * (-B * G22 * G21 * G21 * P + (B + 1) * G21 - 1) +
                 B * (-B * G22 * G21 * G21 + (B + 1) * G21 - P));
      const double m2 =
          -B * G12 * pw(G21, a) * pw(G22, b) *
          (G11 * (-G21 * (B2 - 2 * B * P + 4 * B + 1) + B * (B + 1) * G21 * G21 + B + 1) +
           G11 * G11 * (-B * G21 * G21 * P + (B + 1) * G21 - 1) + B * (-B * G21 * G21 + (B + 1) * G21 - P));
      const double in4 = G11 * (-B * G22 * G21 * G21 + (B + 1) * G21 + G12 * (B * G22 * G21 * G21 - (B + 1) * G22 * G21 + 1) - 1) +
                         B * G21 * (G22 - 1) + G12 * G21 * (G22 - 1) * G11 * G11;
      const double m3 = -B * G12 * in4;
      const double m4 =
          B * (B2 * (G22 - 1) * G21 * G21 / G11 + B * G21 * (-(B + 1) * G21 * (G22 - 1) + G12 * (1 - G22 * P) + G22 + P - 2) +
               G11 * (-B * G21 * G21 * P + G12 * (B * G22 * G21 * G21 * P - (B + 1) * G21 + 1) + (B + 1) * G21 - 1));
      const double m5 = B * P * in4;
      return {m1, m2, m3, m4, m5};
    }
    case 5: {
      // moment 5
      const double in5 = B * (G22 - G21) + G12 * (G22 * (B * G21 - B - 1) + 1) + G11 * (G21 * (-B * G22 + B - G12 + 1) + G12 * G22 - 1);
      const double m1 = B * G12 * pw(G21, a) * pw(G22, b) * in5;
      const double m2 =
          G12 * pw(G21, a) * pw(G22, b - 1) *
          (B2 * G22 * (G22 - G21) + B * G12 * (G21 * ((B + 1) * G22 - 1) - G22 * ((B + 1) * G22 + P - 2)) +
           G12 * G12 * (B * G22 * G22 * P - (B + 1) * G22 + 1) + G11 * (B * (G21 * P - G22) + G12 * (G22 * (-B * G21 * P + B + 1) - 1)));
      const double m3 = -B2 * G12 * pw(G21, a) * pw(G22, b) * in5;
      const double m4 =
          -B * G12 * pw(G21, a - 1) * pw(G22, b) *
          (G11 * G11 * (-B * G21 * G21 * P + (B + 1) * G21 - 1) +
           G11 * (B * (G21 * (-(B + 1) * G22 + P - 2) + (B + 1) * G21 * G21 + G22) + G12 * (G21 * (B * G22 * P - B - 1) + 1)) +
           B * (B * G21 * (G22 - G21) + G12 * (G21 - G22 * P)));
      const double m5 =
          B * (G11 * (B2 * G21 * (G21 - G22) * G22 + B * G12 * (2 * G22 * G21 * (P - 2) + G21 * G21 + G22 * G22) + G12 * G12 * (G22 - G21)) +
               G11 * G11 * (B * G21 * (G22 - G21 * P) + G12 * (G21 - G22)) +
               B * G12 * G22 * (B * G21 * (G22 - G21) + G12 * (G21 - G22 * P)));
      return {m1, m2, m3, m4, m5};
    }
    default: {
      // moment 6
      const double m1 =
          pw(G11, a) * pw(G21, 1 - a) * pw(G12, b) * pw(G22, -b) *
          (-G12 * (-G22 * (B2 - 2 * B * P + 4 * B + 1) + B * (B + 1) * G22 * G22 + B + 1) +
           G12 * G12 * (B * G22 * G22 * P - (B + 1) * G22 + 1) + B * (B * G22 * G22 - (B + 1) * G22 + P));
      const double m2 =
          B * P * pw(G11, a) * pw(G21, -a) * pw(G12, b) * pw(G22, 1 - b) *
          (B * (G21 - G22) + G12 * (G22 * (-B * G21 + B + 1) - 1) + G11 * (G21 * (B * G22 - B + G12 - 1) - G12 * G22 + 1));
      const double m3 =
          B2 * G21 * pw(G11, a - 1) * pw(G12, b) *
          (G12 * (-B2 * G22 + B * G22 * P + G11 * (G22 * (-B * G21 * P + B + 1) - 1) - 2 * B * G22 + B * G21 * ((B + 1) * G22 - 1) + B - G22 + 1) +
           B * (G22 * (-B * G21 + B + 1) + G11 * (G21 * P - G22) - P));
      const double m4 =
          B2 * pw(G11, a - 1) * pw(G12, b) *
          (B * (G22 - G21) + G12 * (G22 * (B * G21 - B - 1) + 1) + G11 * (G21 * (-B * G22 + B - G12 + 1) + G12 * G22 - 1));
      const double m5 =
          B * (B2 * (G21 - G22) * G22 + B * G12 * (G22 * ((B + 1) * G22 + P - 2) - G21 * ((B + 1) * G22 - 1)) +
               G12 * G12 * (-B * G22 * G22 * P + (B + 1) * G22 - 1) + G11 * (B * (G22 - G21 * P) + G12 * (G22 * (B * G21 * P - B - 1) + 1)));
      return {m1, m2, m3, m4, m5};
    }
  }
}

std::array<std::pair<double, double>, kMomentSupport> moment_coefficients(const MomentSymbols& s,
                                                                          Cell initial, int j) {
  const auto at0 = moment_weights(s, initial, j, 0.0);
  const auto at1 = moment_weights(s, initial, j, 1.0);
  std::array<std::pair<double, double>, kMomentSupport> out;
  for (int k = 0; k < kMomentSupport; ++k) out[k] = {at0[k], at1[k] - at0[k]};
  return out;
}

std::array<std::pair<double, double>, kMomentSupport> moment_coefficients(const Eigen::Matrix2d& gamma,
                                                                          double kappa, Cell initial,
                                                                          int j) {
  return moment_coefficients(MomentSymbols::from(gamma, kappa), initial, j);
}

}  // namespace bivlogit
