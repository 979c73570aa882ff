#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace bivlogit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Outcome pair of one period. Cells are indexed 2*y1 + y2, so the order is
// (0,0), (0,1), (1,0), (1,1).
struct Cell {
  int y1 = 0;
  int y2 = 0;
  constexpr int index() const { return 2 * y1 + y2; }
  static constexpr Cell from_index(int i) { return {(i >> 1) & 1, i & 1}; }
  friend constexpr bool operator==(Cell, Cell) = default;
};

struct CommonParams {
  Vector beta1;  // first (wife) equation
  Vector beta2;  // second (husband) equation
  // gamma(i, j): coefficient in equation i on the lag of outcome j.
  Eigen::Matrix2d gamma = Eigen::Matrix2d::Zero();
  double rho = 0.0;
  double kappa = 0.0;

  Eigen::Index covariate_dim() const { return beta1.size(); }
  void validate() const;

  static CommonParams dynamic(double g11, double g12, double g21, double g22, double rho,
                              double kappa = 0.0);
};

struct FixedEffects {
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  static FixedEffects restricted(double alpha, double kappa) { return {alpha, alpha + kappa}; }
};

// Outcomes of one household over periods 0..T; period 0 is the initial condition.
class PairSequence {
 public:
  PairSequence() = default;
  PairSequence(std::vector<std::uint8_t> y1, std::vector<std::uint8_t> y2);

  // Continuation code: sum over t of cell_t * 4^(T-t), period 1 most significant.
  static PairSequence from_code(int T, Cell initial, std::uint32_t code);
  // Tuple layout (y1_0..y1_T, y2_0..y2_T).
  static PairSequence from_tuple(std::span<const int> tuple);

  int periods() const { return static_cast<int>(y1_.size()) - 1; }
  Cell at(int t) const { return {y1_[t], y2_[t]}; }
  Cell initial() const { return at(0); }
  std::uint32_t code() const;
  std::vector<int> tuple() const;
  const std::vector<std::uint8_t>& y1() const { return y1_; }
  const std::vector<std::uint8_t>& y2() const { return y2_; }

  friend bool operator==(const PairSequence&, const PairSequence&) = default;

 private:
  std::vector<std::uint8_t> y1_;
  std::vector<std::uint8_t> y2_;
};

// Strictly exogenous covariates for periods 1..T (row t-1 holds period t).
struct CovariatePath {
  Matrix x1;
  Matrix x2;
  bool empty() const { return x1.size() == 0 && x2.size() == 0; }
};

enum class Equation { first, second };

double joint_prob_static(const CommonParams& params, const Vector& x1, const Vector& x2, int c1,
                         int c2);
std::array<double, 4> joint_cells_static(const CommonParams& params, const Vector& x1,
                                         const Vector& x2);

// Lambda(x'beta + rho * y_other) for the chosen equation.
double conditional_prob(const CommonParams& params, Equation eq, const Vector& x_own, int y_other);

// x1t, x2t may be empty when the model has no covariates.
double transition_prob(const CommonParams& params, const FixedEffects& fe, const Vector& x1t,
                       const Vector& x2t, Cell prev, Cell c);
std::array<double, 4> transition_cells(const CommonParams& params, const FixedEffects& fe,
                                       const Vector& x1t, const Vector& x2t, Cell prev);

double sequence_log_prob(const CommonParams& params, const FixedEffects& fe,
                         const CovariatePath& xpath, const PairSequence& seq);
double sequence_prob(const CommonParams& params, const FixedEffects& fe, const CovariatePath& xpath,
                     const PairSequence& seq);

std::vector<PairSequence> enumerate_sequences(int T, Cell initial);

inline std::uint32_t num_continuations(int T) { return std::uint32_t{1} << (2 * T); }

namespace kernel {

// Log cell probabilities for linear indices z1, z2; normalized by log-sum-exp.
// Generic in the scalar type so that extended-precision callers share it.
template <class S>
std::array<S, 4> log_cells(const S& z1, const S& z2, const S& rho) {
  using std::exp;
  using std::log;
  std::array<S, 4> w{S(0), z2, z1, z1 + z2 + rho};
  S m = w[0];
  for (int i = 1; i < 4; ++i)
    if (w[i] > m) m = w[i];
  S sum = S(0);
  for (const auto& v : w) sum += exp(v - m);
  const S lse = m + log(sum);
  for (auto& v : w) v -= lse;
  return w;
}

// Dynamic model without covariates: common parameters stored as scalars.
template <class S>
struct Dynamic {
  S g11, g12, g21, g22, rho;

  std::array<S, 4> log_transition(const S& a1, const S& a2, Cell prev) const {
    const S z1 = a1 + g11 * prev.y1 + g12 * prev.y2;
    const S z2 = a2 + g21 * prev.y1 + g22 * prev.y2;
    return log_cells(z1, z2, rho);
  }

  // log p(continuation code | initial, a1, a2) for all 4^T codes; out must hold 4^T entries.
  void log_sequence_probs(const S& a1, const S& a2, Cell initial, int T, S* out) const {
    std::array<std::array<S, 4>, 4> table;
    for (int s = 0; s < 4; ++s) table[s] = log_transition(a1, a2, Cell::from_index(s));
    const std::uint32_t n = num_continuations(T);
    for (std::uint32_t code = 0; code < n; ++code) {
      S lp = S(0);
      int prev = initial.index();
      for (int t = 1; t <= T; ++t) {
        const int c = static_cast<int>((code >> (2 * (T - t))) & 3u);
        lp += table[prev][c];
        prev = c;
      }
      out[code] = lp;
    }
  }
};

}  // namespace kernel

}  // namespace bivlogit
