#include "bivlogit/model.hpp"

#include "bivlogit/error.hpp"

#include <string>

namespace bivlogit {

namespace {

void check_finite(const Eigen::Ref<const Matrix>& m, const char* what) {
  if (!m.allFinite()) throw InvalidInput(std::string(what) + " must be finite");
}

double dot_or_zero(const Vector& x, const Vector& beta, const char* what) {
  if (x.size() != beta.size())
    throw InvalidInput(std::string(what) + ": covariate length " + std::to_string(x.size()) +
                       " does not match coefficient length " + std::to_string(beta.size()));
  return beta.size() == 0 ? 0.0 : x.dot(beta);
}

std::array<double, 4> exp_cells(const std::array<double, 4>& lc) {
  return {std::exp(lc[0]), std::exp(lc[1]), std::exp(lc[2]), std::exp(lc[3])};
}

}  // namespace

void CommonParams::validate() const {
  if (beta1.size() != beta2.size())
    throw InvalidInput("beta1 and beta2 must have the same length");
  check_finite(beta1, "beta1");
  check_finite(beta2, "beta2");
  check_finite(gamma, "gamma");
  if (!std::isfinite(rho) || !std::isfinite(kappa)) throw InvalidInput("rho and kappa must be finite");
}

CommonParams CommonParams::dynamic(double g11, double g12, double g21, double g22, double rho,
                                   double kappa) {
  CommonParams p;
  p.gamma << g11, g12, g21, g22;
  p.rho = rho;
  p.kappa = kappa;
  return p;
}

PairSequence::PairSequence(std::vector<std::uint8_t> y1, std::vector<std::uint8_t> y2)
    : y1_(std::move(y1)), y2_(std::move(y2)) {
  if (y1_.size() != y2_.size()) throw InvalidInput("y1 and y2 must have the same length");
  if (y1_.size() < 2) throw InvalidInput("a sequence needs at least one period after the initial one");
  for (std::size_t t = 0; t < y1_.size(); ++t)
    if (y1_[t] > 1 || y2_[t] > 1) throw InvalidInput("outcomes must be 0 or 1");
}

PairSequence PairSequence::from_code(int T, Cell initial, std::uint32_t code) {
  if (T < 1) throw InvalidInput("T must be at least 1");
  std::vector<std::uint8_t> y1(T + 1), y2(T + 1);
  y1[0] = static_cast<std::uint8_t>(initial.y1);
  y2[0] = static_cast<std::uint8_t>(initial.y2);
  for (int t = 1; t <= T; ++t) {
    const Cell c = Cell::from_index(static_cast<int>((code >> (2 * (T - t))) & 3u));
    y1[t] = static_cast<std::uint8_t>(c.y1);
    y2[t] = static_cast<std::uint8_t>(c.y2);
  }
  return PairSequence(std::move(y1), std::move(y2));
}

PairSequence PairSequence::from_tuple(std::span<const int> tuple) {
  if (tuple.size() % 2 != 0 || tuple.size() < 4) throw InvalidInput("tuple length must be 2(T+1)");
  const std::size_t half = tuple.size() / 2;
  std::vector<std::uint8_t> y1(half), y2(half);
  for (std::size_t t = 0; t < half; ++t) {
    if ((tuple[t] != 0 && tuple[t] != 1) || (tuple[half + t] != 0 && tuple[half + t] != 1))
      throw InvalidInput("outcomes must be 0 or 1");
    y1[t] = static_cast<std::uint8_t>(tuple[t]);
    y2[t] = static_cast<std::uint8_t>(tuple[half + t]);
  }
  return PairSequence(std::move(y1), std::move(y2));
}

std::uint32_t PairSequence::code() const {
  std::uint32_t code = 0;
  for (int t = 1; t <= periods(); ++t) code = (code << 2) | static_cast<std::uint32_t>(at(t).index());
  return code;
}

std::vector<int> PairSequence::tuple() const {
  std::vector<int> out;
  out.reserve(2 * y1_.size());
  for (auto v : y1_) out.push_back(v);
  for (auto v : y2_) out.push_back(v);
  return out;
}

std::array<double, 4> joint_cells_static(const CommonParams& params, const Vector& x1,
                                         const Vector& x2) {
  const double z1 = dot_or_zero(x1, params.beta1, "joint_prob_static");
  const double z2 = dot_or_zero(x2, params.beta2, "joint_prob_static");
  return exp_cells(kernel::log_cells(z1, z2, params.rho));
}

double joint_prob_static(const CommonParams& params, const Vector& x1, const Vector& x2, int c1,
                         int c2) {
  if ((c1 != 0 && c1 != 1) || (c2 != 0 && c2 != 1)) throw InvalidInput("cells are bits");
  return joint_cells_static(params, x1, x2)[Cell{c1, c2}.index()];
}

double conditional_prob(const CommonParams& params, Equation eq, const Vector& x_own, int y_other) {
  const Vector& beta = eq == Equation::first ? params.beta1 : params.beta2;
  const double z = dot_or_zero(x_own, beta, "conditional_prob") + params.rho * y_other;
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

std::array<double, 4> transition_cells(const CommonParams& params, const FixedEffects& fe,
                                       const Vector& x1t, const Vector& x2t, Cell prev) {
  const auto& g = params.gamma;
  const double z1 = fe.alpha1 + dot_or_zero(x1t, params.beta1, "transition_prob") +
                    g(0, 0) * prev.y1 + g(0, 1) * prev.y2;
  const double z2 = fe.alpha2 + dot_or_zero(x2t, params.beta2, "transition_prob") +
                    g(1, 0) * prev.y1 + g(1, 1) * prev.y2;
  return exp_cells(kernel::log_cells(z1, z2, params.rho));
}

double transition_prob(const CommonParams& params, const FixedEffects& fe, const Vector& x1t,
                       const Vector& x2t, Cell prev, Cell c) {
  return transition_cells(params, fe, x1t, x2t, prev)[c.index()];
}

double sequence_log_prob(const CommonParams& params, const FixedEffects& fe,
                         const CovariatePath& xpath, const PairSequence& seq) {
  const int T = seq.periods();
  if (T < 1) throw InvalidInput("sequence_prob requires T >= 1");
  const bool has_x = params.covariate_dim() > 0;
  if (has_x && (xpath.x1.rows() != T || xpath.x2.rows() != T))
    throw InvalidInput("covariate path must have T rows");
  if (!has_x && !xpath.empty()) throw InvalidInput("covariates supplied to a model without coefficients");
  const auto& g = params.gamma;
  double lp = 0.0;
  for (int t = 1; t <= T; ++t) {
    const Cell prev = seq.at(t - 1);
    double z1 = fe.alpha1 + g(0, 0) * prev.y1 + g(0, 1) * prev.y2;
    double z2 = fe.alpha2 + g(1, 0) * prev.y1 + g(1, 1) * prev.y2;
    if (has_x) {
      z1 += xpath.x1.row(t - 1).dot(params.beta1);
      z2 += xpath.x2.row(t - 1).dot(params.beta2);
    }
    lp += kernel::log_cells(z1, z2, params.rho)[seq.at(t).index()];
  }
  return lp;
}

double sequence_prob(const CommonParams& params, const FixedEffects& fe, const CovariatePath& xpath,
                     const PairSequence& seq) {
  return std::exp(sequence_log_prob(params, fe, xpath, seq));
}

std::vector<PairSequence> enumerate_sequences(int T, Cell initial) {
  if (T < 1) throw InvalidInput("T must be at least 1");
  if (T > 12) throw InvalidInput("T too large to enumerate");
  const std::uint32_t n = num_continuations(T);
  std::vector<PairSequence> out;
  out.reserve(n);
  for (std::uint32_t code = 0; code < n; ++code) out.push_back(PairSequence::from_code(T, initial, code));
  return out;
}

}  // namespace bivlogit
