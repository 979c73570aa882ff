#include "bivlogit/gmm.hpp"

#include "bivlogit/cmle.hpp"
#include "bivlogit/error.hpp"
#include "bivlogit/parallel.hpp"
#include "bivlogit/random.hpp"

#include <algorithm>
#include <cmath>

namespace bivlogit {

namespace {

constexpr int kT = 3;
constexpr std::uint32_t kCodes = 64;

// For every (initial, code): the moments it supports and the pattern index.
struct PatternIndex {
  std::array<std::array<std::array<int, kNumMoments>, kCodes>, 4> k{};  // 1..5 or 0
  PatternIndex() {
    for (int init = 0; init < 4; ++init)
      for (int j = 1; j <= kNumMoments; ++j) {
        const auto codes = moment_pattern_codes(Cell::from_index(init), j);
        for (int kk = 0; kk < kMomentSupport; ++kk) k[init][codes[kk]][j - 1] = kk + 1;
      }
  }
};

const PatternIndex& patterns() {
  static const PatternIndex idx;
  return idx;
}

void require_t3(const Panel& panel) {
  if (panel.periods() != kT) throw InvalidInput("the closed-form moments require T = 3");
  if (panel.covariate_dim() > 0) throw InvalidInput("the closed-form moments assume no covariates");
}

// Binned sequence counts over the 4 * 64 universe.
Vector bin_counts(const Panel& panel) {
  auto fn = [&](std::size_t b, std::size_t e, Vector& c) {
    for (std::size_t i = b; i < e; ++i) {
      const auto& s = panel.households[i].seq;
      c[s.initial().index() * kCodes + s.code()] += 1.0;
    }
  };
  return parallel::chunked_reduce(panel.size(), 8192, Vector::Zero(4 * kCodes).eval(), fn);
}

}  // namespace

MomentVector household_moments(const PairSequence& seq, const MomentSymbols& s, double rho) {
  if (seq.periods() != kT) throw InvalidInput("the closed-form moments require T = 3");
  MomentVector mv;
  mv.initial = seq.initial();
  const auto& pk = patterns().k[mv.initial.index()][seq.code()];
  const double P = std::exp(rho);
  for (int j = 1; j <= kNumMoments; ++j) {
    const int k = pk[j - 1];
    mv.matched[j - 1] = k;
    if (k == 0) continue;
    mv.values[moment_row(mv.initial, j)] = moment_weights(s, mv.initial, j, P)[k - 1];
  }
  return mv;
}

ValidationReport validate_moments(const MomentSymbols& s, const Eigen::Matrix2d& gamma, double kappa,
                                  double rho, const std::vector<double>& alpha_grid) {
  ValidationReport rep;
  const kernel::Dynamic<double> dyn{gamma(0, 0), gamma(0, 1), gamma(1, 0), gamma(1, 1), rho};
  const double P = std::exp(rho);
  std::array<double, kCodes> lp{};
  for (int init = 0; init < 4; ++init) {
    const Cell c0 = Cell::from_index(init);
    std::array<std::array<double, kMomentSupport>, kNumMoments> m;
    std::array<std::array<std::uint32_t, kMomentSupport>, kNumMoments> codes;
    for (int j = 1; j <= kNumMoments; ++j) {
      m[j - 1] = moment_weights(s, c0, j, P);
      codes[j - 1] = moment_pattern_codes(c0, j);
    }
    for (double alpha : alpha_grid) {
      dyn.log_sequence_probs(alpha, alpha + kappa, c0, kT, lp.data());
      for (int j = 1; j <= kNumMoments; ++j) {
        double e = 0.0, scale = 0.0;
        for (int k = 0; k < kMomentSupport; ++k) {
          const double p = std::exp(lp[codes[j - 1][k]]);
          e += m[j - 1][k] * p;
          scale += std::abs(m[j - 1][k]) * p;
        }
        const double rel = scale > 0.0 ? std::abs(e) / scale : 0.0;
        rep.max_abs = std::max(rep.max_abs, std::abs(e));
        if (rel > rep.max_rel) {
          rep.max_rel = rel;
          rep.worst_moment = j;
          rep.worst_initial = c0;
          rep.worst_alpha = alpha;
        }
      }
    }
  }
  return rep;
}

ValidationReport validate_moments(const Eigen::Matrix2d& gamma, double kappa, double rho,
                                  const std::vector<double>& alpha_grid) {
  return validate_moments(MomentSymbols::from(gamma, kappa), gamma, kappa, rho, alpha_grid);
}

MomentSuiteReport moment_validity_suite(int draws, std::uint64_t seed, bool literal_b) {
  const std::vector<double> grid{-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0};
  MomentSuiteReport out;
  out.draws = draws;
  for (int d = 0; d < draws; ++d) {
    CounterRng rng(seed, static_cast<std::uint64_t>(d), 0, purpose::draw);
    Eigen::Matrix2d g;
    for (int k = 0; k < 4; ++k) g(k / 2, k % 2) = -2.0 + 4.0 * rng.uniform();
    const double kappa = -1.0 + 2.0 * rng.uniform();
    const double rho = -1.0 + 3.0 * rng.uniform();
    auto sym = MomentSymbols::from(g, kappa);
    if (literal_b) sym.B = kappa;
    const auto rep = validate_moments(sym, g, kappa, rho, grid);
    if (d == 0 || rep.max_rel > out.worst.max_rel) {
      out.worst = rep;
      out.worst_gamma = g;
      out.worst_kappa = kappa;
      out.worst_rho = rho;
    }
  }
  return out;
}

MomentProblem::MomentProblem(const Panel& panel, const Eigen::Matrix2d& gamma, double kappa) {
  require_t3(panel);
  n = panel.size();
  if (n == 0) throw NoInformation("empty panel");
  const Vector counts = bin_counts(panel);
  const auto sym = MomentSymbols::from(gamma, kappa);
  U = Vector::Zero(kStackedMoments);
  V = Vector::Zero(kStackedMoments);
  Suu = Suv = Svv = Matrix::Zero(kStackedMoments, kStackedMoments);
  match_fraction = Vector::Zero(kStackedMoments);
  std::array<std::array<std::array<std::pair<double, double>, kMomentSupport>, kNumMoments>, 4> coef;
  for (int init = 0; init < 4; ++init)
    for (int j = 1; j <= kNumMoments; ++j) coef[init][j - 1] = moment_coefficients(sym, Cell::from_index(init), j);
  const double inv_n = 1.0 / static_cast<double>(n);
  Vector u(kStackedMoments), v(kStackedMoments);
  for (int init = 0; init < 4; ++init) {
    for (std::uint32_t code = 0; code < kCodes; ++code) {
      const double c = counts[init * kCodes + code];
      if (c == 0.0) continue;
      u.setZero();
      v.setZero();
      bool any = false;
      for (int j = 1; j <= kNumMoments; ++j) {
        const int k = patterns().k[init][code][j - 1];
        if (k == 0) continue;
        const int r = kNumMoments * init + (j - 1);
        u[r] = coef[init][j - 1][k - 1].first;
        v[r] = coef[init][j - 1][k - 1].second;
        match_fraction[r] += c * inv_n;
        any = true;
      }
      if (!any) continue;
      const double w = c * inv_n;
      U += w * u;
      V += w * v;
      Suu.noalias() += w * u * u.transpose();
      Suv.noalias() += w * u * v.transpose();
      Svv.noalias() += w * v * v.transpose();
    }
  }
}

Matrix MomentProblem::cov(double P) const {
  const Vector m = mean(P);
  return Suu + P * (Suv + Suv.transpose()) + P * P * Svv - m * m.transpose();
}

SampleMoments sample_moments(const Panel& panel, const Eigen::Matrix2d& gamma, double kappa, double rho) {
  const MomentProblem prob(panel, gamma, kappa);
  const double P = std::exp(rho);
  SampleMoments out;
  out.n = prob.n;
  out.mean = prob.mean(P);
  out.cov = prob.cov(P);
  out.cov_of_mean = out.cov / static_cast<double>(prob.n);
  out.match_fraction = prob.match_fraction;
  return out;
}

double GmmObjective::operator()(double P) const {
  const Vector g = U + V * P;
  return g.cwiseProduct(g).dot(w);
}

GmmObjective gmm_objective(const MomentProblem& prob, const GmmOptions& opts) {
  const Vector var = prob.cov(1.0).diagonal();
  GmmObjective obj{prob.U, prob.V, Vector::Zero(kStackedMoments)};
  for (int r = 0; r < kStackedMoments; ++r)
    if (var[r] >= opts.variance_floor) obj.w[r] = 1.0 / var[r];
  return obj;
}

GmmResult fit_gmm_rho(const Panel& panel, const Eigen::Matrix2d& gamma, double kappa, const GmmOptions& opts) {
  if (!(opts.rho_low < opts.rho_high)) throw InvalidInput("rho bounds must satisfy low < high");
  const MomentProblem prob(panel, gamma, kappa);
  const GmmObjective obj = gmm_objective(prob, opts);
  GmmResult res;
  res.weighting = obj.w;
  res.match_fraction = prob.match_fraction;
  res.dropped_moments = static_cast<int>((obj.w.array() == 0.0).count());
  if (res.dropped_moments == kStackedMoments) throw NoInformation("no household matches any moment pattern");
  const Vector wv = obj.w.cwiseProduct(prob.V);
  const double a = wv.dot(prob.V);
  const double b = wv.dot(prob.U);
  if (!(a > 0.0)) throw NoInformation("moments carry no information about rho");
  res.exp_rho_hat = -b / a;
  const double lo = std::exp(opts.rho_low), hi = std::exp(opts.rho_high);
  double P = res.exp_rho_hat;
  if (!(P >= lo)) {
    P = lo;
    res.boundary_flag = true;
  } else if (P > hi) {
    P = hi;
    res.boundary_flag = true;
  }
  res.rho_hat = res.boundary_flag ? (P == lo ? opts.rho_low : opts.rho_high) : std::log(P);
  res.objective = obj(P);
  const Matrix omega = prob.cov(P);
  const double meat = wv.dot(omega * wv);
  const double se_P = std::sqrt(std::max(meat, 0.0) / static_cast<double>(prob.n)) / a;
  res.se = se_P / P;
  return res;
}

Vector TwoStepResult::estimates() const {
  Vector out(6);
  out.head(5) = first.estimates;
  out[5] = second.rho_hat;
  return out;
}

std::vector<std::string> TwoStepResult::names() {
  return {"gamma11", "gamma12", "gamma21", "gamma22", "kappa", "rho"};
}

TwoStepResult fit_two_step(const Panel& panel, const GmmOptions& opts) {
  TwoStepResult r;
  r.first = fit_cmle(panel, true);
  if (!r.first.converged) throw NoInformation("first stage did not converge: " + r.first.message);
  Eigen::Matrix2d g;
  g << r.first.estimates[0], r.first.estimates[1], r.first.estimates[2], r.first.estimates[3];
  r.second = fit_gmm_rho(panel, g, r.first.estimates[4], opts);
  return r;
}

}  // namespace bivlogit
