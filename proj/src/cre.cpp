#include "bivlogit/cre.hpp"

#include "bivlogit/error.hpp"
#include "bivlogit/parallel.hpp"
#include "bivlogit/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace bivlogit {

void CREParams::validate() const {
  common.validate();
  for (double d : delta)
    if (!std::isfinite(d)) throw InvalidInput("delta must be finite");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidInput("sigma must be >= 0");
}

Vector CREParams::pack() const {
  Vector th(kCreDim);
  th << common.gamma(0, 0), common.gamma(0, 1), common.gamma(1, 0), common.gamma(1, 1), common.rho,
      common.kappa, delta[0], delta[1], delta[2], delta[3], std::log(sigma);
  return th;
}

CREParams CREParams::unpack(const Vector& th) {
  if (th.size() != kCreDim) throw InvalidInput("CRE parameter vector must have 11 entries");
  CREParams p;
  p.common = CommonParams::dynamic(th[0], th[1], th[2], th[3], th[4], th[5]);
  p.delta = {th[6], th[7], th[8], th[9]};
  p.sigma = std::exp(th[kCreLogSigma]);
  return p;
}

std::vector<std::string> CREParams::names() {
  return {"gamma11", "gamma12", "gamma21", "gamma22", "rho", "kappa",
          "delta0",  "delta1",  "delta2",  "delta3",  "log_sigma"};
}

double cre_household_loglik(const CREParams& cre, const PairSequence& seq, const QuadratureRule& quad) {
  cre.validate();
  if (cre.common.covariate_dim() > 0) throw InvalidInput("the CRE likelihood has no covariates");
  const double mu = cre.mean(seq.initial());
  if (cre.sigma == 0.0)
    return sequence_log_prob(cre.common, FixedEffects::restricted(mu, cre.common.kappa), {}, seq);
  double m = -std::numeric_limits<double>::infinity();
  std::vector<double> l(quad.order);
  for (int q = 0; q < quad.order; ++q) {
    const double a = mu + cre.sigma * quad.nodes[q];
    l[q] = std::log(quad.weights[q]) +
           sequence_log_prob(cre.common, FixedEffects::restricted(a, cre.common.kappa), {}, seq);
    m = std::max(m, l[q]);
  }
  double s = 0.0;
  for (double v : l) s += std::exp(v - m);
  return m + std::log(s);
}

CreProblem::CreProblem(int T, std::vector<double> weights, QuadratureRule quad)
    : T_(T), w_(std::move(weights)), quad_(std::move(quad)) {
  if (T < 1 || T > 8) throw InvalidInput("CRE likelihood supports 1 <= T <= 8");
  if (w_.size() != 4 * static_cast<std::size_t>(num_continuations(T)))
    throw InvalidInput("weight vector must cover 4 * 4^T sequences");
  for (double v : w_) {
    if (!(v >= 0.0)) throw InvalidInput("weights must be non-negative");
    total_ += v;
  }
  if (!(total_ > 0.0)) throw NoInformation("no observations");
}

CreProblem CreProblem::from_panel(const Panel& panel, const QuadratureRule& quad) {
  if (panel.empty()) throw NoInformation("empty panel");
  if (panel.covariate_dim() > 0) throw InvalidInput("the CRE likelihood has no covariates");
  const int T = panel.periods();
  const std::size_t N = num_continuations(T);
  auto fn = [&](std::size_t b, std::size_t e, Vector& c) {
    for (std::size_t i = b; i < e; ++i) {
      const auto& s = panel.households[i].seq;
      c[static_cast<Eigen::Index>(s.initial().index() * N + s.code())] += 1.0;
    }
  };
  const Vector counts = parallel::chunked_reduce(panel.size(), 8192, Vector::Zero(4 * N).eval(), fn);
  return CreProblem(T, std::vector<double>(counts.data(), counts.data() + counts.size()), quad);
}

void CreProblem::initial_block(int init, const Vector& th, double& f, Vector* grad) const {
  const std::uint32_t N = num_continuations(T_);
  const double* w = w_.data() + static_cast<std::size_t>(init) * N;
  bool any = false;
  for (std::uint32_t c = 0; c < N; ++c) any = any || w[c] > 0.0;
  if (!any) return;

  const Cell c0 = Cell::from_index(init);
  const double g11 = th[0], g12 = th[1], g21 = th[2], g22 = th[3], rho = th[4], kappa = th[5];
  const double mu = th[6] + th[7] * c0.y1 + th[8] * c0.y2 + th[9] * c0.y1 * c0.y2;
  const double sigma = std::exp(th[kCreLogSigma]);
  const int Q = quad_.order;
  constexpr int D = 7;  // g11, g12, g21, g22, rho, alpha1, alpha2

  std::vector<double> lq(static_cast<std::size_t>(Q) * N);
  std::vector<double> dq(grad ? static_cast<std::size_t>(Q) * N * D : 0);
  std::array<std::array<double, 4>, 4> lc;
  std::array<std::array<std::array<double, D>, 4>, 4> dc;
  for (int q = 0; q < Q; ++q) {
    const double a1 = mu + sigma * quad_.nodes[q];
    const double a2 = a1 + kappa;
    for (int s = 0; s < 4; ++s) {
      const Cell p = Cell::from_index(s);
      const double z1 = a1 + g11 * p.y1 + g12 * p.y2;
      const double z2 = a2 + g21 * p.y1 + g22 * p.y2;
      lc[s] = kernel::log_cells(z1, z2, rho);
      if (!grad) continue;
      const double p11 = std::exp(lc[s][3]);
      const double q1 = std::exp(lc[s][2]) + p11, q2 = std::exp(lc[s][1]) + p11;
      for (int c = 0; c < 4; ++c) {
        const Cell y = Cell::from_index(c);
        const double r1 = y.y1 - q1, r2 = y.y2 - q2;
        dc[s][c] = {r1 * p.y1, r1 * p.y2, r2 * p.y1, r2 * p.y2, y.y1 * y.y2 - p11, r1, r2};
      }
    }
    const double lw = std::log(quad_.weights[q]);
    for (std::uint32_t code = 0; code < N; ++code) {
      if (w[code] == 0.0) continue;
      double lp = lw;
      std::array<double, D> d{};
      int prev = init;
      for (int t = 1; t <= T_; ++t) {
        const int c = static_cast<int>((code >> (2 * (T_ - t))) & 3u);
        lp += lc[prev][c];
        if (grad)
          for (int k = 0; k < D; ++k) d[k] += dc[prev][c][k];
        prev = c;
      }
      lq[static_cast<std::size_t>(q) * N + code] = lp;
      if (grad) std::copy(d.begin(), d.end(), dq.begin() + (static_cast<std::size_t>(q) * N + code) * D);
    }
  }

  const std::array<double, 4> dmu{1.0, static_cast<double>(c0.y1), static_cast<double>(c0.y2),
                                  static_cast<double>(c0.y1 * c0.y2)};
  for (std::uint32_t code = 0; code < N; ++code) {
    if (w[code] == 0.0) continue;
    double m = -std::numeric_limits<double>::infinity();
    for (int q = 0; q < Q; ++q) m = std::max(m, lq[static_cast<std::size_t>(q) * N + code]);
    double s = 0.0;
    for (int q = 0; q < Q; ++q) s += std::exp(lq[static_cast<std::size_t>(q) * N + code] - m);
    f += w[code] * (m + std::log(s));
    if (!grad) continue;
    auto& g = *grad;
    for (int q = 0; q < Q; ++q) {
      const std::size_t at = static_cast<std::size_t>(q) * N + code;
      const double pw = w[code] * std::exp(lq[at] - m) / s;
      const double* d = dq.data() + at * D;
      for (int k = 0; k < 5; ++k) g[k] += pw * d[k];
      g[5] += pw * d[6];
      const double da = d[5] + d[6];
      for (int k = 0; k < 4; ++k) g[6 + k] += pw * da * dmu[k];
      g[kCreLogSigma] += pw * da * sigma * quad_.nodes[q];
    }
  }
}

namespace {

struct Acc {
  double f = 0.0;
  Vector g;
  Acc& operator+=(const Acc& o) {
    f += o.f;
    if (g.size() > 0) g += o.g;
    return *this;
  }
};

}  // namespace

template <bool Parallel>
double CreProblem::loglik_impl(const Vector& theta, Vector* grad) const {
  if (theta.size() != kCreDim) throw InvalidInput("CRE parameter vector must have 11 entries");
  Acc zero;
  if (grad) zero.g = Vector::Zero(kCreDim);
  auto fn = [&](std::size_t b, std::size_t e, Acc& a) {
    for (std::size_t i = b; i < e; ++i) initial_block(static_cast<int>(i), theta, a.f, grad ? &a.g : nullptr);
  };
  const Acc tot = Parallel ? parallel::chunked_reduce(4, 1, zero, fn) : parallel::chunked_reduce_serial(4, 1, zero, fn);
  if (grad) *grad = tot.g;
  return tot.f;
}

double CreProblem::loglik(const Vector& theta, Vector* grad) const { return loglik_impl<true>(theta, grad); }

double CreProblem::loglik_serial(const Vector& theta, Vector* grad) const {
  return loglik_impl<false>(theta, grad);
}

FitResult fit_cre(const CreProblem& prob, const CreFitOptions& opts) {
  Vector start = opts.start.size() == kCreDim ? opts.start : Vector::Zero(kCreDim);
  auto fixed = opts.fixed;
  if (opts.sigma_zero) fixed[kCreLogSigma] = true;
  std::vector<int> free;
  for (int i = 0; i < kCreDim; ++i)
    if (!fixed[i]) free.push_back(i);
  const auto nf = static_cast<Eigen::Index>(free.size());
  auto expand = [&](const Vector& x) {
    Vector th = start;
    for (Eigen::Index i = 0; i < nf; ++i) th[free[i]] = x[i];
    return th;
  };
  const double scale = prob.total_weight();
  ObjectiveFn obj = [&](const Vector& x, Vector* g) {
    Vector full;
    const double f = prob.loglik(expand(x), g ? &full : nullptr);
    if (g) {
      g->resize(nf);
      for (Eigen::Index i = 0; i < nf; ++i) (*g)[i] = -full[free[i]] / scale;
    }
    return -f / scale;
  };
  Vector x0(nf);
  for (Eigen::Index i = 0; i < nf; ++i) x0[i] = start[free[i]];
  const auto res = minimize_bfgs(obj, x0, opts.optim);

  FitResult fit;
  fit.names = CREParams::names();
  fit.estimates = expand(res.x);
  fit.loglik = -res.value * scale;
  fit.converged = res.converged;
  fit.separation = res.separation;
  fit.iterations = res.iterations;
  fit.message = res.message;
  const Matrix info_free = finite_difference_hessian(obj, res.x, 1e-5) * scale;
  fit.hessian = Matrix::Zero(kCreDim, kCreDim);
  fit.covariance = Matrix::Zero(kCreDim, kCreDim);
  for (Eigen::Index i = 0; i < nf; ++i)
    for (Eigen::Index j = 0; j < nf; ++j) fit.hessian(free[i], free[j]) = info_free(i, j);
  try {
    const Matrix cov = invert_information(info_free);
    for (Eigen::Index i = 0; i < nf; ++i)
      for (Eigen::Index j = 0; j < nf; ++j) fit.covariance(free[i], free[j]) = cov(i, j);
  } catch (const InvalidInput&) {
    fit.covariance.setConstant(NAN);
    fit.converged = false;
    fit.message += "; singular information matrix";
  }
  fit.diagnostics["sigma"] = opts.sigma_zero ? 0.0 : std::exp(fit.estimates[kCreLogSigma]);
  fit.diagnostics["quadrature_order"] = prob.quadrature().order;
  return fit;
}

FitResult fit_cre(const Panel& panel, const CreFitOptions& opts) {
  QuadratureRule quad;
  if (opts.sigma_zero) {
    quad.order = 1;
    quad.nodes = Vector::Zero(1);
    quad.weights = Vector::Ones(1);
  } else {
    quad = QuadratureRule::gauss_hermite(opts.order);
  }
  auto fit = fit_cre(CreProblem::from_panel(panel, quad), opts);
  fit.diagnostics["households"] = static_cast<double>(panel.size());
  return fit;
}

std::vector<double> plim_weights(const CommonParams& truth, const HeterogeneityDist& dist, int T,
                                 const QuadratureRule& quad) {
  const std::uint32_t N = num_continuations(T);
  std::vector<double> w(4 * static_cast<std::size_t>(N), 0.0);
  const kernel::Dynamic<double> dyn{truth.gamma(0, 0), truth.gamma(0, 1), truth.gamma(1, 0), truth.gamma(1, 1),
                                    truth.rho};
  std::vector<double> lp(N);
  for (int init = 0; init < 4; ++init) {
    const Cell c0 = Cell::from_index(init);
    std::vector<Atom> atoms;
    if (dist.is_normal()) {
      for (int q = 0; q < quad.order; ++q)
        atoms.push_back({dist.mean(c0) + dist.sigma() * quad.nodes[q], quad.weights[q]});
    } else {
      atoms = dist.atoms(c0);
    }
    for (const auto& a : atoms) {
      if (a.mass == 0.0) continue;
      dyn.log_sequence_probs(a.value, a.value + truth.kappa, c0, T, lp.data());
      for (std::uint32_t c = 0; c < N; ++c) w[init * N + c] += 0.25 * a.mass * std::exp(lp[c]);
    }
  }
  return w;
}

std::string PlimResult::table_row() const {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%.2f %.2f %.2f %.2f %.2f %.2f", estimates[0], estimates[1], estimates[2],
                estimates[3], estimates[4], estimates[5]);
  std::string s(buf);
  // avoid printing "-0.00"
  for (std::size_t p = s.find("-0.00"); p != std::string::npos; p = s.find("-0.00", p))
    if (p + 5 == s.size() || s[p + 5] == ' ') s.erase(p, 1);
    else ++p;
  return s;
}

namespace {

Vector plim_start(const CommonParams& truth, const HeterogeneityDist& dist) {
  std::array<double, 4> m{};
  double var = 0.0;
  for (int init = 0; init < 4; ++init) {
    const Cell c = Cell::from_index(init);
    m[init] = dist.mean(c);
    if (dist.is_normal()) {
      var += 0.25 * dist.sigma() * dist.sigma();
    } else {
      for (const auto& a : dist.atoms(c)) var += 0.25 * a.mass * (a.value - m[init]) * (a.value - m[init]);
    }
  }
  CREParams p;
  p.common = truth;
  p.delta = {m[0], m[2] - m[0], m[1] - m[0], m[3] - m[2] - m[1] + m[0]};
  p.sigma = std::max(std::sqrt(var), 0.1);
  return p.pack();
}

}  // namespace

PlimResult cre_plim(const CommonParams& truth, const HeterogeneityDist& dist, int T, const PlimOptions& opts) {
  truth.validate();
  if (truth.covariate_dim() > 0) throw InvalidInput("plim analysis has no covariates");
  if (opts.starts < 1) throw InvalidInput("at least one start is required");
  const Vector base = plim_start(truth, dist);
  std::vector<Vector> starts{base};
  for (int s = 1; s < opts.starts; ++s) {
    CounterRng rng(opts.seed, static_cast<std::uint64_t>(s), 0, purpose::start);
    Vector v = base;
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += rng.uniform() - 0.5;
    starts.push_back(v);
  }

  PlimResult prev;
  bool have_prev = false;
  for (int order = opts.order; order <= opts.max_order; order *= 2) {
    const auto quad = QuadratureRule::gauss_hermite(order);
    const CreProblem prob(T, plim_weights(truth, dist, T, quad), quad);
    std::vector<FitResult> fits(starts.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(starts.size()); ++s) {
      CreFitOptions fo;
      fo.start = starts[s];
      fo.order = order;
      fits[s] = fit_cre(prob, fo);
    }
    PlimResult cur;
    cur.order = order;
    cur.objective = -std::numeric_limits<double>::infinity();
    for (const auto& f : fits) {
      cur.start_objectives.push_back(f.loglik);
      if (f.converged && f.loglik > cur.objective) {
        cur.objective = f.loglik;
        cur.estimates = f.estimates;
        cur.converged = true;
      }
    }
    if (!cur.converged) return cur;
    if (have_prev && (cur.estimates - prev.estimates).lpNorm<Eigen::Infinity>() < opts.tol) return cur;
    prev = cur;
    have_prev = true;
  }
  prev.converged = false;
  return prev;
}

}  // namespace bivlogit
