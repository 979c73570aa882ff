#include "bivlogit/discovery.hpp"

#include "bivlogit/error.hpp"
#include "bivlogit/random.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>
#include <Eigen/SVD>

#include <cmath>
#include <sstream>

namespace bivlogit {

void CountConfig::validate() const {
  if (T < 1 || T > 6) throw InvalidInput("moment counting supports 1 <= T <= 6");
  if (param_draws < 1) throw InvalidInput("param_draws must be positive");
  if (alpha_draws != 0 && alpha_draws < 4 * static_cast<int>(num_continuations(T)))
    throw InvalidInput("alpha_draws must be at least 4 * 4^T");
  if (!(rank_tol > 0.0 && rank_tol < 1.0)) throw InvalidInput("rank_tol must lie in (0, 1)");
}

std::string CountReport::table_row() const {
  std::ostringstream os;
  os << n_tot << " / " << n_para << " / " << n_rho;
  return os.str();
}

namespace {

// ---- real-valued rows --------------------------------------------------------

// Log probabilities of all continuations given per-period covariate offsets.
template <class S>
void log_row(const std::array<S, 4>& g, const S& rho, const S& a1, const S& a2, const std::vector<S>& o1,
             const std::vector<S>& o2, Cell initial, int T, S* out) {
  std::vector<std::array<std::array<S, 4>, 4>> table(T);
  for (int t = 0; t < T; ++t)
    for (int s = 0; s < 4; ++s) {
      const Cell prev = Cell::from_index(s);
      const S z1 = a1 + o1[t] + g[0] * prev.y1 + g[1] * prev.y2;
      const S z2 = a2 + o2[t] + g[2] * prev.y1 + g[3] * prev.y2;
      table[t][s] = kernel::log_cells(z1, z2, rho);
    }
  const std::uint32_t n = num_continuations(T);
  for (std::uint32_t code = 0; code < n; ++code) {
    S lp = S(0);
    int prev = initial.index();
    for (int t = 1; t <= T; ++t) {
      const int c = static_cast<int>((code >> (2 * (T - t))) & 3u);
      lp += table[t - 1][prev][c];
      prev = c;
    }
    out[code] = lp;
  }
}

std::vector<double> offsets(const Matrix& x, const Vector& beta, int T) {
  std::vector<double> o(T, 0.0);
  if (beta.size() == 0) return o;
  if (x.rows() != T || x.cols() != beta.size()) throw InvalidInput("covariate path does not match T and beta");
  for (int t = 0; t < T; ++t) o[t] = x.row(t).dot(beta);
  return o;
}

template <bool Parallel>
Matrix probability_matrix_impl(const CountConfig& config, const CommonParams& params,
                               const std::vector<FixedEffects>& draws, const CovariatePath& xpath) {
  config.validate();
  params.validate();
  if (config.with_covariates != (params.covariate_dim() > 0))
    throw InvalidInput("covariate flag does not match the parameter vector");
  const int T = config.T;
  const std::uint32_t n = num_continuations(T);
  const auto o1 = offsets(xpath.x1, params.beta1, T);
  const auto o2 = offsets(xpath.x2, params.beta2, T);
  const std::array<double, 4> g{params.gamma(0, 0), params.gamma(0, 1), params.gamma(1, 0), params.gamma(1, 1)};
  Matrix M(static_cast<Eigen::Index>(draws.size()), n);
  const auto rows = static_cast<std::ptrdiff_t>(draws.size());
  auto fill = [&](std::ptrdiff_t r) {
    std::vector<double> lp(n);
    const auto& fe = draws[r];
    const double a2 = config.restricted ? fe.alpha1 + params.kappa : fe.alpha2;
    log_row<double>(g, params.rho, fe.alpha1, a2, o1, o2, config.initial, T, lp.data());
    for (std::uint32_t c = 0; c < n; ++c) M(r, c) = std::exp(lp[c]);
  };
  if constexpr (Parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < rows; ++r) fill(r);
  } else {
    for (std::ptrdiff_t r = 0; r < rows; ++r) fill(r);
  }
  return M;
}

// ---- prime field -------------------------------------------------------------

constexpr std::uint64_t kPrime = (std::uint64_t{1} << 61) - 1;

std::uint64_t addm(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a + b;
  return s >= kPrime ? s - kPrime : s;
}

std::uint64_t subm(std::uint64_t a, std::uint64_t b) { return a >= b ? a - b : a + kPrime - b; }

std::uint64_t mulm(std::uint64_t a, std::uint64_t b) {
  const unsigned __int128 z = static_cast<unsigned __int128>(a) * b;
  const std::uint64_t s = static_cast<std::uint64_t>(z & kPrime) + static_cast<std::uint64_t>(z >> 61);
  return s >= kPrime ? s - kPrime : s;
}

std::uint64_t powm(std::uint64_t a, std::uint64_t e) {
  std::uint64_t r = 1;
  while (e) {
    if (e & 1) r = mulm(r, a);
    a = mulm(a, a);
    e >>= 1;
  }
  return r;
}

std::uint64_t invm(std::uint64_t a) { return powm(a, kPrime - 2); }

class FieldRng {
 public:
  explicit FieldRng(std::uint64_t seed) : rng_(seed, 0, 0, purpose::draw) {}
  std::uint64_t next() { return 2 + rng_.below(kPrime - 3); }

 private:
  CounterRng rng_;
};

// A parameter point with every exponentiated quantity replaced by a field element.
struct FieldPoint {
  std::array<std::uint64_t, 4> G{};
  std::uint64_t P = 1, B = 1;
  std::vector<std::uint64_t> E1, E2;  // exp(x_t beta) per period

  static FieldPoint random(FieldRng& rng, int T, bool covariates) {
    FieldPoint p;
    for (auto& g : p.G) g = rng.next();
    p.P = rng.next();
    p.B = rng.next();
    p.E1.assign(T, 1);
    p.E2.assign(T, 1);
    if (covariates)
      for (int t = 0; t < T; ++t) {
        p.E1[t] = rng.next();
        p.E2[t] = rng.next();
      }
    return p;
  }
};

void field_row(const FieldPoint& pt, std::uint64_t A1, std::uint64_t A2, Cell initial, int T,
               std::vector<std::uint64_t>& out) {
  // weight[t][prev][c] already divided by the period's normalizer
  std::vector<std::array<std::array<std::uint64_t, 4>, 4>> w(T);
  for (int t = 0; t < T; ++t)
    for (int s = 0; s < 4; ++s) {
      const Cell prev = Cell::from_index(s);
      std::uint64_t x1 = mulm(A1, pt.E1[t]), x2 = mulm(A2, pt.E2[t]);
      if (prev.y1) {
        x1 = mulm(x1, pt.G[0]);
        x2 = mulm(x2, pt.G[2]);
      }
      if (prev.y2) {
        x1 = mulm(x1, pt.G[1]);
        x2 = mulm(x2, pt.G[3]);
      }
      const std::uint64_t x12 = mulm(mulm(x1, x2), pt.P);
      const std::uint64_t den = addm(addm(1, x1), addm(x2, x12));
      const std::uint64_t inv = invm(den);
      w[t][s] = {inv, mulm(x2, inv), mulm(x1, inv), mulm(x12, inv)};
    }
  const std::uint32_t n = num_continuations(T);
  out.resize(n);
  for (std::uint32_t code = 0; code < n; ++code) {
    std::uint64_t v = 1;
    int prev = initial.index();
    for (int t = 1; t <= T; ++t) {
      const int c = static_cast<int>((code >> (2 * (T - t))) & 3u);
      v = mulm(v, w[t - 1][prev][c]);
      prev = c;
    }
    out[code] = v;
  }
}

// Row-echelon basis over the prime field, grown one row at a time.
class EchelonBasis {
 public:
  explicit EchelonBasis(std::size_t cols) : cols_(cols) {}

  std::size_t rank() const { return rows_.size(); }

  bool add(std::vector<std::uint64_t> row) {
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      const std::size_t p = pivots_[i];
      const std::uint64_t f = row[p];
      if (f == 0) continue;
      const auto& b = rows_[i];
      for (std::size_t j = p; j < cols_; ++j)
        if (b[j]) row[j] = subm(row[j], mulm(f, b[j]));
    }
    std::size_t p = 0;
    while (p < cols_ && row[p] == 0) ++p;
    if (p == cols_) return false;
    const std::uint64_t inv = invm(row[p]);
    for (std::size_t j = p; j < cols_; ++j) row[j] = mulm(row[j], inv);
    rows_.push_back(std::move(row));
    pivots_.push_back(p);
    return true;
  }

 private:
  std::size_t cols_;
  std::vector<std::vector<std::uint64_t>> rows_;
  std::vector<std::size_t> pivots_;
};

constexpr int kRowStall = 3;
constexpr int kDrawStall = 3;
constexpr int kMaxDraws = 400;

// Adds fixed-effect rows at one parameter point until kRowStall consecutive rows
// leave the rank unchanged.
void add_point(EchelonBasis& basis, const FieldPoint& pt, const CountConfig& cfg, FieldRng& rng) {
  std::vector<std::uint64_t> row;
  int fails = 0;
  while (fails < kRowStall) {
    const std::uint64_t A1 = rng.next();
    const std::uint64_t A2 = cfg.restricted ? mulm(A1, pt.B) : rng.next();
    field_row(pt, A1, A2, cfg.initial, cfg.T, row);
    fails = basis.add(row) ? 0 : fails + 1;
  }
}

struct ExactCounts {
  int n_tot, n_para, n_rho, para_draws, rho_draws;
  friend bool operator==(const ExactCounts& a, const ExactCounts& b) {
    return a.n_tot == b.n_tot && a.n_para == b.n_para && a.n_rho == b.n_rho;
  }
};

template <class Vary>
int stack_draws(EchelonBasis& basis, const CountConfig& cfg, FieldRng& rng, Vary&& next_point) {
  int draws = 1, quiet = 0;
  while ((draws < cfg.param_draws || quiet < kDrawStall) && draws < kMaxDraws) {
    const std::size_t before = basis.rank();
    add_point(basis, next_point(), cfg, rng);
    ++draws;
    quiet = basis.rank() == before ? quiet + 1 : 0;
  }
  if (draws >= kMaxDraws) throw AmbiguousRank("stacked rank did not stabilize");
  return draws;
}

ExactCounts exact_counts(const CountConfig& cfg, std::uint64_t seed) {
  const std::size_t N = num_continuations(cfg.T);
  FieldRng rng(seed);
  const FieldPoint base = FieldPoint::random(rng, cfg.T, cfg.with_covariates);
  EchelonBasis single(N);
  add_point(single, base, cfg, rng);
  const int r0 = static_cast<int>(single.rank());

  EchelonBasis all = single;
  const int para_draws = stack_draws(all, cfg, rng, [&] { return FieldPoint::random(rng, cfg.T, cfg.with_covariates); });
  EchelonBasis rho = single;
  const int rho_draws = stack_draws(rho, cfg, rng, [&] {
    FieldPoint p = base;
    p.P = rng.next();
    return p;
  });
  return {static_cast<int>(N) - r0, static_cast<int>(all.rank()) - r0, static_cast<int>(rho.rank()) - r0,
          para_draws, rho_draws};
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

Matrix probability_matrix(const CountConfig& config, const CommonParams& params,
                          const std::vector<FixedEffects>& alpha_draws, const CovariatePath& xpath) {
  return probability_matrix_impl<true>(config, params, alpha_draws, xpath);
}

Matrix probability_matrix_serial(const CountConfig& config, const CommonParams& params,
                                 const std::vector<FixedEffects>& alpha_draws, const CovariatePath& xpath) {
  return probability_matrix_impl<false>(config, params, alpha_draws, xpath);
}

std::vector<FixedEffects> draw_fixed_effects(const CountConfig& config, double kappa, int n, std::uint64_t seed) {
  CounterRng rng(seed, 1, 0, purpose::alpha);
  std::vector<FixedEffects> out(n);
  const double r = config.alpha_range;
  for (auto& fe : out) {
    fe.alpha1 = -r + 2.0 * r * rng.uniform();
    fe.alpha2 = config.restricted ? fe.alpha1 + kappa : -r + 2.0 * r * rng.uniform();
  }
  return out;
}

CommonParams generic_params(const CountConfig& config, std::uint64_t seed) {
  CounterRng rng(seed, 2, 0, purpose::draw);
  auto u = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
  CommonParams p;
  p.gamma << u(-1.5, 1.5), u(-1.5, 1.5), u(-1.5, 1.5), u(-1.5, 1.5);
  p.rho = u(-1.0, 2.0);
  p.kappa = u(-1.0, 1.0);
  if (config.with_covariates) {
    p.beta1 = Vector::Constant(1, u(-1.0, 1.0));
    p.beta2 = Vector::Constant(1, u(-1.0, 1.0));
  }
  return p;
}

CovariatePath generic_covariates(const CountConfig& config, std::uint64_t seed) {
  CovariatePath x;
  if (!config.with_covariates) return x;
  CounterRng rng(seed, 3, 0, purpose::covariate);
  x.x1.resize(config.T, 1);
  x.x2.resize(config.T, 1);
  for (int t = 0; t < config.T; ++t) {
    x.x1(t, 0) = rng.normal();
    x.x2(t, 0) = rng.normal();
  }
  return x;
}

CountReport count_moments(const CountConfig& config, std::uint64_t seed) {
  config.validate();
  const ExactCounts a = exact_counts(config, mix(seed));
  const ExactCounts b = exact_counts(config, mix(seed ^ 0x5DEECE66Dull));
  if (!(a == b)) {
    std::ostringstream os;
    os << "independent exact rank computations disagree (" << a.n_tot << "/" << a.n_para << "/" << a.n_rho
       << " vs " << b.n_tot << "/" << b.n_para << "/" << b.n_rho << "); rerun with more draws";
    throw AmbiguousRank(os.str());
  }
  CountReport rep;
  rep.n_tot = a.n_tot;
  rep.n_para = a.n_para;
  rep.n_rho = a.n_rho;
  rep.para_draws = a.para_draws;
  rep.rho_draws = a.rho_draws;

  if (config.svd_diagnostics) {
    const CommonParams params = generic_params(config, seed);
    const CovariatePath xpath = generic_covariates(config, seed);
    const Matrix M = probability_matrix(config, params,
                                        draw_fixed_effects(config, params.kappa, config.default_alpha_draws(), seed), xpath);
    const Eigen::BDCSVD<Matrix> svd(M);
    const Vector sv = svd.singularValues() / svd.singularValues()[0];
    const int N = static_cast<int>(sv.size());
    const int r = N - rep.n_tot;
    rep.numeric_rank = static_cast<int>((sv.array() > config.rank_tol).count());
    rep.sv_last_signal = r > 0 ? sv[r - 1] : 0.0;
    rep.sv_first_null = r < N ? sv[r] : 0.0;
    rep.numeric_agrees = rep.numeric_rank == r;
  }
  return rep;
}

Matrix extract_moment_basis(const CountConfig& config, const CommonParams& params, std::uint64_t seed,
                            const CovariatePath& xpath) {
  using Real = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<50>, boost::multiprecision::et_off>;
  using MatrixR = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
  config.validate();
  params.validate();
  if (config.with_covariates != (params.covariate_dim() > 0))
    throw InvalidInput("covariate flag does not match the parameter vector");
  const int T = config.T;
  const std::uint32_t n = num_continuations(T);
  const auto draws = draw_fixed_effects(config, params.kappa, config.default_alpha_draws(), seed);
  const auto od1 = offsets(xpath.x1, params.beta1, T);
  const auto od2 = offsets(xpath.x2, params.beta2, T);
  const std::vector<Real> o1(od1.begin(), od1.end()), o2(od2.begin(), od2.end());
  const std::array<Real, 4> g{Real(params.gamma(0, 0)), Real(params.gamma(0, 1)), Real(params.gamma(1, 0)),
                              Real(params.gamma(1, 1))};
  const Real rho(params.rho);
  MatrixR A(static_cast<Eigen::Index>(draws.size()), n);
  std::vector<Real> lp(n);
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(draws.size()); ++r) {
    const Real a1(draws[r].alpha1);
    const Real a2 = config.restricted ? a1 + Real(params.kappa) : Real(draws[r].alpha2);
    log_row<Real>(g, rho, a1, a2, o1, o2, config.initial, T, lp.data());
    for (std::uint32_t c = 0; c < n; ++c) A(r, c) = exp(lp[c]);
  }
  const Eigen::JacobiSVD<MatrixR> svd(A, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const Real top = sv[0];
  int rank = 0;
  while (rank < sv.size() && sv[rank] / top > Real(1e-30)) ++rank;
  if (rank > 0 && sv[rank - 1] / top < Real(1e-24))
    throw AmbiguousRank("no clear spectral gap in the extended-precision decomposition");
  const int nulls = static_cast<int>(n) - rank;
  if (nulls == 0) throw NoInformation("the probability matrix has full column rank");
  Matrix basis(n, nulls);
  for (int j = 0; j < nulls; ++j)
    for (std::uint32_t i = 0; i < n; ++i) basis(i, j) = static_cast<double>(svd.matrixV()(i, rank + j));
  return basis;
}

}  // namespace bivlogit
