#include "bivlogit/simulate.hpp"

#include "bivlogit/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace bivlogit {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

std::array<std::vector<Atom>, 4> same_for_all(std::vector<Atom> atoms) {
  return {atoms, atoms, atoms, atoms};
}

std::array<std::vector<Atom>, 4> symmetric_by_y1(double var0, double var1) {
  std::array<std::vector<Atom>, 4> out;
  for (int i = 0; i < 4; ++i) {
    const double v = std::sqrt(Cell::from_index(i).y1 ? var1 : var0);
    out[i] = {{-v, 0.5}, {v, 0.5}};
  }
  return out;
}

}  // namespace

double discrete_normal_outer_point() {
  // Solve 2 P(Z < -1.5) d^2 + 2 (P(0.5 < Z < 1.5)) = 1 for d.
  const double tail = normal_cdf(-1.5);
  const double inner = normal_cdf(1.5) - normal_cdf(0.5);
  return std::sqrt((1.0 - 2.0 * inner) / (2.0 * tail));
}

HeterogeneityDist HeterogeneityDist::normal_linear(double d0, double d1, double d2, double d3,
                                                   double sigma) {
  HeterogeneityDist h;
  h.kind_ = Kind::normal_linear;
  h.delta_ = {d0, d1, d2, d3};
  h.sigma_ = sigma;
  h.validate();
  return h;
}

HeterogeneityDist HeterogeneityDist::correctly_specified() {
  return normal_linear(-1.0, 1.0, 1.0, 0.0, 1.0);
}

HeterogeneityDist HeterogeneityDist::discrete_approx_normal() {
  const double d = discrete_normal_outer_point();
  const double tail = normal_cdf(-1.5);
  const double mid = normal_cdf(1.5) - normal_cdf(0.5);
  const double centre = normal_cdf(0.5) - normal_cdf(-0.5);
  HeterogeneityDist h;
  h.kind_ = Kind::discrete_approx_normal;
  h.atoms_ = same_for_all({{-d, tail}, {-1.0, mid}, {0.0, centre}, {1.0, mid}, {d, tail}});
  h.validate();
  return h;
}

HeterogeneityDist HeterogeneityDist::discrete_asymmetric() {
  HeterogeneityDist h;
  h.kind_ = Kind::discrete_asymmetric;
  h.atoms_ = same_for_all({{3.0, 0.25}, {-1.0, 0.75}});
  h.validate();
  return h;
}

HeterogeneityDist HeterogeneityDist::heteroskedastic() {
  HeterogeneityDist h;
  h.kind_ = Kind::heteroskedastic;
  h.atoms_ = symmetric_by_y1(2.0, 4.0);
  h.validate();
  return h;
}

HeterogeneityDist HeterogeneityDist::very_heteroskedastic() {
  HeterogeneityDist h;
  h.kind_ = Kind::very_heteroskedastic;
  h.atoms_ = symmetric_by_y1(0.0, 5.0);
  h.validate();
  return h;
}

HeterogeneityDist HeterogeneityDist::custom_discrete(std::array<std::vector<Atom>, 4> atoms) {
  HeterogeneityDist h;
  h.kind_ = Kind::custom_discrete;
  h.atoms_ = std::move(atoms);
  h.validate();
  return h;
}

HeterogeneityDist HeterogeneityDist::degenerate(double value) {
  HeterogeneityDist h;
  h.kind_ = Kind::degenerate;
  h.atoms_ = same_for_all({{value, 1.0}});
  h.validate();
  return h;
}

std::vector<std::string> HeterogeneityDist::names() {
  return {"correct", "discrete-normal", "asymmetric", "heteroskedastic", "very-heteroskedastic",
          "none"};
}

HeterogeneityDist HeterogeneityDist::from_name(const std::string& name) {
  if (name == "correct" || name == "normal-linear") return correctly_specified();
  if (name == "discrete-normal" || name == "discrete-approx-normal") return discrete_approx_normal();
  if (name == "asymmetric" || name == "discrete-asymmetric") return discrete_asymmetric();
  if (name == "heteroskedastic") return heteroskedastic();
  if (name == "very-heteroskedastic") return very_heteroskedastic();
  if (name == "none" || name == "degenerate") return degenerate(0.0);
  throw InvalidInput("unknown heterogeneity distribution '" + name + "'");
}

void HeterogeneityDist::validate() const {
  if (kind_ == Kind::normal_linear) {
    for (double d : delta_)
      if (!std::isfinite(d)) throw InvalidInput("loadings must be finite");
    if (!(sigma_ >= 0.0) || !std::isfinite(sigma_)) throw InvalidInput("sigma must be >= 0");
    return;
  }
  for (const auto& list : atoms_) {
    if (list.empty()) throw InvalidInput("every initial pair needs at least one support point");
    double total = 0.0;
    for (const auto& a : list) {
      if (!std::isfinite(a.value) || !(a.mass >= 0.0)) throw InvalidInput("invalid support point");
      total += a.mass;
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvalidInput("conditional masses must sum to 1");
  }
}

double HeterogeneityDist::mean(Cell c) const {
  if (kind_ == Kind::normal_linear)
    return delta_[0] + delta_[1] * c.y1 + delta_[2] * c.y2 + delta_[3] * c.y1 * c.y2;
  double m = 0.0;
  for (const auto& a : atoms_[c.index()]) m += a.mass * a.value;
  return m;
}

const std::vector<Atom>& HeterogeneityDist::atoms(Cell initial) const {
  if (kind_ == Kind::normal_linear) throw InvalidInput("normal-linear distribution has no atoms");
  return atoms_[initial.index()];
}

double HeterogeneityDist::draw(Cell initial, CounterRng& rng) const {
  if (kind_ == Kind::normal_linear) return mean(initial) + sigma_ * rng.normal();
  const auto& list = atoms_[initial.index()];
  if (list.size() == 1) return list.front().value;
  double u = rng.uniform();
  for (const auto& a : list) {
    if (u < a.mass) return a.value;
    u -= a.mass;
  }
  return list.back().value;
}

Cell draw_initial(const InitialSpec& spec, CounterRng& rng) {
  if (!(spec.p1 >= 0.0 && spec.p1 <= 1.0 && spec.p2 >= 0.0 && spec.p2 <= 1.0))
    throw InvalidInput("initial probabilities must lie in [0,1]");
  const int y1 = rng.bernoulli(spec.p1) ? 1 : 0;
  const int y2 = rng.bernoulli(spec.p2) ? 1 : 0;
  return {y1, y2};
}

Cell draw_initial(const InitialSpec& spec, std::uint64_t seed, std::uint64_t household) {
  CounterRng rng(seed, household, 0, purpose::initial);
  return draw_initial(spec, rng);
}

double draw_alpha(const HeterogeneityDist& dist, Cell initial, std::uint64_t seed,
                  std::uint64_t household) {
  CounterRng rng(seed, household, 0, purpose::alpha);
  return dist.draw(initial, rng);
}

CovariatePath Household::path() const {
  CovariatePath p;
  if (x1.size() == 0) return p;
  const int T = seq.periods();
  p.x1 = x1.bottomRows(T);
  p.x2 = x2.bottomRows(T);
  return p;
}

void Panel::validate() const {
  if (households.empty()) return;
  const int T = periods();
  const auto k = covariate_dim();
  std::unordered_set<std::string> ids;
  for (const auto& h : households) {
    if (h.seq.periods() != T) throw InvalidInput("household " + h.id + " has a different T");
    if (h.x1.cols() != k || h.x2.cols() != k) throw InvalidInput("household " + h.id + " covariate width");
    if (k > 0 && (h.x1.rows() != T + 1 || h.x2.rows() != T + 1))
      throw InvalidInput("household " + h.id + " covariate rows");
    if (!ids.insert(h.id).second) throw InvalidInput("duplicate household id " + h.id);
  }
}

Panel Panel::subset(const std::vector<std::size_t>& index) const {
  Panel out;
  out.households.reserve(index.size());
  for (auto i : index) out.households.push_back(households[i]);
  return out;
}

namespace {

Household simulate_one(const CommonParams& params, const HeterogeneityDist& dist, int T,
                       bool restricted, std::uint64_t seed, std::size_t i,
                       const SimulationOptions& opts) {
  Household h;
  h.id = std::to_string(i + 1);
  const Cell init = draw_initial(opts.initial, seed, i);
  CounterRng arng(seed, i, 0, purpose::alpha);
  FixedEffects fe;
  fe.alpha1 = dist.draw(init, arng);
  if (restricted) {
    fe.alpha2 = fe.alpha1 + params.kappa;
  } else {
    CounterRng arng2(seed, i, 0, purpose::alpha2);
    fe.alpha2 = dist.draw(init, arng2);
  }

  const int k = opts.covariate_dim;
  double xb1 = 0.0, xb2 = 0.0;
  if (k > 0) {
    CounterRng xrng(seed, i, 0, purpose::covariate);
    Vector v1(k), v2(k);
    for (int j = 0; j < k; ++j) v1[j] = xrng.normal();
    for (int j = 0; j < k; ++j) v2[j] = xrng.normal();
    h.x1 = v1.transpose().replicate(T + 1, 1);
    h.x2 = v2.transpose().replicate(T + 1, 1);
    xb1 = v1.dot(params.beta1);
    xb2 = v2.dot(params.beta2);
  }

  std::vector<std::uint8_t> y1(T + 1), y2(T + 1);
  y1[0] = static_cast<std::uint8_t>(init.y1);
  y2[0] = static_cast<std::uint8_t>(init.y2);
  const auto& g = params.gamma;
  Cell prev = init;
  for (int t = 1; t <= T; ++t) {
    const double z1 = fe.alpha1 + xb1 + g(0, 0) * prev.y1 + g(0, 1) * prev.y2;
    const double z2 = fe.alpha2 + xb2 + g(1, 0) * prev.y1 + g(1, 1) * prev.y2;
    const auto lc = kernel::log_cells(z1, z2, params.rho);
    CounterRng trng(seed, i, static_cast<std::uint32_t>(t), purpose::transition);
    double u = trng.uniform();
    int c = 3;
    for (int j = 0; j < 3; ++j) {
      const double p = std::exp(lc[j]);
      if (u < p) {
        c = j;
        break;
      }
      u -= p;
    }
    prev = Cell::from_index(c);
    y1[t] = static_cast<std::uint8_t>(prev.y1);
    y2[t] = static_cast<std::uint8_t>(prev.y2);
  }
  h.seq = PairSequence(std::move(y1), std::move(y2));
  return h;
}

void check_simulation_args(const CommonParams& params, std::size_t n, int T,
                           const SimulationOptions& opts) {
  params.validate();
  if (n < 1) throw InvalidInput("n must be at least 1");
  if (T < 1) throw InvalidInput("T must be at least 1");
  if (params.covariate_dim() != opts.covariate_dim)
    throw InvalidInput("coefficient length must equal the simulated covariate dimension");
}

}  // namespace

Panel simulate_panel(const CommonParams& params, const HeterogeneityDist& dist, std::size_t n, int T,
                     bool restricted, std::uint64_t seed, SimulationOptions opts) {
  check_simulation_args(params, n, T, opts);
  Panel panel;
  panel.households.resize(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    panel.households[i] = simulate_one(params, dist, T, restricted, seed, static_cast<std::size_t>(i), opts);
  return panel;
}

Panel simulate_panel_serial(const CommonParams& params, const HeterogeneityDist& dist, std::size_t n,
                            int T, bool restricted, std::uint64_t seed, SimulationOptions opts) {
  check_simulation_args(params, n, T, opts);
  Panel panel;
  panel.households.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    panel.households.push_back(simulate_one(params, dist, T, restricted, seed, i, opts));
  return panel;
}

}  // namespace bivlogit
