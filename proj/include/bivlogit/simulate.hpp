#pragma once

#include "bivlogit/model.hpp"
#include "bivlogit/random.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace bivlogit {

struct Atom {
  double value = 0.0;
  double mass = 0.0;
};

// Distribution of the household effect alpha given the initial pair.
class HeterogeneityDist {
 public:
  enum class Kind {
    normal_linear,
    discrete_approx_normal,
    discrete_asymmetric,
    heteroskedastic,
    very_heteroskedastic,
    custom_discrete,
    degenerate
  };

  // alpha = d0 + d1 y1_0 + d2 y2_0 + d3 y1_0 y2_0 + sigma * N(0,1)
  static HeterogeneityDist normal_linear(double d0, double d1, double d2, double d3, double sigma);
  // The correctly specified design: alpha = -1 + y1_0 + y2_0 + N(0,1).
  static HeterogeneityDist correctly_specified();
  static HeterogeneityDist discrete_approx_normal();
  static HeterogeneityDist discrete_asymmetric();
  static HeterogeneityDist heteroskedastic();
  static HeterogeneityDist very_heteroskedastic();
  // One atom list per initial pair, indexed by Cell::index().
  static HeterogeneityDist custom_discrete(std::array<std::vector<Atom>, 4> atoms);
  static HeterogeneityDist degenerate(double value);

  // Names used on the command line.
  static HeterogeneityDist from_name(const std::string& name);
  static std::vector<std::string> names();

  Kind kind() const { return kind_; }
  bool is_normal() const { return kind_ == Kind::normal_linear; }
  double mean(Cell initial) const;
  double sigma() const { return sigma_; }
  const std::array<double, 4>& loadings() const { return delta_; }
  // Support and masses given the initial pair (discrete kinds and degenerate).
  const std::vector<Atom>& atoms(Cell initial) const;

  double draw(Cell initial, CounterRng& rng) const;

 private:
  void validate() const;

  Kind kind_ = Kind::degenerate;
  std::array<double, 4> delta_{};
  double sigma_ = 0.0;
  std::array<std::vector<Atom>, 4> atoms_;
};

// Spacing of the outer atoms in the discrete approximation to N(0,1).
double discrete_normal_outer_point();

struct InitialSpec {
  double p1 = 0.5;
  double p2 = 0.5;
};

Cell draw_initial(const InitialSpec& spec, CounterRng& rng);
Cell draw_initial(const InitialSpec& spec, std::uint64_t seed, std::uint64_t household = 0);
double draw_alpha(const HeterogeneityDist& dist, Cell initial, std::uint64_t seed,
                  std::uint64_t household = 0);

struct Household {
  std::string id;
  PairSequence seq;
  // Covariates for periods 0..T (T+1 rows); empty without covariates.
  Matrix x1;
  Matrix x2;
  std::string group;
  long long window_key = 0;

  CovariatePath path() const;  // rows for periods 1..T
  friend bool operator==(const Household& a, const Household& b) {
    auto same = [](const Matrix& p, const Matrix& q) {
      return p.rows() == q.rows() && p.cols() == q.cols() && (p.size() == 0 || p == q);
    };
    return a.id == b.id && a.seq == b.seq && same(a.x1, b.x1) && same(a.x2, b.x2) &&
           a.group == b.group && a.window_key == b.window_key;
  }
};

struct Panel {
  std::vector<Household> households;

  std::size_t size() const { return households.size(); }
  bool empty() const { return households.empty(); }
  int periods() const { return households.empty() ? 0 : households.front().seq.periods(); }
  Eigen::Index covariate_dim() const { return households.empty() ? 0 : households.front().x1.cols(); }
  void validate() const;
  Panel subset(const std::vector<std::size_t>& index) const;
  friend bool operator==(const Panel&, const Panel&) = default;
};

struct SimulationOptions {
  InitialSpec initial;
  // Constant-per-household N(0,1) regressors; params.beta1/beta2 must match.
  int covariate_dim = 0;
};

// restricted: alpha2 = alpha1 + kappa. Otherwise alpha2 is an independent draw from dist.
Panel simulate_panel(const CommonParams& params, const HeterogeneityDist& dist, std::size_t n, int T,
                     bool restricted, std::uint64_t seed, SimulationOptions opts = {});
Panel simulate_panel_serial(const CommonParams& params, const HeterogeneityDist& dist, std::size_t n,
                            int T, bool restricted, std::uint64_t seed, SimulationOptions opts = {});

}  // namespace bivlogit
