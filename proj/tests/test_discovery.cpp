#include "doctest.h"

#include "bivlogit/discovery.hpp"
#include "bivlogit/error.hpp"
#include "bivlogit/gmm.hpp"
#include "bivlogit/random.hpp"

#include <Eigen/QR>

#include <cmath>

using namespace bivlogit;

namespace {

CountConfig config(int T, bool restricted, bool cov = false) {
  CountConfig c;
  c.T = T;
  c.restricted = restricted;
  c.with_covariates = cov;
  return c;
}

std::array<int, 3> counts(const CountReport& r) { return {r.n_tot, r.n_para, r.n_rho}; }

// 64-vector of Appendix moment j for the given initial pair
Vector appendix_vector(const MomentSymbols& s, Cell c0, int j, double P) {
  Vector m = Vector::Zero(64);
  const auto codes = moment_pattern_codes(c0, j);
  const auto w = moment_weights(s, c0, j, P);
  for (int k = 0; k < kMomentSupport; ++k) m[codes[k]] += w[k];
  return m;
}

double projection_residual(const Matrix& basis, const Vector& m) {
  return (m - basis * (basis.transpose() * m)).norm() / m.norm();
}

}  // namespace

TEST_CASE("probability matrix") {
  const auto c = config(3, true);
  const auto p = generic_params(c, 4);
  const auto draws = draw_fixed_effects(c, p.kappa, c.default_alpha_draws(), 9);
  CHECK(draws.size() == 256);
  for (const auto& fe : draws) CHECK(fe.alpha2 == doctest::Approx(fe.alpha1 + p.kappa));
  const Matrix m = probability_matrix(c, p, draws);
  CHECK(m.cols() == 64);
  CHECK(m.rows() == 256);
  CHECK((m.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
  CHECK(m == probability_matrix_serial(c, p, draws));
  const auto seqs = enumerate_sequences(3, c.initial);
  for (int r = 0; r < 256; r += 37)
    for (const auto& s : seqs) CHECK(m(r, s.code()) == doctest::Approx(sequence_prob(p, draws[r], {}, s)).epsilon(1e-13));

  const Matrix z = probability_matrix(c, CommonParams::dynamic(0, 0, 0, 0, 0, 0), {FixedEffects{0.0, 0.0}});
  CHECK((z.array() - 1.0 / 64).abs().maxCoeff() <= 1e-15);

  auto cu = config(3, false, true);
  const auto pc = generic_params(cu, 2);
  const auto xp = generic_covariates(cu, 2);
  CHECK(xp.x1.rows() == 3);
  CHECK(pc.beta1.size() == 1);
  const auto du = draw_fixed_effects(cu, 0.0, 20, 3);
  const Matrix mc = probability_matrix(cu, pc, du, xp);
  for (const auto& s : seqs) CHECK(mc(5, s.code()) == doctest::Approx(sequence_prob(pc, du[5], xp, s)).epsilon(1e-13));
}

TEST_CASE("moment counts without covariates") {
  CHECK(counts(count_moments(config(3, false))) == std::array<int, 3>{24, 21, 0});
  CHECK(counts(count_moments(config(3, true))) == std::array<int, 3>{45, 42, 6});
  CHECK(counts(count_moments(config(4, false))) == std::array<int, 3>{180, 136, 4});
  CHECK(counts(count_moments(config(4, true))) == std::array<int, 3>{229, 185, 18});
  CHECK(count_moments(config(3, true)).table_row() == "45 / 42 / 6");
}

TEST_CASE("moment counts with covariates") {
  CHECK(counts(count_moments(config(3, false, true))) == std::array<int, 3>{4, 4, 0});
  CHECK(counts(count_moments(config(3, true, true))) == std::array<int, 3>{45, 45, 16});
  CHECK(counts(count_moments(config(4, false, true))) == std::array<int, 3>{120, 120, 64});
  CHECK(counts(count_moments(config(4, true, true))) == std::array<int, 3>{229, 229, 48});
}

TEST_CASE("counts are invariant to seeds and initial conditions") {
  for (bool restricted : {false, true}) {
    for (int T : {3, 4}) {
      const auto ref = counts(count_moments(config(T, restricted)));
      for (std::uint64_t seed = 2; seed <= 6; ++seed) CHECK(counts(count_moments(config(T, restricted), seed)) == ref);
      for (int init = 1; init < 4; ++init) {
        auto c = config(T, restricted);
        c.initial = Cell::from_index(init);
        CHECK(count_moments(c).n_tot == ref[0]);
      }
    }
  }
  for (int T : {3, 4}) {
    const auto u = count_moments(config(T, false));
    const auto r = count_moments(config(T, true));
    CHECK(r.n_tot >= u.n_tot);
    CHECK(u.n_rho <= u.n_para);
    CHECK(u.n_para <= u.n_tot);
  }
}

TEST_CASE("floating-point diagnostic") {
  const auto r = count_moments(config(3, false));
  CHECK(r.sv_first_null < r.sv_last_signal);
  CHECK(r.para_draws >= 5);
  CHECK(r.rho_draws >= 5);
}

TEST_CASE("configuration checks") {
  auto c = config(0, false);
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = config(3, false);
  c.alpha_draws = 10;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
}

TEST_CASE("null-space basis") {
  const auto c = config(3, true);
  const auto p = generic_params(c, 11);
  const Matrix basis = extract_moment_basis(c, p);
  REQUIRE(basis.cols() == 45);
  CHECK(basis.rows() == 64);
  CHECK((basis.transpose() * basis - Matrix::Identity(45, 45)).cwiseAbs().maxCoeff() <= 1e-12);

  const auto fresh = draw_fixed_effects(c, p.kappa, 100, 12345);
  const Matrix prob = probability_matrix(c, p, fresh);
  CHECK((prob * basis).cwiseAbs().maxCoeff() <= 1e-8);

  // the Appendix moments at the same parameters lie in the span
  const auto sym = MomentSymbols::from(p.gamma, p.kappa);
  const double P = std::exp(p.rho);
  Matrix stack(64, kNumMoments);
  for (int j = 1; j <= kNumMoments; ++j) {
    stack.col(j - 1) = appendix_vector(sym, c.initial, j, P);
    CHECK(projection_residual(basis, stack.col(j - 1)) <= 1e-8);
  }
  // and are linearly independent
  Eigen::ColPivHouseholderQR<Matrix> qr(stack);
  CHECK(qr.rank() == kNumMoments);

  for (int init = 1; init < 4; ++init) {
    auto ci = c;
    ci.initial = Cell::from_index(init);
    const Matrix bi = extract_moment_basis(ci, p);
    CHECK(bi.cols() == 45);
    for (int j = 1; j <= kNumMoments; ++j)
      CHECK(projection_residual(bi, appendix_vector(sym, ci.initial, j, P)) <= 1e-8);
  }
}

TEST_CASE("Appendix moments need the restriction") {
  const auto c = config(3, false);
  auto p = generic_params(config(3, true), 11);
  const Matrix basis = extract_moment_basis(c, p);
  CHECK(basis.cols() == 24);
  const auto sym = MomentSymbols::from(p.gamma, p.kappa);
  double worst = 0.0;
  for (int j = 1; j <= kNumMoments; ++j)
    worst = std::max(worst, projection_residual(basis, appendix_vector(sym, c.initial, j, std::exp(p.rho))));
  CHECK(worst > 1e-3);
}
