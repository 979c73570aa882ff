#include "doctest.h"

#include "bivlogit/error.hpp"
#include "bivlogit/pooled.hpp"
#include "bivlogit/random.hpp"

#include <Eigen/LU>

#include <cmath>

using namespace bivlogit;

namespace {

// Cross-section with an intercept and k standard normal regressors per equation.
SSData draw_static(std::size_t n, const Vector& b1, const Vector& b2, double rho, std::uint64_t seed) {
  const auto k = b1.size();
  SSData d;
  d.X1.resize(static_cast<Eigen::Index>(n), k);
  d.X2.resize(static_cast<Eigen::Index>(n), k);
  d.y1.resize(n);
  d.y2.resize(n);
  d.cluster.resize(n);
  CommonParams p;
  p.beta1 = b1;
  p.beta2 = b2;
  p.rho = rho;
  for (std::size_t i = 0; i < n; ++i) {
    CounterRng r(seed, i, 0, purpose::covariate);
    const auto row = static_cast<Eigen::Index>(i);
    d.X1(row, 0) = 1.0;
    d.X2(row, 0) = 1.0;
    for (Eigen::Index j = 1; j < k; ++j) {
      d.X1(row, j) = r.normal();
      d.X2(row, j) = r.normal();
    }
    const auto cells = joint_cells_static(p, d.X1.row(row).transpose(), d.X2.row(row).transpose());
    const double u = r.uniform();
    int c = 0;
    double acc = cells[0];
    while (u > acc && c < 3) acc += cells[++c];
    d.y1[i] = static_cast<std::uint8_t>(c >> 1);
    d.y2[i] = static_cast<std::uint8_t>(c & 1);
    d.cluster[i] = i;
  }
  for (Eigen::Index j = 0; j < k; ++j) {
    d.names1.push_back("b1_" + std::to_string(j));
    d.names2.push_back("b2_" + std::to_string(j));
  }
  return d;
}

ObjectiveFn objective(const SSData& d) {
  return [&d](const Vector& th, Vector* g) {
    const double f = ss_loglik(d, th, g);
    if (g) *g = -*g;
    return -f;
  };
}

}  // namespace

TEST_CASE("rho from cells") {
  CHECK(rho_from_cells(0.25, 0.25, 0.25, 0.25) == doctest::Approx(0.0));
  CHECK(rho_from_cells(0.5, 1.0 / 6, 1.0 / 6, 1.0 / 6) == doctest::Approx(std::log(3.0)).epsilon(1e-14));
  CHECK_THROWS_AS(rho_from_cells(0.5, 0.5, 0.0, 0.0), DegenerateCell);
  CHECK_THROWS_AS(rho_from_cells(0.5, 0.5, 0.5, 0.5), InvalidInput);
  CHECK_THROWS_AS(rho_from_counts(10, 0, 5, 5), DegenerateCell);
  CHECK(std::isfinite(rho_from_counts(10, 0, 5, 5, 0.5)));
}

TEST_CASE("rho to correlation matches the symmetric-cell construction") {
  // intercepts c = -rho/2 make both marginals one half
  for (int i = 0; i < 20; ++i) {
    const double rho = -8.0 + 16.0 * i / 19.0;
    CommonParams p;
    p.beta1 = Vector::Constant(1, -rho / 2);
    p.beta2 = Vector::Constant(1, -rho / 2);
    p.rho = rho;
    const Vector one = Vector::Ones(1);
    const auto c = joint_cells_static(p, one, one);
    const double m1 = c[2] + c[3], m2 = c[1] + c[3];
    CHECK(std::abs(m1 - 0.5) < 1e-12);
    const double corr = (c[3] - m1 * m2) / std::sqrt(m1 * (1 - m1) * m2 * (1 - m2));
    CHECK(std::abs(rho_to_correlation(rho) - corr) < 1e-10);
    CHECK(std::abs(rho_to_correlation(rho) + rho_to_correlation(-rho)) < 1e-15);
    if (i > 0) CHECK(rho_to_correlation(rho) > rho_to_correlation(-8.0 + 16.0 * (i - 1) / 19.0));
  }
  CHECK(rho_to_correlation(0.0) == 0.0);
  CHECK(rho_to_correlation(4.0) == doctest::Approx(std::tanh(1.0)).epsilon(1e-14));
  CHECK(rho_to_correlation(200.0) == doctest::Approx(1.0));
  CHECK(rho_to_correlation(-200.0) == doctest::Approx(-1.0));
}

TEST_CASE("static MLE at the null") {
  const auto d = draw_static(100000, Vector::Zero(3), Vector::Zero(3), 0.0, 1);
  const auto fit = fit_ss(d);
  REQUIRE(fit.converged);
  const Vector se = fit.se();
  for (Eigen::Index i = 0; i < fit.estimates.size(); ++i) CHECK(std::abs(fit.estimates[i]) < 4 * se[i]);
}

TEST_CASE("saturated static model reproduces the cell estimator") {
  const auto d = draw_static(20000, Vector::Constant(1, 0.3), Vector::Constant(1, -0.2), 0.8, 2);
  const auto fit = fit_ss(d);
  REQUIRE(fit.converged);
  double n[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < d.rows(); ++i) n[2 * d.y1[i] + d.y2[i]] += 1.0;
  CHECK(std::abs(fit.estimate("rho") - rho_from_counts(n[3], n[2], n[1], n[0])) < 1e-8);
}

TEST_CASE("gradients match central differences") {
  const auto d = draw_static(3000, Vector::Constant(3, 0.2), Vector::Constant(3, -0.1), 0.5, 3);
  const auto fn = objective(d);
  for (std::uint64_t s = 0; s < 10; ++s) {
    CounterRng r(s, 0, 0, purpose::draw);
    Vector th(d.dim());
    for (Eigen::Index i = 0; i < th.size(); ++i) th[i] = 2.0 * r.uniform() - 1.0;
    Vector g;
    fn(th, &g);
    CHECK(gradient_relative_error(g, finite_difference_gradient(fn, th)) <= 1e-6);
  }
}

TEST_CASE("serial and parallel likelihoods agree bitwise") {
  const auto d = draw_static(20000, Vector::Constant(2, 0.2), Vector::Constant(2, 0.1), 0.5, 4);
  const Vector th = Vector::Constant(d.dim(), 0.1);
  Vector g1, g2;
  CHECK(ss_loglik(d, th, &g1) == ss_loglik_serial(d, th, &g2));
  CHECK(g1 == g2);
}

TEST_CASE("line search never increases the objective") {
  const auto d = draw_static(5000, Vector::Constant(2, 0.5), Vector::Constant(2, -0.5), 1.0, 5);
  const auto res = minimize_bfgs(objective(d), Vector::Zero(d.dim()));
  CHECK(res.converged);
  for (std::size_t i = 1; i < res.trace.size(); ++i) CHECK(res.trace[i] <= res.trace[i - 1]);
}

TEST_CASE("location shifts are absorbed by the intercept") {
  auto d = draw_static(5000, Vector::Constant(2, 0.5), Vector::Constant(2, -0.5), 1.0, 6);
  const auto a = fit_ss(d);
  d.X1.col(1).array() += 5.0;
  d.X2.col(1).array() -= 3.0;
  const auto b = fit_ss(d);
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  for (std::size_t i = 0; i < 50; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    CommonParams pa, pb;
    pa.beta1 = a.estimates.segment(0, 2);
    pa.beta2 = a.estimates.segment(2, 2);
    pa.rho = a.estimates[4];
    pb.beta1 = b.estimates.segment(0, 2);
    pb.beta2 = b.estimates.segment(2, 2);
    pb.rho = b.estimates[4];
    Vector x1 = d.X1.row(r).transpose(), x2 = d.X2.row(r).transpose();
    const auto cb = joint_cells_static(pb, x1, x2);
    x1[1] -= 5.0;
    x2[1] += 3.0;
    const auto ca = joint_cells_static(pa, x1, x2);
    for (int c = 0; c < 4; ++c) CHECK(std::abs(ca[c] - cb[c]) < 1e-6);
  }
}

TEST_CASE("rank deficient designs are rejected") {
  auto d = draw_static(500, Vector::Constant(2, 0.1), Vector::Constant(2, 0.1), 0.0, 7);
  d.X1.col(1) = d.X1.col(0) * 2.0;
  CHECK_THROWS_AS(fit_ss(d), InvalidInput);
}

TEST_CASE("clustered covariance") {
  const auto d = draw_static(4000, Vector::Constant(2, 0.3), Vector::Constant(2, -0.3), 0.7, 8);
  const auto fit = fit_ss(d);
  REQUIRE(fit.converged);
  // singleton clusters: H^-1 S'S H^-1
  const Matrix S = ss_scores(d, fit.estimates);
  const Matrix Hi = fit.hessian.inverse();
  const Matrix robust = Hi * (S.transpose() * S) * Hi;
  CHECK((clustered_vcov(fit, d) - robust).cwiseAbs().maxCoeff() < 1e-10 * robust.cwiseAbs().maxCoeff());

  // duplicating each cluster's rows k times leaves the sandwich unchanged
  SSData dup = d;
  const int k = 3;
  dup.X1 = Matrix(d.X1.rows() * k, d.X1.cols());
  dup.X2 = Matrix(d.X2.rows() * k, d.X2.cols());
  dup.y1.clear();
  dup.y2.clear();
  dup.cluster.clear();
  for (Eigen::Index i = 0; i < d.X1.rows(); ++i)
    for (int j = 0; j < k; ++j) {
      dup.X1.row(i * k + j) = d.X1.row(i);
      dup.X2.row(i * k + j) = d.X2.row(i);
      dup.y1.push_back(d.y1[i]);
      dup.y2.push_back(d.y2[i]);
      dup.cluster.push_back(d.cluster[i]);
    }
  const auto fd = fit_ss(dup);
  const Matrix vd = clustered_vcov(fd, dup);
  const Matrix v = clustered_vcov(fit, d);
  CHECK((vd - v).cwiseAbs().maxCoeff() < 1e-6 * v.cwiseAbs().maxCoeff());
  // while the classical covariance shrinks by k
  CHECK((fd.covariance * k - fit.covariance).cwiseAbs().maxCoeff() < 1e-6 * fit.covariance.cwiseAbs().maxCoeff());
}

TEST_CASE("clustered and classical errors agree under a correct model") {
  const auto d = draw_static(100000, Vector::Constant(2, 0.3), Vector::Constant(2, -0.3), 0.7, 9);
  const auto fit = fit_ss(d);
  const Vector a = fit.se();
  const Vector b = clustered_vcov(fit, d).diagonal().cwiseSqrt();
  for (Eigen::Index i = 0; i < a.size(); ++i) CHECK(std::abs(b[i] / a[i] - 1.0) < 0.10);
}

TEST_CASE("dynamic pooled MLE recovers the truth without heterogeneity") {
  const auto truth = CommonParams::dynamic(2.0, -1.0, -1.0, 2.0, 1.0, 0.0);
  const auto panel = simulate_panel(truth, HeterogeneityDist::degenerate(0.0), 100000, 3, true, 31);
  const auto fit = fit_dynamic_ss(panel);
  REQUIRE(fit.converged);
  const std::map<std::string, double> want{{"const1", 0.0},  {"gamma11", 2.0},  {"gamma12", -1.0}, {"const2", 0.0},
                                           {"gamma21", -1.0}, {"gamma22", 2.0}, {"rho", 1.0}};
  for (const auto& [name, v] : want) CHECK(std::abs(fit.estimate(name) - v) < 4 * fit.se(name));

  const auto zero = simulate_panel(CommonParams::dynamic(0, 0, 0, 0, 0.5), HeterogeneityDist::degenerate(0.0), 50000,
                                   3, true, 32);
  const auto f0 = fit_dynamic_ss(zero);
  for (const char* g : {"gamma11", "gamma12", "gamma21", "gamma22"}) CHECK(std::abs(f0.estimate(g)) < 4 * f0.se(g));

  const auto dr = dynamic_rows(panel);
  const auto fn = objective(dr);
  for (std::uint64_t s = 0; s < 10; ++s) {
    CounterRng r(s, 1, 0, purpose::draw);
    Vector th(dr.dim());
    for (Eigen::Index i = 0; i < th.size(); ++i) th[i] = 4.0 * r.uniform() - 2.0;
    Vector g;
    fn(th, &g);
    CHECK(gradient_relative_error(g, finite_difference_gradient(fn, th)) <= 1e-6);
  }
}

TEST_CASE("static rows from a panel") {
  const auto panel = simulate_panel(CommonParams::dynamic(0, 0, 0, 0, 0.0), HeterogeneityDist::degenerate(0.0), 10,
                                    3, true, 1);
  const auto rows = static_rows(panel);
  CHECK(rows.rows() == 40);
  CHECK(rows.cluster[39] == 9);
  const auto dr = dynamic_rows(panel);
  CHECK(dr.rows() == 30);
  CHECK(dr.parameter_names().back() == "rho");
}

TEST_CASE("binary logit") {
  std::vector<std::uint8_t> y;
  for (int i = 0; i < 1000; ++i) y.push_back(i % 4 == 0);
  const auto fit = fit_logit(y, Matrix::Ones(1000, 1), {"const"});
  CHECK(fit.estimates[0] == doctest::Approx(std::log(0.25 / 0.75)).epsilon(1e-7));
  CHECK(fit.se()[0] == doctest::Approx(1.0 / std::sqrt(1000 * 0.25 * 0.75)).epsilon(1e-6));
}

TEST_CASE("separation is flagged") {
  SSData d;
  d.X1 = Matrix(8, 2);
  d.X2 = Matrix::Ones(8, 1);
  for (int i = 0; i < 8; ++i) {
    d.X1(i, 0) = 1.0;
    d.X1(i, 1) = i < 4 ? -0.25 : 0.25;
    d.y1.push_back(i >= 4);
    d.y2.push_back(i % 2);
    d.cluster.push_back(i);
  }
  d.names1 = {"const1", "x"};
  d.names2 = {"const2"};
  const auto fit = fit_ss(d);
  CHECK(fit.separation);
}
