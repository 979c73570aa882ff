#include "bivlogit/quadrature.hpp"

#include "bivlogit/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace bivlogit {

namespace {

// Orthonormal probabilists' Hermite recurrence at x: returns p_n(x), p_n'(x)
// and sum_{k<n} p_k(x)^2.
struct HermiteEval {
  long double p, dp, sumsq;
};

HermiteEval hermite(int n, long double x) {
  long double prev = 0.0L, cur = 1.0L, sumsq = 0.0L;
  for (int k = 0; k < n; ++k) {
    sumsq += cur * cur;
    const long double next = (x * cur - std::sqrt(static_cast<long double>(k)) * prev) / std::sqrt(static_cast<long double>(k + 1));
    prev = cur;
    cur = next;
  }
  // p_n' = sqrt(n) p_{n-1}
  return {cur, std::sqrt(static_cast<long double>(n)) * prev, sumsq};
}

}  // namespace

// Golub-Welsch for the nodes, then Newton refinement and weights
// 1 / sum_k p_k(x)^2 so that tail weights keep full relative accuracy.
QuadratureRule QuadratureRule::gauss_hermite(int order) {
  if (order < 1 || order > 256) throw InvalidInput("quadrature order must be in 1..256");
  Matrix J = Matrix::Zero(order, order);
  for (int k = 1; k < order; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(static_cast<double>(k));
  const Eigen::SelfAdjointEigenSolver<Matrix> es(J, Eigen::EigenvaluesOnly);
  QuadratureRule q;
  q.order = order;
  q.nodes.resize(order);
  q.weights.resize(order);
  for (int i = 0; i < order; ++i) {
    long double x = es.eigenvalues()[i];
    for (int it = 0; it < 5; ++it) {
      const auto h = hermite(order, x);
      if (h.dp == 0.0L) break;
      const long double step = h.p / h.dp;
      x -= step;
      if (std::abs(step) <= 1e-19L * std::max(1.0L, std::abs(x))) break;
    }
    q.nodes[i] = static_cast<double>(x);
    q.weights[i] = static_cast<double>(1.0L / hermite(order, x).sumsq);
  }
  // symmetrize against rounding
  for (int i = 0; i < order / 2; ++i) {
    const int j = order - 1 - i;
    const double x = 0.5 * (q.nodes[j] - q.nodes[i]);
    const double w = 0.5 * (q.weights[i] + q.weights[j]);
    q.nodes[i] = -x;
    q.nodes[j] = x;
    q.weights[i] = q.weights[j] = w;
  }
  if (order % 2 == 1) q.nodes[order / 2] = 0.0;
  q.weights /= q.weights.sum();
  return q;
}

}  // namespace bivlogit
