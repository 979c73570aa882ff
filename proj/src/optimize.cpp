#include "bivlogit/optimize.hpp"

#include <algorithm>
#include <cmath>

namespace bivlogit {

double scaled_gradient_norm(const Vector& x, double value, const Vector& grad) {
  const double fscale = std::max(1.0, std::abs(value));
  double m = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    m = std::max(m, std::abs(grad[i]) * std::max(1.0, std::abs(x[i])) / fscale);
  return m;
}

OptimResult minimize_bfgs(const ObjectiveFn& fn, Vector x0, const OptimOptions& opts) {
  const Eigen::Index n = x0.size();
  OptimResult r;
  r.x = std::move(x0);
  r.grad = Vector::Zero(n);
  r.value = fn(r.x, &r.grad);
  if (!std::isfinite(r.value) || !r.grad.allFinite()) {
    r.message = "objective not finite at the starting point";
    return r;
  }
  r.trace.push_back(r.value);
  auto flag_separation = [&] {
    if (n > 0 && r.x.cwiseAbs().maxCoeff() > opts.separation_bound) r.separation = true;
  };

  Matrix H = Matrix::Identity(n, n);
  bool scaled = false;
  Vector g_new(n), x_new(n);
  for (r.iterations = 0; r.iterations < opts.max_iter; ++r.iterations) {
    if (scaled_gradient_norm(r.x, r.value, r.grad) <= opts.grad_tol) {
      r.converged = true;
      r.message = "gradient tolerance met";
      return r;
    }
    Vector d = -H * r.grad;
    double slope = r.grad.dot(d);
    if (!(slope < 0.0)) {
      H.setIdentity();
      d = -r.grad;
      slope = -r.grad.squaredNorm();
    }
    double step = 1.0;
    double f_new = 0.0;
    bool accepted = false;
    for (int k = 0; k < 60; ++k) {
      x_new = r.x + step * d;
      if (x_new == r.x) break;
      f_new = fn(x_new, &g_new);
      if (std::isfinite(f_new) && g_new.allFinite() && f_new <= r.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      const double sg = scaled_gradient_norm(r.x, r.value, r.grad);
      r.converged = sg <= opts.stall_tol;
      r.message = r.converged ? "line search stalled at machine precision" : "line search failed";
      return r;
    }
    const Vector s = x_new - r.x;
    const Vector y = g_new - r.grad;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        H *= sy / y.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Vector Hy = H * y;
      H += rho * rho * (sy + y.dot(Hy)) * (s * s.transpose()) - rho * (Hy * s.transpose() + s * Hy.transpose());
    }
    r.x = x_new;
    r.grad = g_new;
    r.value = f_new;
    r.trace.push_back(f_new);
    flag_separation();
  }
  r.converged = scaled_gradient_norm(r.x, r.value, r.grad) <= opts.grad_tol;
  r.message = r.converged ? "gradient tolerance met" : "iteration limit reached";
  return r;
}

Vector finite_difference_gradient(const ObjectiveFn& fn, const Vector& x, double rel_step) {
  Vector g(x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x[i]));
    xp[i] = x[i] + h;
    const double fp = fn(xp, nullptr);
    xp[i] = x[i] - h;
    const double fm = fn(xp, nullptr);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Matrix finite_difference_hessian(const ObjectiveFn& fn, const Vector& x, double rel_step) {
  const Eigen::Index n = x.size();
  Matrix H(n, n);
  Vector xp = x, gp(n), gm(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x[i]));
    xp[i] = x[i] + h;
    fn(xp, &gp);
    xp[i] = x[i] - h;
    fn(xp, &gm);
    xp[i] = x[i];
    H.col(i) = (gp - gm) / (2.0 * h);
  }
  return 0.5 * (H + H.transpose());
}

double gradient_relative_error(const Vector& analytic, const Vector& numeric) {
  const double scale = std::max(analytic.lpNorm<Eigen::Infinity>(), 1e-3);
  return (analytic - numeric).lpNorm<Eigen::Infinity>() / scale;
}

}  // namespace bivlogit
