#include "bivlogit/pooled.hpp"

#include "bivlogit/error.hpp"
#include "bivlogit/parallel.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>

namespace bivlogit {

double FitResult::estimate(const std::string& name) const { return estimates[index_of(name)]; }

double FitResult::se(const std::string& name) const {
  const auto i = index_of(name);
  return std::sqrt(std::max(0.0, covariance(i, i)));
}

Eigen::Index FitResult::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw InvalidInput("no parameter named " + name);
  return static_cast<Eigen::Index>(it - names.begin());
}

Matrix invert_information(const Matrix& info) {
  const Eigen::LDLT<Matrix> ldlt(0.5 * (info + info.transpose()));
  const auto d = ldlt.vectorD();
  const double dmax = d.cwiseAbs().maxCoeff();
  if (ldlt.info() != Eigen::Success || !(d.minCoeff() > 1e-12 * std::max(dmax, 1e-300)))
    throw InvalidInput("information matrix is singular or not positive definite");
  Matrix inv = ldlt.solve(Matrix::Identity(info.rows(), info.cols()));
  return 0.5 * (inv + inv.transpose());
}

std::vector<std::string> SSData::parameter_names() const {
  std::vector<std::string> out(names1);
  out.insert(out.end(), names2.begin(), names2.end());
  out.push_back("rho");
  return out;
}

void SSData::validate() const {
  const auto n = static_cast<Eigen::Index>(rows());
  if (n == 0) throw InvalidInput("no observations");
  if (X1.rows() != n || X2.rows() != n || y2.size() != rows() || cluster.size() != rows())
    throw InvalidInput("inconsistent pooled data dimensions");
  if (static_cast<std::size_t>(X1.cols()) != names1.size() ||
      static_cast<std::size_t>(X2.cols()) != names2.size())
    throw InvalidInput("design column names do not match");
  for (const Matrix* X : {&X1, &X2}) {
    if (X->cols() == 0) continue;
    if (!X->allFinite()) throw InvalidInput("design matrix contains non-finite values");
    Eigen::ColPivHouseholderQR<Matrix> qr(*X);
    qr.setThreshold(1e-10);
    if (qr.rank() < X->cols()) throw InvalidInput("design matrix is rank deficient");
  }
}

namespace {

std::vector<std::string> covariate_names(const std::string& prefix, Eigen::Index k) {
  std::vector<std::string> out;
  for (Eigen::Index j = 0; j < k; ++j) out.push_back(prefix + std::to_string(j + 1));
  return out;
}

struct Acc {
  double f = 0.0;
  Vector g;
  Acc& operator+=(const Acc& o) {
    f += o.f;
    if (g.size() > 0) g += o.g;
    return *this;
  }
};

void accumulate_rows(const SSData& d, const Vector& theta, std::size_t begin, std::size_t end,
                     Acc& acc) {
  const auto p1 = d.X1.cols(), p2 = d.X2.cols();
  const auto b1 = theta.head(p1);
  const auto b2 = theta.segment(p1, p2);
  const double rho = theta[p1 + p2];
  const bool want_grad = acc.g.size() > 0;
  for (std::size_t i = begin; i < end; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double z1 = p1 > 0 ? d.X1.row(r).dot(b1) : 0.0;
    const double z2 = p2 > 0 ? d.X2.row(r).dot(b2) : 0.0;
    const auto lc = kernel::log_cells(z1, z2, rho);
    const int c1 = d.y1[i], c2 = d.y2[i];
    acc.f += lc[Cell{c1, c2}.index()];
    if (!want_grad) continue;
    const double p11 = std::exp(lc[3]);
    const double q1 = std::exp(lc[2]) + p11;
    const double q2 = std::exp(lc[1]) + p11;
    if (p1 > 0) acc.g.head(p1) += (c1 - q1) * d.X1.row(r).transpose();
    if (p2 > 0) acc.g.segment(p1, p2) += (c2 - q2) * d.X2.row(r).transpose();
    acc.g[p1 + p2] += c1 * c2 - p11;
  }
}

constexpr std::size_t kChunk = 4096;

template <bool Parallel>
double loglik_impl(const SSData& data, const Vector& theta, Vector* grad) {
  if (theta.size() != data.dim()) throw InvalidInput("parameter vector has the wrong length");
  Acc zero;
  if (grad) zero.g = Vector::Zero(theta.size());
  auto fn = [&](std::size_t b, std::size_t e, Acc& a) { accumulate_rows(data, theta, b, e, a); };
  const Acc total = Parallel ? parallel::chunked_reduce(data.rows(), kChunk, zero, fn)
                             : parallel::chunked_reduce_serial(data.rows(), kChunk, zero, fn);
  const double n = static_cast<double>(data.rows());
  if (grad) *grad = total.g / n;
  return total.f / n;
}

}  // namespace

SSData static_rows(const Panel& panel, bool intercept) {
  SSData d;
  const int T = panel.periods();
  const auto k = panel.covariate_dim();
  const auto n = static_cast<Eigen::Index>(panel.size()) * (T + 1);
  const Eigen::Index p = k + (intercept ? 1 : 0);
  d.X1.resize(n, p);
  d.X2.resize(n, p);
  d.y1.resize(n);
  d.y2.resize(n);
  d.cluster.resize(n);
  Eigen::Index r = 0;
  for (std::size_t h = 0; h < panel.size(); ++h) {
    const auto& hh = panel.households[h];
    for (int t = 0; t <= T; ++t, ++r) {
      Eigen::Index c = 0;
      if (intercept) {
        d.X1(r, 0) = 1.0;
        d.X2(r, 0) = 1.0;
        c = 1;
      }
      if (k > 0) {
        d.X1.row(r).segment(c, k) = hh.x1.row(t);
        d.X2.row(r).segment(c, k) = hh.x2.row(t);
      }
      d.y1[r] = static_cast<std::uint8_t>(hh.seq.at(t).y1);
      d.y2[r] = static_cast<std::uint8_t>(hh.seq.at(t).y2);
      d.cluster[r] = h;
    }
  }
  if (intercept) {
    d.names1.push_back("const1");
    d.names2.push_back("const2");
  }
  for (const auto& s : covariate_names("b1_", k)) d.names1.push_back(s);
  for (const auto& s : covariate_names("b2_", k)) d.names2.push_back(s);
  return d;
}

SSData dynamic_rows(const Panel& panel, const LagStructure& lags) {
  SSData d;
  const int T = panel.periods();
  if (T < 1) throw InvalidInput("dynamic model needs at least one lagged period");
  const auto k = panel.covariate_dim();
  const auto n = static_cast<Eigen::Index>(panel.size()) * T;
  const Eigen::Index nl = (lags.own_lag ? 1 : 0) + (lags.cross_lag ? 1 : 0);
  const Eigen::Index p = (lags.intercept ? 1 : 0) + k + nl;
  d.X1.resize(n, p);
  d.X2.resize(n, p);
  d.y1.resize(n);
  d.y2.resize(n);
  d.cluster.resize(n);
  Eigen::Index r = 0;
  for (std::size_t h = 0; h < panel.size(); ++h) {
    const auto& hh = panel.households[h];
    for (int t = 1; t <= T; ++t, ++r) {
      const Cell prev = hh.seq.at(t - 1);
      Eigen::Index c = 0;
      if (lags.intercept) {
        d.X1(r, c) = 1.0;
        d.X2(r, c) = 1.0;
        ++c;
      }
      if (k > 0) {
        d.X1.row(r).segment(c, k) = hh.x1.row(t);
        d.X2.row(r).segment(c, k) = hh.x2.row(t);
        c += k;
      }
      // equation 1 lags: (y1, y2); equation 2 lags: (y1, y2)
      if (lags.own_lag && lags.cross_lag) {
        d.X1(r, c) = prev.y1;
        d.X1(r, c + 1) = prev.y2;
        d.X2(r, c) = prev.y1;
        d.X2(r, c + 1) = prev.y2;
      } else if (lags.own_lag) {
        d.X1(r, c) = prev.y1;
        d.X2(r, c) = prev.y2;
      } else if (lags.cross_lag) {
        d.X1(r, c) = prev.y2;
        d.X2(r, c) = prev.y1;
      }
      d.y1[r] = static_cast<std::uint8_t>(hh.seq.at(t).y1);
      d.y2[r] = static_cast<std::uint8_t>(hh.seq.at(t).y2);
      d.cluster[r] = h;
    }
  }
  if (lags.intercept) {
    d.names1.push_back("const1");
    d.names2.push_back("const2");
  }
  for (const auto& s : covariate_names("b1_", k)) d.names1.push_back(s);
  for (const auto& s : covariate_names("b2_", k)) d.names2.push_back(s);
  if (lags.own_lag && lags.cross_lag) {
    d.names1.insert(d.names1.end(), {"gamma11", "gamma12"});
    d.names2.insert(d.names2.end(), {"gamma21", "gamma22"});
  } else if (lags.own_lag) {
    d.names1.push_back("gamma11");
    d.names2.push_back("gamma22");
  } else if (lags.cross_lag) {
    d.names1.push_back("gamma12");
    d.names2.push_back("gamma21");
  }
  return d;
}

double ss_loglik(const SSData& data, const Vector& theta, Vector* grad) {
  return loglik_impl<true>(data, theta, grad);
}

double ss_loglik_serial(const SSData& data, const Vector& theta, Vector* grad) {
  return loglik_impl<false>(data, theta, grad);
}

Matrix ss_scores(const SSData& d, const Vector& theta) {
  const auto n = static_cast<Eigen::Index>(d.rows());
  Matrix S(n, d.dim());
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    Acc a;
    a.g = Vector::Zero(d.dim());
    accumulate_rows(d, theta, static_cast<std::size_t>(i), static_cast<std::size_t>(i) + 1, a);
    S.row(i) = a.g.transpose();
  }
  return S;
}

Matrix ss_information(const SSData& d, const Vector& theta) {
  const auto p1 = d.X1.cols(), p2 = d.X2.cols();
  const Eigen::Index dim = d.dim();
  const auto b1 = theta.head(p1);
  const auto b2 = theta.segment(p1, p2);
  const double rho = theta[p1 + p2];
  auto fn = [&](std::size_t begin, std::size_t end, Matrix& info) {
    Matrix J = Matrix::Zero(3, dim);
    Eigen::Matrix3d C;
    for (std::size_t i = begin; i < end; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const double z1 = p1 > 0 ? d.X1.row(r).dot(b1) : 0.0;
      const double z2 = p2 > 0 ? d.X2.row(r).dot(b2) : 0.0;
      const auto lc = kernel::log_cells(z1, z2, rho);
      const double p11 = std::exp(lc[3]);
      const double q1 = std::exp(lc[2]) + p11, q2 = std::exp(lc[1]) + p11;
      C << q1 * (1 - q1), p11 - q1 * q2, p11 * (1 - q1), p11 - q1 * q2, q2 * (1 - q2),
          p11 * (1 - q2), p11 * (1 - q1), p11 * (1 - q2), p11 * (1 - p11);
      if (p1 > 0) J.row(0).head(p1) = d.X1.row(r);
      if (p2 > 0) J.row(1).segment(p1, p2) = d.X2.row(r);
      J(2, dim - 1) = 1.0;
      info.noalias() += J.transpose() * C * J;
    }
  };
  return parallel::chunked_reduce(d.rows(), kChunk, Matrix::Zero(dim, dim).eval(), fn);
}

FitResult fit_ss(const SSData& data, const OptimOptions& opts) {
  data.validate();
  ObjectiveFn obj = [&](const Vector& th, Vector* g) {
    const double f = ss_loglik(data, th, g);
    if (g) *g = -*g;
    return -f;
  };
  auto res = minimize_bfgs(obj, Vector::Zero(data.dim()), opts);
  // Newton polish with the exact information; the objective is concave.
  if (res.converged && !res.separation) {
    for (int k = 0; k < 5; ++k) {
      const Matrix info = ss_information(data, res.x) / static_cast<double>(data.rows());
      const Eigen::LDLT<Matrix> ldlt(info);
      if (ldlt.info() != Eigen::Success) break;
      const Vector step = ldlt.solve(-res.grad);
      Vector g;
      const double f = obj(res.x + step, &g);
      // near the optimum the value is flat to rounding; judge by the gradient
      if (!std::isfinite(f) || !(g.cwiseAbs().maxCoeff() < res.grad.cwiseAbs().maxCoeff())) break;
      res.x += step;
      res.value = f;
      res.grad = g;
      if (step.cwiseAbs().maxCoeff() <= 1e-14 * std::max(1.0, res.x.cwiseAbs().maxCoeff())) break;
    }
  }
  FitResult fit;
  fit.names = data.parameter_names();
  fit.estimates = res.x;
  fit.loglik = -res.value * static_cast<double>(data.rows());
  fit.converged = res.converged;
  fit.separation = res.separation;
  fit.iterations = res.iterations;
  fit.message = res.message;
  fit.hessian = ss_information(data, res.x);
  try {
    fit.covariance = invert_information(fit.hessian);
  } catch (const InvalidInput&) {
    fit.covariance = Matrix::Constant(data.dim(), data.dim(), std::numeric_limits<double>::quiet_NaN());
    fit.converged = false;
    fit.message += "; singular information matrix";
  }
  fit.diagnostics["observations"] = static_cast<double>(data.rows());
  fit.diagnostics["scaled_gradient"] = scaled_gradient_norm(res.x, res.value, res.grad);
  return fit;
}

FitResult fit_static_ss(const Panel& panel, bool intercept, const OptimOptions& opts) {
  return fit_ss(static_rows(panel, intercept), opts);
}

FitResult fit_dynamic_ss(const Panel& panel, const LagStructure& lags, const OptimOptions& opts) {
  return fit_ss(dynamic_rows(panel, lags), opts);
}

double logit_loglik(const std::vector<std::uint8_t>& y, const Matrix& X, const Vector& b, Vector* grad) {
  const auto n = static_cast<Eigen::Index>(y.size());
  const Vector z = X * b;
  double f = 0.0;
  Vector resid(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    // log Lambda(z) = -log(1 + e^-z)
    const double lse = z[i] > 0 ? z[i] + std::log1p(std::exp(-z[i])) : std::log1p(std::exp(z[i]));
    f += y[i] * z[i] - lse;
    resid[i] = y[i] - std::exp(z[i] - lse);
  }
  if (grad) *grad = X.transpose() * resid / static_cast<double>(n);
  return f / static_cast<double>(n);
}

FitResult fit_logit(const std::vector<std::uint8_t>& y, const Matrix& X,
                    const std::vector<std::string>& names, const OptimOptions& opts) {
  if (y.empty() || X.rows() != static_cast<Eigen::Index>(y.size()))
    throw InvalidInput("logit data dimensions");
  Eigen::ColPivHouseholderQR<Matrix> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < X.cols()) throw InvalidInput("design matrix is rank deficient");
  ObjectiveFn obj = [&](const Vector& b, Vector* g) {
    const double f = logit_loglik(y, X, b, g);
    if (g) *g = -*g;
    return -f;
  };
  const auto res = minimize_bfgs(obj, Vector::Zero(X.cols()), opts);
  FitResult fit;
  fit.names = names;
  fit.estimates = res.x;
  fit.loglik = -res.value * static_cast<double>(y.size());
  fit.converged = res.converged;
  fit.separation = res.separation;
  fit.iterations = res.iterations;
  fit.message = res.message;
  const Vector z = X * res.x;
  const Vector w = z.unaryExpr([](double v) {
    const double p = 1.0 / (1.0 + std::exp(-v));
    return p * (1.0 - p);
  });
  fit.hessian = X.transpose() * w.asDiagonal() * X;
  fit.covariance = invert_information(fit.hessian);
  return fit;
}

double rho_from_cells(double p11, double p10, double p01, double p00) {
  for (double p : {p11, p10, p01, p00})
    if (!(p > 0.0) || !std::isfinite(p)) throw DegenerateCell("every cell probability must be positive");
  if (std::abs(p11 + p10 + p01 + p00 - 1.0) > 1e-8) throw InvalidInput("cell probabilities must sum to 1");
  return std::log(p11) + std::log(p00) - std::log(p01) - std::log(p10);
}

double rho_from_counts(double n11, double n10, double n01, double n00, double smoothing) {
  const double a = n11 + smoothing, b = n10 + smoothing, c = n01 + smoothing, d = n00 + smoothing;
  const double tot = a + b + c + d;
  if (!(tot > 0.0)) throw DegenerateCell("no observations");
  return rho_from_cells(a / tot, b / tot, c / tot, d / tot);
}

double rho_to_correlation(double rho) { return std::tanh(rho / 4.0); }

Matrix clustered_vcov(const Matrix& scores, const Matrix& info, const std::vector<std::size_t>& cluster) {
  if (static_cast<std::size_t>(scores.rows()) != cluster.size())
    throw InvalidInput("one cluster id per score row is required");
  const Matrix Hinv = invert_information(info);
  std::vector<std::size_t> order(cluster.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return cluster[a] < cluster[b]; });
  Matrix meat = Matrix::Zero(scores.cols(), scores.cols());
  Vector s = Vector::Zero(scores.cols());
  for (std::size_t k = 0; k < order.size(); ++k) {
    s += scores.row(static_cast<Eigen::Index>(order[k])).transpose();
    if (k + 1 == order.size() || cluster[order[k + 1]] != cluster[order[k]]) {
      meat.noalias() += s * s.transpose();
      s.setZero();
    }
  }
  const Matrix V = Hinv * meat * Hinv;
  return 0.5 * (V + V.transpose());
}

Matrix clustered_vcov(const FitResult& fit, const SSData& data) {
  if (!fit.converged) throw InvalidInput("clustered covariance requires a converged fit");
  return clustered_vcov(ss_scores(data, fit.estimates), fit.hessian, data.cluster);
}

}  // namespace bivlogit
