#pragma once

#include "bivlogit/fit_result.hpp"
#include "bivlogit/optimize.hpp"
#include "bivlogit/simulate.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace bivlogit {

// Stacked observations for the pooled simultaneous logit. Parameters are
// ordered (b1, b2, rho) with b1 acting on X1 and b2 on X2.
struct SSData {
  Matrix X1;
  Matrix X2;
  std::vector<std::uint8_t> y1;
  std::vector<std::uint8_t> y2;
  std::vector<std::size_t> cluster;
  std::vector<std::string> names1;
  std::vector<std::string> names2;

  std::size_t rows() const { return y1.size(); }
  Eigen::Index dim() const { return X1.cols() + X2.cols() + 1; }
  std::vector<std::string> parameter_names() const;
  void validate() const;
};

struct LagStructure {
  bool intercept = true;
  bool own_lag = true;    // gamma11, gamma22
  bool cross_lag = true;  // gamma12, gamma21
};

// Every period 0..T of every household as a cross-sectional observation.
SSData static_rows(const Panel& panel, bool intercept = true);
// Periods 1..T with lagged outcomes as regressors.
SSData dynamic_rows(const Panel& panel, const LagStructure& lags = {});

// Mean log-likelihood and its gradient; chunked OpenMP reduction over rows.
double ss_loglik(const SSData& data, const Vector& theta, Vector* grad);
double ss_loglik_serial(const SSData& data, const Vector& theta, Vector* grad);
// Per-row score contributions (rows x dim).
Matrix ss_scores(const SSData& data, const Vector& theta);
// Observed information of the summed log-likelihood.
Matrix ss_information(const SSData& data, const Vector& theta);

FitResult fit_ss(const SSData& data, const OptimOptions& opts = {});
FitResult fit_static_ss(const Panel& panel, bool intercept = true, const OptimOptions& opts = {});
FitResult fit_dynamic_ss(const Panel& panel, const LagStructure& lags = {}, const OptimOptions& opts = {});

// Binary logit of y on X (X should contain any intercept column).
FitResult fit_logit(const std::vector<std::uint8_t>& y, const Matrix& X,
                    const std::vector<std::string>& names, const OptimOptions& opts = {});
double logit_loglik(const std::vector<std::uint8_t>& y, const Matrix& X, const Vector& b, Vector* grad);

double rho_from_cells(double p11, double p10, double p01, double p00);
// Empirical log odds ratio from counts, with optional Laplace smoothing added to every cell.
double rho_from_counts(double n11, double n10, double n01, double n00, double smoothing = 0.0);
// Correlation of the two outcomes when both marginals are one half.
double rho_to_correlation(double rho);

// Sandwich H^-1 (sum_c s_c s_c') H^-1; info is the observed information.
Matrix clustered_vcov(const Matrix& scores, const Matrix& info, const std::vector<std::size_t>& cluster);
Matrix clustered_vcov(const FitResult& fit, const SSData& data);

}  // namespace bivlogit
