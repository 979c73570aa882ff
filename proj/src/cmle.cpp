#include "bivlogit/cmle.hpp"

#include "bivlogit/error.hpp"
#include "bivlogit/parallel.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <unordered_map>

namespace bivlogit {

std::uint64_t SufficientStat::key() const {
  std::uint64_t k = static_cast<std::uint64_t>(initial.index());
  k = (k << 8) | static_cast<std::uint64_t>(mid_sum1);
  k = (k << 8) | static_cast<std::uint64_t>(mid_sum2);
  k = (k << 8) | static_cast<std::uint64_t>(mid_cross);
  k = (k << 1) | (restricted ? 1u : 0u);
  k = (k << 3) | static_cast<std::uint64_t>(restricted ? tail_sum : tail.index());
  return k;
}

SufficientStat sufficient_stat(const PairSequence& seq, bool restricted) {
  const int T = seq.periods();
  if (T < 1) throw InvalidInput("sufficient_stat requires T >= 1");
  SufficientStat s;
  s.initial = seq.initial();
  s.restricted = restricted;
  for (int t = 1; t < T; ++t) {
    const Cell c = seq.at(t);
    s.mid_sum1 += c.y1;
    s.mid_sum2 += c.y2;
    s.mid_cross += c.y1 * c.y2;
  }
  const Cell last = seq.at(T);
  if (restricted)
    s.tail_sum = last.y1 + last.y2;
  else
    s.tail = last;
  return s;
}

ComparisonClass comparison_class(const SufficientStat& stat, int T) {
  ComparisonClass cls;
  cls.stat = stat;
  for (auto& seq : enumerate_sequences(T, stat.initial))
    if (sufficient_stat(seq, stat.restricted) == stat) cls.members.push_back(std::move(seq));
  return cls;
}

std::array<int, 5> cmle_features(const PairSequence& seq) {
  std::array<int, 5> f{};
  for (int t = 1; t <= seq.periods(); ++t) {
    const Cell p = seq.at(t - 1), c = seq.at(t);
    f[0] += c.y1 * p.y1;
    f[1] += c.y1 * p.y2;
    f[2] += c.y2 * p.y1;
    f[3] += c.y2 * p.y2;
    f[4] += c.y2;
  }
  return f;
}

ClassTable::ClassTable(int T, bool restricted) : T_(T), restricted_(restricted) {
  if (T < 1 || T > 8) throw InvalidInput("comparison tables support 1 <= T <= 8");
  const std::uint32_t n = num_continuations(T);
  class_of_.resize(4 * static_cast<std::size_t>(n));
  features_.resize(class_of_.size());
  std::unordered_map<std::uint64_t, int> ids;
  for (int init = 0; init < 4; ++init) {
    for (std::uint32_t code = 0; code < n; ++code) {
      const auto seq = PairSequence::from_code(T, Cell::from_index(init), code);
      const std::size_t idx = static_cast<std::size_t>(init) * n + code;
      const auto [it, fresh] =
          ids.emplace(sufficient_stat(seq, restricted).key(), static_cast<int>(members_.size()));
      if (fresh) members_.emplace_back();
      class_of_[idx] = it->second;
      members_[it->second].push_back(static_cast<std::uint32_t>(idx));
      features_[idx] = cmle_features(seq);
    }
  }
}

std::shared_ptr<const ClassTable> ClassTable::get(int T, bool restricted) {
  static std::mutex mutex;
  static std::map<std::pair<int, bool>, std::shared_ptr<const ClassTable>> cache;
  const std::lock_guard lock(mutex);
  auto& slot = cache[{T, restricted}];
  if (!slot) slot = std::make_shared<const ClassTable>(T, restricted);
  return slot;
}

std::size_t ClassTable::index(const PairSequence& seq) const {
  if (seq.periods() != T_) throw InvalidInput("sequence length does not match the table");
  return static_cast<std::size_t>(seq.initial().index()) * num_continuations(T_) + seq.code();
}

namespace {

double class_score(const std::array<int, 5>& f, const Vector& theta) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < theta.size(); ++j) s += theta[j] * f[j];
  return s;
}

double cond_loglik(const CommonParams& params, const PairSequence& seq, bool restricted) {
  const int T = seq.periods();
  if (T < 3) throw InvalidInput("conditional likelihood requires T >= 3");
  const auto table = ClassTable::get(T, restricted);
  Vector theta(restricted ? 5 : 4);
  theta.head(4) << params.gamma(0, 0), params.gamma(0, 1), params.gamma(1, 0), params.gamma(1, 1);
  if (restricted) theta[4] = params.kappa;
  const std::size_t idx = table->index(seq);
  const auto& members = table->members(table->class_of(idx));
  if (members.size() == 1) return 0.0;
  double m = -INFINITY;
  std::vector<double> s(members.size());
  for (std::size_t k = 0; k < members.size(); ++k) {
    s[k] = class_score(table->features(members[k]), theta);
    m = std::max(m, s[k]);
  }
  double sum = 0.0;
  for (double v : s) sum += std::exp(v - m);
  return class_score(table->features(idx), theta) - m - std::log(sum);
}

}  // namespace

double cond_loglik_unrestricted(const CommonParams& params, const PairSequence& seq) {
  return cond_loglik(params, seq, false);
}

double cond_loglik_restricted(const CommonParams& params, const PairSequence& seq) {
  return cond_loglik(params, seq, true);
}

CmleProblem::CmleProblem(const Panel& panel, bool restricted) : restricted_(restricted) {
  const int T = panel.periods();
  if (panel.empty()) throw NoInformation("empty panel");
  if (T < 3) throw NoInformation("conditional likelihood is constant when T < 3");
  if (panel.covariate_dim() > 0)
    throw InvalidInput("conditional likelihood is implemented for models without covariates");
  table_ = ClassTable::get(T, restricted);
  const auto& tab = *table_;
  const std::size_t u = tab.universe();
  auto fn = [&](std::size_t b, std::size_t e, Vector& c) {
    for (std::size_t i = b; i < e; ++i) c[static_cast<Eigen::Index>(tab.index(panel.households[i].seq))] += 1.0;
  };
  const Vector counts = parallel::chunked_reduce(panel.size(), 8192, Vector::Zero(u).eval(), fn);
  counts_.assign(counts.data(), counts.data() + u);
  households_ = panel.size();
  std::vector<char> used(tab.num_classes(), 0);
  for (std::size_t i = 0; i < u; ++i) {
    if (counts_[i] == 0.0) continue;
    const int cls = tab.class_of(i);
    if (tab.members(cls).size() == 1) {
      singletons_ += static_cast<std::size_t>(counts_[i]);
    } else if (!used[cls]) {
      used[cls] = 1;
      active_classes_.push_back(cls);
    }
  }
}

std::vector<std::string> CmleProblem::names() const {
  std::vector<std::string> n{"gamma11", "gamma12", "gamma21", "gamma22"};
  if (restricted_) n.push_back("kappa");
  return n;
}

double CmleProblem::loglik(const Vector& theta, Vector* grad, Matrix* info) const {
  const Eigen::Index d = dim();
  if (theta.size() != d) throw InvalidInput("parameter vector has the wrong length");
  const auto& tab = *table_;
  double ll = 0.0;
  if (grad) grad->setZero(d);
  if (info) info->setZero(d, d);
  std::vector<double> s;
  for (int cls : active_classes_) {
    const auto& members = tab.members(cls);
    s.resize(members.size());
    double m = -INFINITY, total = 0.0;
    for (std::size_t k = 0; k < members.size(); ++k) {
      s[k] = class_score(tab.features(members[k]), theta);
      m = std::max(m, s[k]);
      total += counts_[members[k]];
    }
    double sum = 0.0;
    for (double& v : s) sum += (v = std::exp(v - m));
    const double lse = m + std::log(sum);
    Vector mean = Vector::Zero(d);
    Matrix second = Matrix::Zero(d, d);
    for (std::size_t k = 0; k < members.size(); ++k) {
      const auto& f = tab.features(members[k]);
      const double c = counts_[members[k]];
      if (c > 0.0) ll += c * (class_score(f, theta) - lse);
      if (!grad && !info) continue;
      const double w = s[k] / sum;
      Vector fv(d);
      for (Eigen::Index j = 0; j < d; ++j) fv[j] = f[j];
      mean += w * fv;
      if (grad && c > 0.0) *grad += c * fv;
      if (info) second += w * fv * fv.transpose();
    }
    if (grad) *grad -= total * mean;
    if (info) *info += total * (second - mean * mean.transpose());
  }
  return ll;
}

FitResult fit_cmle(const Panel& panel, bool restricted, const OptimOptions& opts) {
  const CmleProblem prob(panel, restricted);
  if (prob.informative_households() == 0)
    throw NoInformation("every household lies in a singleton comparison class");
  const double scale = static_cast<double>(prob.informative_households());
  ObjectiveFn obj = [&](const Vector& th, Vector* g) {
    const double f = prob.loglik(th, g);
    if (g) *g /= -scale;
    return -f / scale;
  };
  const auto res = minimize_bfgs(obj, Vector::Zero(prob.dim()), opts);
  FitResult fit;
  fit.names = prob.names();
  fit.estimates = res.x;
  fit.loglik = -res.value * scale;
  fit.converged = res.converged;
  fit.separation = res.separation;
  fit.iterations = res.iterations;
  fit.message = res.message;
  Matrix info;
  prob.loglik(res.x, nullptr, &info);
  fit.hessian = info;
  try {
    fit.covariance = invert_information(info);
  } catch (const InvalidInput&) {
    fit.covariance = Matrix::Constant(prob.dim(), prob.dim(), NAN);
    fit.converged = false;
    fit.message += "; singular information matrix";
  }
  fit.diagnostics["households"] = static_cast<double>(prob.households());
  fit.diagnostics["singleton_households"] = static_cast<double>(prob.singleton_households());
  fit.diagnostics["informative_households"] = static_cast<double>(prob.informative_households());
  return fit;
}

}  // namespace bivlogit
