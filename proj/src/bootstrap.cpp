#include "bivlogit/bootstrap.hpp"

#include "bivlogit/error.hpp"
#include "bivlogit/random.hpp"

#include <cmath>
#include <optional>

namespace bivlogit {

std::vector<std::size_t> resample_indices(std::size_t n, std::uint64_t seed, std::uint64_t replicate) {
  CounterRng rng(seed, replicate, 0, purpose::resample);
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = static_cast<std::size_t>(rng.below(n));
  return idx;
}

BootstrapResult bootstrap_se(const Panel& panel, const PanelEstimator& estimator,
                             const BootstrapOptions& opts) {
  if (opts.replicates < 2) throw InvalidInput("bootstrap needs at least 2 replicates");
  if (panel.empty()) throw InvalidInput("empty panel");
  const int B = opts.replicates;
  std::vector<std::optional<Vector>> out(B);
#pragma omp parallel for schedule(dynamic, 1)
  for (int b = 0; b < B; ++b) {
    const auto rep = static_cast<std::uint64_t>(opts.identical_resamples ? 0 : b);
    try {
      Vector v = estimator(panel.subset(resample_indices(panel.size(), opts.seed, rep)));
      if (v.allFinite()) out[b] = std::move(v);
    } catch (const std::exception&) {
    }
  }
  BootstrapResult res;
  Eigen::Index dim = -1;
  for (const auto& v : out)
    if (v) {
      if (dim < 0) dim = v->size();
      if (v->size() == dim) ++res.used;
    }
  res.dropped = B - res.used;
  res.warning = res.dropped * 10 > B;
  if (res.used < 2) {
    res.message = "fewer than two successful replicates";
    res.warning = true;
    res.se = Vector::Constant(std::max<Eigen::Index>(dim, 0), NAN);
    return res;
  }
  res.draws.resize(res.used, dim);
  Eigen::Index row = 0;
  for (const auto& v : out)
    if (v && v->size() == dim) res.draws.row(row++) = v->transpose();
  const Vector mean = res.draws.colwise().mean();
  const Matrix centred = res.draws.rowwise() - mean.transpose();
  res.se = (centred.colwise().squaredNorm() / static_cast<double>(res.used - 1)).cwiseSqrt().transpose();
  if (res.warning)
    res.message = std::to_string(res.dropped) + " of " + std::to_string(B) + " replicates failed";
  return res;
}

}  // namespace bivlogit
