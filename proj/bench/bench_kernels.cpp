#include <benchmark/benchmark.h>

#include "bivlogit/cre.hpp"
#include "bivlogit/discovery.hpp"
#include "bivlogit/pooled.hpp"
#include "bivlogit/simulate.hpp"

#include <omp.h>

using namespace bivlogit;

namespace {

const CommonParams& truth() {
  static const auto p = CommonParams::dynamic(2.5, -1.5, -1.5, 2.5, 1.0, 2.0);
  return p;
}

const Panel& panel() {
  static const Panel p = simulate_panel(truth(), HeterogeneityDist::correctly_specified(), 100000, 3, true, 11);
  return p;
}

const SSData& rows() {
  static const SSData d = dynamic_rows(panel());
  return d;
}

void BM_ss_loglik_serial(benchmark::State& st) {
  const Vector th = Vector::Constant(rows().dim(), 0.1);
  Vector g;
  for (auto _ : st) benchmark::DoNotOptimize(ss_loglik_serial(rows(), th, &g));
}

void BM_ss_loglik_parallel(benchmark::State& st) {
  const Vector th = Vector::Constant(rows().dim(), 0.1);
  Vector g;
  for (auto _ : st) benchmark::DoNotOptimize(ss_loglik(rows(), th, &g));
}

const CreProblem& cre_problem() {
  static const CreProblem p = CreProblem::from_panel(panel(), QuadratureRule::gauss_hermite(64));
  return p;
}

void BM_cre_loglik_serial(benchmark::State& st) {
  const Vector th = Vector::Constant(kCreDim, 0.2);
  Vector g;
  for (auto _ : st) benchmark::DoNotOptimize(cre_problem().loglik_serial(th, &g));
}

void BM_cre_loglik_parallel(benchmark::State& st) {
  const Vector th = Vector::Constant(kCreDim, 0.2);
  Vector g;
  for (auto _ : st) benchmark::DoNotOptimize(cre_problem().loglik(th, &g));
}

void BM_simulate_serial(benchmark::State& st) {
  for (auto _ : st)
    benchmark::DoNotOptimize(simulate_panel_serial(truth(), HeterogeneityDist::correctly_specified(), 20000, 3, true, 3));
}

void BM_simulate_parallel(benchmark::State& st) {
  for (auto _ : st)
    benchmark::DoNotOptimize(simulate_panel(truth(), HeterogeneityDist::correctly_specified(), 20000, 3, true, 3));
}

CountConfig count_config() {
  CountConfig c;
  c.T = 4;
  c.restricted = true;
  return c;
}

void BM_probability_matrix_serial(benchmark::State& st) {
  const auto c = count_config();
  const auto p = generic_params(c, 1);
  const auto a = draw_fixed_effects(c, p.kappa, c.default_alpha_draws(), 1);
  for (auto _ : st) benchmark::DoNotOptimize(probability_matrix_serial(c, p, a));
}

void BM_probability_matrix_parallel(benchmark::State& st) {
  const auto c = count_config();
  const auto p = generic_params(c, 1);
  const auto a = draw_fixed_effects(c, p.kappa, c.default_alpha_draws(), 1);
  for (auto _ : st) benchmark::DoNotOptimize(probability_matrix(c, p, a));
}

}  // namespace

BENCHMARK(BM_ss_loglik_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ss_loglik_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_cre_loglik_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_cre_loglik_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_simulate_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_simulate_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_probability_matrix_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_probability_matrix_parallel)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  benchmark::Initialize(&argc, argv);
  benchmark::AddCustomContext("omp_threads", std::to_string(omp_get_max_threads()));
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
}
