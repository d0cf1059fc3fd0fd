#include "dpdtest/dpdtest.hpp"

#include <benchmark/benchmark.h>

using namespace dpdtest;

namespace {

ObservationSet sample(Index n, std::uint64_t seed) {
  const Matrix x = gen_design(n, seed);
  const Vector y = x * (Vector(2) << 3.0, 2.0).finished() + gen_errors_contaminated(n, 0.1, seed + 1);
  return {y, x};
}

void BM_DpdClosedForm(benchmark::State& state) {
  const NormalLinearModel model(gen_design(4, 1));
  const ParamPoint a = ParamPoint::regression((Vector(2) << 3.0, 2.0).finished(), 1.5);
  const ParamPoint b = ParamPoint::regression((Vector(2) << 3.2, 1.9).finished(), 1.7);
  for (auto _ : state) benchmark::DoNotOptimize(dpd(model, 2, a, b, 0.5).value);
}
BENCHMARK(BM_DpdClosedForm);

void BM_DpdQuadrature(benchmark::State& state) {
  const NormalLinearModel model(gen_design(4, 1));
  const ParamPoint a = ParamPoint::regression((Vector(2) << 3.0, 2.0).finished(), 1.5);
  const ParamPoint b = ParamPoint::regression((Vector(2) << 3.2, 1.9).finished(), 1.7);
  for (auto _ : state) benchmark::DoNotOptimize(dpd(model, 2, a, b, 0.5, true).value);
}
BENCHMARK(BM_DpdQuadrature);

void BM_MdpdeFit(benchmark::State& state) {
  const ObservationSet data = sample(state.range(0), 7);
  const NormalLinearModel model(*data.x);
  for (auto _ : state) benchmark::DoNotOptimize(mdpde_fit(model, data, 0.5).objective_value);
}
BENCHMARK(BM_MdpdeFit)->Arg(50)->Arg(100)->Arg(400)->Unit(benchmark::kMicrosecond);

void BM_RunTest(benchmark::State& state) {
  const ObservationSet data = sample(state.range(0), 9);
  const NormalLinearModel model(*data.x);
  const Restriction h0 = Restriction::first_components((Vector(2) << 3.0, 2.0).finished(), 2);
  for (auto _ : state) benchmark::DoNotOptimize(run_test(model, data, h0, 0.5, 0.5, 0.05).statistic);
}
BENCHMARK(BM_RunTest)->Arg(50)->Arg(100)->Arg(400)->Unit(benchmark::kMicrosecond);

void BM_CfInversion(benchmark::State& state) {
  const ChiSqMixture mix((Vector(3) << 0.2, 0.7, 2.0).finished(), (Vector(3) << 0.5, 0.0, 1.5).finished());
  for (auto _ : state) benchmark::DoNotOptimize(cf_inversion_survival(mix, 4.0));
}
BENCHMARK(BM_CfInversion)->Unit(benchmark::kMicrosecond);

void BM_SeriesPower(benchmark::State& state) {
  const ChiSqMixture mix((Vector(3) << 0.2, 0.7, 2.0).finished(), (Vector(3) << 0.5, 0.0, 1.5).finished());
  for (auto _ : state) benchmark::DoNotOptimize(series_power(mix, 4.0));
}
BENCHMARK(BM_SeriesPower)->Unit(benchmark::kMicrosecond);

void BM_MixtureQuantile(benchmark::State& state) {
  const ChiSqMixture mix((Vector(3) << 0.2, 0.7, 2.0).finished());
  for (auto _ : state) benchmark::DoNotOptimize(mixture_quantile(mix, 0.05));
}
BENCHMARK(BM_MixtureQuantile)->Unit(benchmark::kMicrosecond);

void BM_If2General(benchmark::State& state) {
  const Matrix x = gen_design(state.range(0), 3);
  const ParamPoint theta0 = ParamPoint::regression((Vector(2) << 3.0, 2.0).finished(), 1.7);
  const Vector t = x * theta0.beta() + Vector::Constant(x.rows(), 2.0);
  const Restriction h0 = Restriction::first_components((Vector(1) << 3.0).finished(), 2);
  for (auto _ : state) benchmark::DoNotOptimize(if2_statistic(x, theta0, t, 0.5, 0.5, h0));
}
BENCHMARK(BM_If2General)->Arg(100)->Unit(benchmark::kMicrosecond);

void BM_SimulateCell(benchmark::State& state) {
  SimConfig c;
  c.sample_sizes = {100};
  c.reps = 20;
  c.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(empirical_size_power(c).results.size());
}
BENCHMARK(BM_SimulateCell)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
