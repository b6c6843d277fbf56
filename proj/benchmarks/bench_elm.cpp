#include <benchmark/benchmark.h>

#include "driftbench/elm.hpp"
#include "driftbench/ensemble.hpp"
#include "driftbench/random.hpp"
#include "driftbench/scada.hpp"

namespace {

using namespace driftbench;

void BM_TrainElm(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  Rng rng(3);
  Eigen::MatrixXd x(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = rng.uniform(-2.0, 2.0);
    y[i] = x(i, 0) * x(i, 1) + rng.normal();
  }
  ElmParams p;
  p.hidden_width = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(train_elm(x, y, p));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_TrainElm)->Args({500, 100})->Args({3456, 200})->Unit(benchmark::kMillisecond);

void BM_EnsembleResiduals(benchmark::State& state) {
  GeneratorConfig g;
  g.n_records = 52560;
  const auto series = generate_series(g, {}).series;
  const auto model = train_ensemble(series, EnsembleConfig{}, 1);
  for (auto _ : state) benchmark::DoNotOptimize(ensemble_residuals(model, series));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(series.records.size()));
}
BENCHMARK(BM_EnsembleResiduals)->Unit(benchmark::kMillisecond);

}  // namespace
