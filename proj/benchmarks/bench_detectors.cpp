#include <benchmark/benchmark.h>

#include "driftbench/detectors.hpp"
#include "driftbench/random.hpp"

namespace {

using namespace driftbench;

void BM_DetectorStream(benchmark::State& state) {
  const auto kind = kAllDetectorKinds[static_cast<std::size_t>(state.range(0))];
  Rng rng(9);
  std::vector<double> values(52560);
  for (auto& v : values) v = rng.normal();
  std::vector<Timestamp> ts(values.size());
  for (std::size_t i = 0; i < ts.size(); ++i) ts[i] = from_unix(static_cast<std::int64_t>(600 * i));
  const auto config = DetectorConfig::defaults(kind);
  for (auto _ : state) benchmark::DoNotOptimize(run_detector(config, values, ts));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(values.size()));
  state.SetLabel(to_string(kind));
}
BENCHMARK(BM_DetectorStream)->DenseRange(0, 9)->Unit(benchmark::kMillisecond);

}  // namespace
