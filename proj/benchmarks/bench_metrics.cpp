#include <benchmark/benchmark.h>

#include "driftbench/drift_metrics.hpp"
#include "driftbench/random.hpp"

namespace {

using namespace driftbench;

void BM_PathLength(benchmark::State& state) {
  Rng rng(4);
  ResidualSeries s;
  for (std::int64_t i = 0; i < 52560; ++i) {
    ResidualEntry e;
    e.timestamp = from_unix(600 * i);
    e.residual = rng.normal() + (i > 30000 ? 1.0 : 0.0);
    s.entries.push_back(e);
  }
  const auto n_steps = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        drift_path_length(s, from_unix(600 * 29000), from_unix(600 * 31000), n_steps, Seconds{86400 * 3}));
  }
}
BENCHMARK(BM_PathLength)->Arg(1)->Arg(8)->Arg(32);

}  // namespace
