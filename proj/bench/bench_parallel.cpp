// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

// Serial versus OpenMP runners for the deployment matrix and the tamper sweep.

#include "islandbridge/matrix.h"
#include "islandbridge/sweep.h"

#include <benchmark/benchmark.h>

namespace
{
  using namespace islandbridge;

  const auto cells = matrix::all_cells();

  void BM_MatrixSerial(benchmark::State& state)
  {
    for (auto _ : state)
      benchmark::DoNotOptimize(matrix::run_cells_serial(cells, 1));
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(cells.size()));
  }

  void BM_MatrixParallel(benchmark::State& state)
  {
    for (auto _ : state)
      benchmark::DoNotOptimize(matrix::run_cells_parallel(cells, 1));
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(cells.size()));
  }

  struct Sweep
  {
    scenario::Built built;
    std::vector<sweep::TamperCase> cases;

    Sweep()
    {
      built = scenario::build(matrix::cell_scenario(*matrix::Cell::from_key("R1T1A1P0B1"), 1));
      auto all = sweep::tamper_cases(built);
      for (size_t i = 0; i < all.size(); i += 4)
        cases.push_back(std::move(all[i]));
    }
  };

  const Sweep& sweep_fixture()
  {
    static const Sweep s;
    return s;
  }

  void BM_TamperSerial(benchmark::State& state)
  {
    const auto& s = sweep_fixture();
    for (auto _ : state)
      benchmark::DoNotOptimize(sweep::run_tamper_serial(s.built, s.cases));
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(s.cases.size()));
  }

  void BM_TamperParallel(benchmark::State& state)
  {
    const auto& s = sweep_fixture();
    for (auto _ : state)
      benchmark::DoNotOptimize(sweep::run_tamper_parallel(s.built, s.cases));
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(s.cases.size()));
  }
}

BENCHMARK(BM_MatrixSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_MatrixParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_TamperSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_TamperParallel)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
