#include <benchmark/benchmark.h>

#include "coedit/resolution.hpp"
#include "coedit/rng.hpp"

using namespace coedit;

namespace {

struct Workload {
  std::vector<Vec3> positions;
  std::vector<TickInput> inputs;
  OverlapPartition groups;
};

// Two grabs, rotate and translate, over groups that share a fifth of the vertices.
Workload make_workload(std::size_t n) {
  Rng rng(1234);
  Workload w;
  w.positions.resize(n);
  for (Vec3 &p : w.positions) {
    p = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
  }
  VertexSet a;
  VertexSet b;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < n * 6 / 10) {
      a.insert(static_cast<VertexId>(i));
    }
    if (i >= n * 4 / 10) {
      b.insert(static_cast<VertexId>(i));
    }
  }
  TickInput rot;
  rot.user = 0;
  rot.op = OperationKind::Rotate;
  rot.seq = 1;
  rot.pivot = {0.1, 0.0, -0.1};
  rot.delta = TransformDelta::rotate(Quat::from_axis_angle(normalized(Vec3{1, 2, 3}), 0.01));
  rot.group.assign(a.begin(), a.end());
  TickInput move;
  move.user = 1;
  move.op = OperationKind::Translate;
  move.seq = 2;
  move.delta = TransformDelta::translate({0.001, 0.002, -0.001});
  move.group.assign(b.begin(), b.end());
  w.inputs = {rot, move};
  w.groups = partition(a, b);
  return w;
}

template <auto Kernel> void bench(benchmark::State &state) {
  const Workload w = make_workload(static_cast<std::size_t>(state.range(0)));
  const StrategyConfig strategy{StrategyKind::Averaging};
  for (auto _ : state) {
    benchmark::DoNotOptimize(Kernel(w.positions, w.inputs, w.groups, strategy));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

} // namespace

BENCHMARK(bench<resolve_tick>)->Name("resolve_tick/serial")->RangeMultiplier(8)->Range(8, 1 << 18);
BENCHMARK(bench<resolve_tick_parallel>)
    ->Name("resolve_tick/parallel")
    ->RangeMultiplier(8)
    ->Range(8, 1 << 18);

BENCHMARK_MAIN();
