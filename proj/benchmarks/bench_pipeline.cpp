#include <benchmark/benchmark.h>

#include "sacflow/field.hpp"
#include "sacflow/flow.hpp"
#include "sacflow/ldp.hpp"
#include "sacflow/pde.hpp"
#include "sacflow/transform.hpp"

using namespace sacflow;

namespace {

Box unit_box() {
  Box b;
  b.dim = 1;
  return b;
}

struct Fixture {
  ModeSet spec = ModeSet::sine_law(unit_box(), 8, 0.5);
  TimeGrid grid{0.1, 1000};
  InitialData u0 = InitialData::tanh_profile(0.5, 0.05);

  Lattice lattice(const benchmark::State& state) const { return Lattice(unit_box(), {static_cast<int>(state.range(0)), 0}); }
  FieldPath path() const { return sample_path(spec, grid, 0.1, 20261019); }
};

void BM_SamplePath(benchmark::State& state) {
  const Fixture f;
  for (auto _ : state) benchmark::DoNotOptimize(sample_path(f.spec, f.grid, 0.1, 7));
}

void BM_Stratonovich(benchmark::State& state) {
  const Fixture f;
  const FieldPath p = f.path();
  const Lattice lat = f.lattice(state);
  for (auto _ : state) benchmark::DoNotOptimize(integrate_stratonovich(f.spec, p, lat));
}

void BM_Invert(benchmark::State& state) {
  const Fixture f;
  const FlowPath flow = integrate_stratonovich(f.spec, f.path(), f.lattice(state));
  for (auto _ : state) benchmark::DoNotOptimize(invert_flow(flow));
}

void BM_Coefficients(benchmark::State& state) {
  const Fixture f;
  const FlowPath flow = integrate_stratonovich(f.spec, f.path(), f.lattice(state));
  const FlowPath inverse = invert_flow(flow);
  for (auto _ : state) benchmark::DoNotOptimize(build_coefficients(flow, inverse));
}

void BM_SolveTransformed(benchmark::State& state) {
  const Fixture f;
  const FlowPath flow = integrate_stratonovich(f.spec, f.path(), f.lattice(state));
  const CoefficientField coeffs = build_coefficients(flow, invert_flow(flow));
  for (auto _ : state) benchmark::DoNotOptimize(solve_transformed(coeffs, f.u0));
}

void BM_SolveDirect(benchmark::State& state) {
  const Fixture f;
  const FieldPath p = f.path();
  const Lattice lat = f.lattice(state);
  for (auto _ : state) benchmark::DoNotOptimize(solve_direct_spde(f.spec, p, lat, f.u0));
}

void BM_ScanSample(benchmark::State& state) {
  const Fixture f;
  EventSpec e;
  e.observable = Observable::interface_position;
  e.threshold = 0.1;
  e.direction = Direction::two_sided;
  e.reference = 0.5;
  const Lattice lat(unit_box(), {64, 0});
  const Route route = state.range(0) == 0 ? Route::flow : Route::direct;
  const FieldPath p = f.path();
  for (auto _ : state) benchmark::DoNotOptimize(sample_observable(e, f.spec, lat, f.u0, p, route));
  state.SetLabel(to_string(route));
}

}  // namespace

BENCHMARK(BM_SamplePath)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Stratonovich)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Invert)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Coefficients)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SolveTransformed)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SolveDirect)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScanSample)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
