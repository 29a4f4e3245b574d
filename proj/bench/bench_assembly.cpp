#include <benchmark/benchmark.h>

#include <map>

#include "pmlwave/pml.hpp"

using namespace pmlwave;

namespace {

const Mesh& mesh_for(int level) {
  static std::map<int, Mesh> cache;
  auto it = cache.find(level);
  if (it == cache.end()) {
    const double h = 0.1 / (1 << level);
    it = cache.emplace(level, generate_mesh(SurfaceProfile::default_rough(), {2.0, 3.0, h, {}})).first;
  }
  return it->second;
}

AssemblyOptions with(Execution e) {
  AssemblyOptions o;
  o.execution = e;
  return o;
}

template <Execution E>
void BM_Stiffness(benchmark::State& state) {
  const Mesh& m = mesh_for(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(assemble_stiffness(m, with(E)));
  state.counters["triangles"] = m.triangle_count();
}

template <Execution E>
void BM_TimeBlocks(benchmark::State& state) {
  const Mesh& m = mesh_for(static_cast<int>(state.range(0)));
  const auto prof = PmlProfile::constant(2.0, 3.0, 10.0, SigmaHatMode::kIntegral);
  for (auto _ : state) benchmark::DoNotOptimize(assemble_time_blocks(m, prof, with(E)));
  state.counters["triangles"] = m.triangle_count();
}

template <Execution E>
void BM_FrequencySystem(benchmark::State& state) {
  const Mesh& m = mesh_for(static_cast<int>(state.range(0)));
  const auto prof = PmlProfile::constant(2.0, 3.0, 10.0, SigmaHatMode::kIntegral);
  const ComplexVector f = ComplexVector::Ones(m.vertex_count());
  for (auto _ : state) benchmark::DoNotOptimize(assemble_frequency_system(m, prof, {1.0, 2.0}, f, with(E)));
  state.counters["triangles"] = m.triangle_count();
}

}  // namespace

BENCHMARK(BM_Stiffness<Execution::kSerial>)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Stiffness<Execution::kParallel>)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TimeBlocks<Execution::kSerial>)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TimeBlocks<Execution::kParallel>)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FrequencySystem<Execution::kSerial>)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FrequencySystem<Execution::kParallel>)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
