#include "drape/collider.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace drape;

void BM_NearestVertex(benchmark::State& state) {
  const ColliderMesh sphere = make_icosphere(Vec3(0.5, 0.5, 0.5), 0.25, static_cast<int>(state.range(0)));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec3> queries(4096);
  for (auto& q : queries) q = Vec3(u(rng), u(rng), u(rng));
  std::size_t k = 0;
  for (auto _ : state) {
    auto r = sphere.nearest_vertex(queries[k++ % queries.size()]);
    benchmark::DoNotOptimize(r);
  }
  state.counters["vertices"] = static_cast<double>(sphere.vertices().size());
}
BENCHMARK(BM_NearestVertex)->Arg(3)->Arg(5)->Arg(7);

void BM_BuildIndex(benchmark::State& state) {
  const ColliderMesh sphere = make_icosphere(Vec3(0.5, 0.5, 0.5), 0.25, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    SpatialIndex index(sphere.vertices());
    benchmark::DoNotOptimize(index.size());
  }
}
BENCHMARK(BM_BuildIndex)->Arg(5)->Arg(7)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
