#include "drape/collider.hpp"
#include "drape/objective.hpp"
#include "drape/rest_atlas.hpp"
#include "drape/sampler.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace drape;

std::vector<StructureSample> samples(int n) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.05, 0.95), a(0.0, 2 * kPi / 3);
  std::vector<StructureSample> s(n);
  for (auto& x : s) x = {Vec2(u(rng), u(rng)), a(rng)};
  return s;
}

void BM_BatchLossAndGradient(benchmark::State& state) {
  const RestMapping rest(make_square_cloth(64, 1.0, 0.7));
  const ColliderMesh sphere = make_icosphere(Vec3(0.5, 0.5, 0.5), 0.25, 5);
  const auto model = init_model<float>(ModelConfig{}, 0);
  const auto batch = samples(static_cast<int>(state.range(0)));
  GradientBuffer<float> grad(model);
  for (auto _ : state) {
    grad.zero();
    auto r = evaluate_batch<float>(model, rest, &sphere, batch, LossConfig{}, BatchOptions{}, &grad);
    benchmark::DoNotOptimize(r.loss.weighted_total);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BatchLossAndGradient)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_EstimateCellLosses(benchmark::State& state) {
  const RestMapping rest(make_square_cloth(64, 1.0, 0.7));
  const ColliderMesh sphere = make_icosphere(Vec3(0.5, 0.5, 0.5), 0.25, 5);
  const auto model = init_model<float>(ModelConfig{}, 0);
  const int res = static_cast<int>(state.range(0));
  Rng rng(1);
  for (auto _ : state) {
    auto pdf = estimate_cell_losses(model, rest, &sphere, res, res, LossConfig{}, LossMask{}, rng);
    benchmark::DoNotOptimize(pdf.probs.data());
  }
}
BENCHMARK(BM_EstimateCellLosses)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_LloydRelax(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec2> pts(static_cast<std::size_t>(state.range(0)));
  for (auto& p : pts) p = Vec2(u(rng), u(rng));
  for (auto _ : state) {
    auto out = lloyd_relax(pts, 1);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_LloydRelax)->Arg(100)->Arg(1024)->Unit(benchmark::kMillisecond);

}  // namespace
