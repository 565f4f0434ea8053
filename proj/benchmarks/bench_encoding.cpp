#include "drape/neural_surface.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace drape;

std::vector<Vec2> random_uvs(int n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec2> pts(n);
  for (auto& p : pts) p = Vec2(u(rng), u(rng));
  return pts;
}

void BM_Forward(benchmark::State& state) {
  const auto model = init_model<float>(ModelConfig{}, 0);
  const auto pts = random_uvs(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto tape = forward(model, std::span<const Vec2>(pts));
    benchmark::DoNotOptimize(tape.output().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->Arg(128)->Arg(1024)->Arg(7168);

void BM_ForwardBackward(benchmark::State& state) {
  const auto model = init_model<float>(ModelConfig{}, 0);
  const auto pts = random_uvs(static_cast<int>(state.range(0)));
  const MatrixX<float> upstream = MatrixX<float>::Ones(3, state.range(0));
  GradientBuffer<float> grad(model);
  for (auto _ : state) {
    auto tape = forward(model, std::span<const Vec2>(pts));
    grad.zero();
    backward(model, tape, upstream, grad);
    benchmark::DoNotOptimize(grad.values().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBackward)->Arg(128)->Arg(1024)->Arg(7168);

void BM_Encode(benchmark::State& state) {
  const auto model = init_model<float>(ModelConfig{}, 0);
  const auto pts = random_uvs(1024);
  std::size_t k = 0;
  for (auto _ : state) {
    auto f = encode(model, pts[k++ % pts.size()]);
    benchmark::DoNotOptimize(f.data());
  }
}
BENCHMARK(BM_Encode);

}  // namespace
