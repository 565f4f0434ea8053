#include "drape/encoding_bench.hpp"

#include "drape/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

namespace drape {

Vec3 SineTarget::displacement(const Vec2& p) const {
  const double w = 2.0 * kPi;
  const double z = low_amplitude * std::sin(w * low_frequency * p.x()) * std::sin(w * low_frequency * p.y()) +
                   high_amplitude * std::sin(w * high_frequency * p.x()) * std::sin(w * high_frequency * p.y());
  return {0.0, 0.0, z};
}

std::vector<BenchVariant> default_bench_variants() {
  BenchVariant mlp{"baseline_mlp", {}};
  mlp.model.encoder.kind = InputEncoding::identity;
  mlp.model.encoder.layer_resolutions.clear();
  mlp.model.mlp.dims = {2, 152, 152, 152, 3};

  BenchVariant pos{"positional", {}};
  pos.model.encoder.kind = InputEncoding::positional;
  pos.model.encoder.layer_resolutions.clear();
  pos.model.encoder.num_frequencies = 4;
  pos.model.mlp.dims = {18, 148, 148, 148, 3};

  BenchVariant grid{"multigrid", {}};
  return {mlp, pos, grid};
}

double dense_mse(const SurfaceModel<float>& model, const SineTarget& target, int resolution) {
  std::vector<Vec2> pts;
  pts.reserve(static_cast<std::size_t>(resolution) * resolution);
  for (int i = 0; i < resolution; ++i)
    for (int j = 0; j < resolution; ++j) pts.emplace_back((j + 0.5) / resolution, (i + 0.5) / resolution);
  const auto tape = forward(model, std::span<const Vec2>(pts));
  double sum = 0.0;
  for (std::size_t k = 0; k < pts.size(); ++k)
    sum += (tape.output().col(k).cast<double>() - target.displacement(pts[k])).squaredNorm();
  return sum / pts.size();
}

std::vector<BenchEntry> supervised_bench(const std::vector<BenchVariant>& variants, const BenchConfig& config) {
  if (variants.empty()) return {};
  std::vector<std::size_t> counts;
  for (const auto& v : variants) counts.push_back(param_count(v.model.encoder, v.model.mlp.dims));
  const double lo = static_cast<double>(*std::min_element(counts.begin(), counts.end()));
  const double hi = static_cast<double>(*std::max_element(counts.begin(), counts.end()));
  if ((hi - lo) / hi > config.max_budget_spread)
    throw Error(ErrorCode::BudgetMismatch, "variant parameter counts differ by more than the allowed spread");

  std::vector<BenchEntry> out;
  for (std::size_t vi = 0; vi < variants.size(); ++vi) {
    const auto start = std::chrono::steady_clock::now();
    BenchEntry entry;
    entry.name = variants[vi].name;
    entry.parameters = counts[vi];

    SurfaceModel<float> model = init_model<float>(variants[vi].model, config.seed);
    Optimizer opt(config.optimizer, model.size());
    GradientBuffer<float> grad(model);
    std::mt19937_64 rng(config.seed + 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Vec2> batch(config.batch_size);
    MatrixX<float> upstream(3, config.batch_size);

    for (int epoch = 0;; ++epoch) {
      if (epoch % config.eval_every == 0 || epoch == config.max_epochs) {
        entry.final_mse = dense_mse(model, config.target, config.eval_resolution);
        if (entry.final_mse < config.threshold) {
          entry.epochs_to_threshold = epoch;
          break;
        }
      }
      if (epoch >= config.max_epochs) break;
      for (auto& p : batch) p = Vec2(unit(rng), unit(rng));
      const auto tape = forward(model, std::span<const Vec2>(batch));
      const float scale = 2.0f / static_cast<float>(config.batch_size);
      for (int k = 0; k < config.batch_size; ++k)
        upstream.col(k) = scale * (tape.output().col(k) - config.target.displacement(batch[k]).cast<float>());
      grad.zero();
      backward(model, tape, upstream, grad);
      opt.step<float>(model.parameters(), grad.values());
    }
    entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.push_back(entry);
  }
  return out;
}

}  // namespace drape
