#include "drape/objective.hpp"

#include "drape/collider.hpp"
#include "drape/error.hpp"
#include "drape/rest_atlas.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

namespace drape {

std::string to_string(Reduction r) { return r == Reduction::mean ? "mean" : "sum"; }

Reduction parse_reduction(const std::string& s) {
  if (s == "mean") return Reduction::mean;
  if (s == "sum") return Reduction::sum;
  throw Error(ErrorCode::ParseError, "unknown reduction '" + s + "'");
}

namespace {

constexpr int kPointsPerStructure = 7;  // six patch vertices plus the center

template <class Real>
struct ChunkResult {
  LossBreakdown loss;
  int degenerate_pairs = 0;
  std::optional<GradientBuffer<Real>> grad;
  std::vector<LossBreakdown> each;
};

template <class Real>
ChunkResult<Real> run_chunk(const SurfaceModel<Real>& model, const RestMapping& rest, const ColliderMesh* collider,
                            std::span<const StructureSample> chunk, const LossConfig& config, Real scale,
                            bool want_grad, bool want_each) {
  const std::size_t n = chunk.size();
  std::vector<Vec2> uv(n * kPointsPerStructure);
  std::vector<Vec3> base(n * kPointsPerStructure);
  std::vector<std::array<Real, 9>> rest_lengths(n);
  for (std::size_t s = 0; s < n; ++s) {
    const LocalStructure2D s2d = build_structure_2d(chunk[s].center, config.side, chunk[s].theta);
    for (int k = 0; k < 6; ++k) uv[s * kPointsPerStructure + k] = s2d.vertices[k];
    uv[s * kPointsPerStructure + 6] = chunk[s].center;
    for (int k = 0; k < kPointsPerStructure; ++k) {
      const auto p = rest.try_rest_position(uv[s * kPointsPerStructure + k]);
      if (!p) throw Error(ErrorCode::InvalidStructure, "batch contains an invalid structure");
      base[s * kPointsPerStructure + k] = *p;
    }
    for (int e = 0; e < 9; ++e) {
      const auto& edge = LocalStructure2D::edges[e];
      rest_lengths[s][e] =
          static_cast<Real>((base[s * kPointsPerStructure + edge[0]] - base[s * kPointsPerStructure + edge[1]]).norm());
    }
  }

  const ForwardTape<Real> tape = forward(model, std::span<const Vec2>(uv));
  const MatrixX<Real>& out = tape.output();
  MatrixX<Real> upstream;
  if (want_grad) upstream = MatrixX<Real>::Zero(3, static_cast<Eigen::Index>(uv.size()));

  const LossWeights& w = config.weights;
  const Vec3T<Real> gravity_grad =
      (scale * static_cast<Real>(w.gravity * config.consts.mass * config.consts.gravity)) *
      config.consts.gravity_axis.cast<Real>();

  ChunkResult<Real> result;
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t col0 = s * kPointsPerStructure;
    LocalStructure3D<Real> s3d;
    for (int k = 0; k < 6; ++k) s3d.positions[k] = base[col0 + k].cast<Real>() + out.col(col0 + k);
    s3d.rest_lengths = rest_lengths[s];
    const Vec3T<Real> center = base[col0 + 6].cast<Real>() + out.col(col0 + 6);

    VertexGradient<Real> g;
    for (auto& v : g) v.setZero();
    const Real gs = want_grad ? scale : Real(0);
    LossBreakdown lb;
    lb.strain = strain_loss_grad(s3d, config.edges, config.strain_form, gs * static_cast<Real>(w.strain), g);
    lb.bend = bend_loss_grad(s3d, gs * static_cast<Real>(w.bend), g, &result.degenerate_pairs);
    lb.gravity = gravity_loss<Real>(center, config.consts);
    lb.collision =
        collider ? collision_loss_grad(s3d, *collider, config.consts, gs * static_cast<Real>(w.collision), g) : 0.0;
    lb.recombine(w);
    result.loss += lb;
    if (want_each) result.each.push_back(lb);

    if (want_grad) {
      for (int k = 0; k < 6; ++k) upstream.col(col0 + k) = g[k];
      upstream.col(col0 + 6) = gravity_grad;
    }
  }
  if (want_grad) {
    result.grad.emplace(model);
    backward(model, tape, upstream, *result.grad);
  }
  return result;
}

}  // namespace

template <class Real>
BatchResult evaluate_batch(const SurfaceModel<Real>& model, const RestMapping& rest, const ColliderMesh* collider,
                           std::span<const StructureSample> samples, const LossConfig& config,
                           const BatchOptions& options, GradientBuffer<Real>* grad,
                           std::vector<LossBreakdown>* per_structure) {
  if (grad && !grad->congruent(model)) throw Error(ErrorCode::ShapeMismatch, "gradient buffer does not match model");
  BatchResult result;
  result.structures = static_cast<int>(samples.size());
  if (per_structure) per_structure->clear();
  if (samples.empty()) return result;

  const double scale_d = options.reduction == Reduction::mean ? 1.0 / static_cast<double>(samples.size()) : 1.0;
  const Real scale = static_cast<Real>(scale_d);
  const std::size_t chunk = static_cast<std::size_t>(std::max(1, options.chunk_size));
  const std::size_t num_chunks = (samples.size() + chunk - 1) / chunk;
  std::vector<ChunkResult<Real>> partial(num_chunks);

  auto work = [&](std::size_t c) {
    const std::size_t begin = c * chunk;
    const std::size_t end = std::min(samples.size(), begin + chunk);
    partial[c] = run_chunk(model, rest, collider, samples.subspan(begin, end - begin), config, scale, grad != nullptr,
                           per_structure != nullptr);
  };

  const int threads = std::clamp(options.threads, 1, static_cast<int>(num_chunks));
  if (threads == 1) {
    for (std::size_t c = 0; c < num_chunks; ++c) work(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t c; (c = next.fetch_add(1)) < num_chunks;) {
          try {
            work(c);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  for (auto& p : partial) {
    result.loss += p.loss;
    result.degenerate_pairs += p.degenerate_pairs;
    if (grad) *grad += *p.grad;
    if (per_structure) per_structure->insert(per_structure->end(), p.each.begin(), p.each.end());
  }
  result.loss *= scale_d;
  return result;
}

template BatchResult evaluate_batch<float>(const SurfaceModel<float>&, const RestMapping&, const ColliderMesh*,
                                           std::span<const StructureSample>, const LossConfig&, const BatchOptions&,
                                           GradientBuffer<float>*, std::vector<LossBreakdown>*);
template BatchResult evaluate_batch<double>(const SurfaceModel<double>&, const RestMapping&, const ColliderMesh*,
                                            std::span<const StructureSample>, const LossConfig&, const BatchOptions&,
                                            GradientBuffer<double>*, std::vector<LossBreakdown>*);

}  // namespace drape
