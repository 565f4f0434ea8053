#pragma once

#include "drape/losses.hpp"
#include "drape/neural_surface.hpp"

#include <span>
#include <string>
#include <vector>

namespace drape {

class ColliderMesh;
class RestMapping;

/// One sampled structure: its UV center and in-plane rotation.
struct StructureSample {
  Vec2 center = Vec2::Zero();
  double theta = 0.0;
};

enum class Reduction { mean, sum };

std::string to_string(Reduction r);
Reduction parse_reduction(const std::string& s);

struct BatchOptions {
  Reduction reduction = Reduction::mean;
  /// Structures per forward/backward chunk; partial gradients are summed in
  /// chunk order so the result does not depend on the thread count.
  int chunk_size = 128;
  int threads = 1;
};

struct BatchResult {
  /// Reduced (mean or sum) per-term losses and their weighted total.
  LossBreakdown loss;
  int structures = 0;
  int degenerate_pairs = 0;
};

/// Weighted structure loss over a batch and, if `grad` is non-null, its
/// gradient with respect to every model parameter (added into `grad`).
/// Every sample must be a valid structure; throws InvalidStructure
/// otherwise. `per_structure`, if given, receives the unreduced breakdown
/// of every sample in order.
template <class Real>
BatchResult evaluate_batch(const SurfaceModel<Real>& model, const RestMapping& rest, const ColliderMesh* collider,
                           std::span<const StructureSample> samples, const LossConfig& config,
                           const BatchOptions& options, GradientBuffer<Real>* grad,
                           std::vector<LossBreakdown>* per_structure = nullptr);

}  // namespace drape
