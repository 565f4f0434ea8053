#pragma once

#include "drape/losses.hpp"
#include "drape/neural_surface.hpp"
#include "drape/optimizer.hpp"
#include "drape/rest_atlas.hpp"

#include <span>
#include <vector>

namespace drape {

class ColliderMesh;

/// Edges and interior edge-adjacent face pairs of a garment mesh, with rest
/// lengths taken from its 3D rest pose.
struct MeshTopology {
  std::vector<std::array<int, 2>> edges;
  std::vector<double> rest_lengths;
  std::vector<std::array<int, 2>> face_pairs;
  int vertex_count = 0;

  static MeshTopology build(const GarmentRestMesh& mesh);
};

/// Mass-spring style losses evaluated on the original mesh connectivity.
/// Each term is a sum over its elements divided by the vertex count. If
/// `grad` is non-null it receives d(weighted total)/d(position) per vertex.
template <class Real>
LossBreakdown mesh_losses(std::span<const Vec3T<Real>> positions, const std::vector<Triangle>& triangles,
                          const MeshTopology& topology, const ColliderMesh* collider, const LossConfig& config,
                          std::vector<Vec3T<Real>>* grad);

/// Direct vertex optimization: the free variables are the 3V vertex
/// coordinates.
class VertexBaseline {
 public:
  VertexBaseline(const GarmentRestMesh& mesh, OptimizerConfig optimizer);

  std::size_t free_variables() const noexcept { return 3 * positions_.size(); }
  const std::vector<Vec3>& positions() const noexcept { return positions_; }

  /// Evaluates the losses at the current positions, takes one step and
  /// returns the pre-step losses. `gradient_norm` receives |grad|.
  LossBreakdown step(const ColliderMesh* collider, const LossConfig& config, double* gradient_norm = nullptr);

 private:
  std::vector<Triangle> triangles_;
  MeshTopology topology_;
  std::vector<Vec3> positions_;
  Optimizer optimizer_;
};

/// Neural surface queried only at the mesh vertex UVs; adds the parameter
/// gradient into `grad` when non-null.
template <class Real>
LossBreakdown neural_mesh_objective(const SurfaceModel<Real>& model, const GarmentRestMesh& mesh,
                                    const MeshTopology& topology, const ColliderMesh* collider,
                                    const LossConfig& config, GradientBuffer<Real>* grad);

struct MeshBaselineResult {
  std::vector<Vec3> vertex_positions;
  std::size_t vertex_free_variables = 0;
  std::vector<LossBreakdown> vertex_history;
  SurfaceModel<float> model;
  std::size_t model_parameters = 0;
  std::vector<LossBreakdown> model_history;
};

struct MeshBaselineConfig {
  ModelConfig model;
  OptimizerConfig optimizer;
  LossConfig loss;
  int epochs = 0;
  std::uint64_t seed = 0;
};

/// Runs both mesh-connectivity baselines for `config.epochs` steps each.
MeshBaselineResult mesh_connectivity_baseline(const GarmentRestMesh& mesh, const ColliderMesh* collider,
                                              const MeshBaselineConfig& config);

}  // namespace drape
