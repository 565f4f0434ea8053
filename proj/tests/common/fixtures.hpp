#pragma once

#include "drape/collider.hpp"
#include "drape/local_structure.hpp"
#include "drape/neural_surface.hpp"
#include "drape/rest_atlas.hpp"

#include <random>
#include <vector>

namespace drape::test {

/// Unit square in the z = `height` plane with the identity UV map.
inline GarmentRestMesh identity_plane(int resolution = 5, double height = 0.0) {
  return make_square_cloth(resolution, 1.0, height);
}

/// Grids 5x5 and 3x3 with 3 features feeding an [6, 8, 8, 8, 3] MLP.
inline ModelConfig small_model_config(Activation act = Activation::tanh) {
  ModelConfig c;
  c.encoder.layer_resolutions = {5, 3};
  c.encoder.feature_dim = 3;
  c.mlp.dims = {6, 8, 8, 8, 3};
  c.mlp.activation = act;
  return c;
}

/// Every parameter drawn from U(-scale, scale).
template <class Real>
SurfaceModel<Real> random_model(const ModelConfig& config, std::uint64_t seed, double scale = 0.5) {
  SurfaceModel<Real> m(config);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-scale, scale);
  for (auto& p : m.parameters()) p = static_cast<Real>(d(rng));
  return m;
}

/// Lifted patch of a planar structure at z = 0 with rest lengths equal to
/// the current lengths.
inline LocalStructure3D<double> flat_structure(const Vec2& center = Vec2(0.5, 0.5), double side = 0.1,
                                               double theta = 0.0) {
  const LocalStructure2D s2d = build_structure_2d(center, side, theta);
  LocalStructure3D<double> s;
  for (int k = 0; k < 6; ++k) s.positions[k] = Vec3(s2d.vertices[k].x(), s2d.vertices[k].y(), 0.0);
  for (int e = 0; e < 9; ++e) {
    const auto [a, b] = LocalStructure2D::edges[e];
    s.rest_lengths[e] = (s.positions[a] - s.positions[b]).norm();
  }
  return s;
}

/// Two triangles spanning [0,1]^2 at z = 0, normals +z.
inline ColliderMesh floor_collider(double z = 0.0) {
  return ColliderMesh({{0, 0, z}, {1, 0, z}, {1, 1, z}, {0, 1, z}}, {{0, 1, 2}, {0, 2, 3}});
}

}  // namespace drape::test
