#pragma once

#include "drape/types.hpp"

#include <memory>
#include <span>
#include <vector>

namespace drape {

struct NearestResult {
  int id = -1;
  double distance = 0.0;
};

/// Exact nearest-point queries over a fixed point set (kd-tree, median
/// splits on the widest axis). Ties resolve to the lowest point index.
class SpatialIndex {
 public:
  SpatialIndex() = default;
  /// Throws EmptyCollider when `points` is empty.
  explicit SpatialIndex(std::vector<Vec3> points, int leaf_size = 16);

  NearestResult nearest(const Vec3& q) const;

  std::size_t size() const noexcept { return points_.size(); }
  /// Point ids in leaf order; each id appears exactly once.
  const std::vector<int>& order() const noexcept { return order_; }

 private:
  struct Node {
    Eigen::AlignedBox3d box;
    int begin = 0, end = 0;  // range in order_
    int left = -1, right = -1;
  };
  int build(int begin, int end);
  void search(int node, const Vec3& q, double& best_d2, int& best_id) const;

  std::vector<Vec3> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int leaf_size_ = 16;
};

/// Linear-scan reference for SpatialIndex::nearest.
NearestResult nearest_vertex_linear(std::span<const Vec3> points, const Vec3& q);

/// Area-weighted vertex normals; vertices no face references get zero.
/// Throws DegenerateMesh if every face is degenerate.
std::vector<Vec3> compute_vertex_normals(std::span<const Vec3> vertices, std::span<const Triangle> triangles);

/// Rigid obstacle. Only vertices with a non-zero normal enter the index.
class ColliderMesh {
 public:
  ColliderMesh(std::vector<Vec3> vertices, std::vector<Triangle> triangles, std::vector<Vec3> normals = {},
               int leaf_size = 16);

  const std::vector<Vec3>& vertices() const noexcept { return vertices_; }
  const std::vector<Triangle>& triangles() const noexcept { return triangles_; }
  const std::vector<Vec3>& normals() const noexcept { return normals_; }

  /// Nearest vertex carrying a normal; id refers to vertices().
  NearestResult nearest_vertex(const Vec3& q) const;

 private:
  std::vector<Vec3> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<Vec3> normals_;
  std::vector<int> indexed_ids_;
  SpatialIndex index_;
};

/// Icosahedron subdivided `subdivisions` times and projected onto the sphere.
ColliderMesh make_icosphere(const Vec3& center, double radius, int subdivisions);

/// Torus around the z axis.
ColliderMesh make_torus(const Vec3& center, double major_radius, double minor_radius, int major_segments,
                        int minor_segments);

/// Triangular prism with its axis along x and an upward ridge; each face is
/// tessellated into an n x n grid so vertex correspondences stay dense.
ColliderMesh make_prism(const Vec3& center, double length, double width, double height, int n);

}  // namespace drape
