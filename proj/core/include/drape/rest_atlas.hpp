#pragma once

#include "drape/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace drape {

/// Garment in its rest pose together with a single-chart UV layout. 3D
/// positions and UVs share vertex indexing.
struct GarmentRestMesh {
  std::vector<Vec3> vertices;
  std::vector<Vec2> uvs;
  std::vector<Triangle> triangles;
  std::string name;
};

/// Throws InvalidMesh / DegenerateTriangle when the mesh breaks the
/// single-chart contract (UVs in [0,1]^2, non-degenerate and
/// non-overlapping UV triangles, valid indices).
void validate_rest_mesh(const GarmentRestMesh& mesh);

/// Flat square cloth of `resolution` x `resolution` vertices lying in the
/// plane z = height with identity UV map scaled to `size` meters.
GarmentRestMesh make_square_cloth(int resolution, double size, double height);

struct BarycentricCoords {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double lambda3 = 0.0;
};

inline constexpr double kDegenerateArea = 1e-12;
inline constexpr double kInsideTolerance = 1e-9;

/// Throws DegenerateTriangle when |signed area| of (a,b,c) <= 1e-12.
BarycentricCoords barycentric_coords(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c);

/// UV -> rest-pose lookup for one garment. Owns a uniform bucket grid over
/// UV triangles so containment queries stay O(1) on regular meshes. The
/// object is immutable after construction and safe to share across threads.
class RestMapping {
 public:
  explicit RestMapping(GarmentRestMesh mesh);

  const GarmentRestMesh& mesh() const noexcept { return mesh_; }

  /// Lowest-index triangle containing p (all lambda >= -1e-9), if any.
  std::optional<int> locate_triangle(const Vec2& p) const;

  bool is_valid(const Vec2& p) const { return locate_triangle(p).has_value(); }

  /// Barycentric interpolation of rest positions; InvalidUvPoint if p is
  /// outside every triangle.
  Vec3 rest_position(const Vec2& p) const;

  std::optional<Vec3> try_rest_position(const Vec2& p) const;

  double rest_length(const Vec2& a, const Vec2& b) const;

 private:
  GarmentRestMesh mesh_;
  int buckets_ = 1;
  std::vector<std::vector<int>> bucket_triangles_;
};

/// Brute-force reference for locate_triangle; linear in the triangle count.
std::optional<int> locate_triangle_linear(const GarmentRestMesh& mesh, const Vec2& p);

/// Precomputed UV -> rest-position table. Pixel (row, col) has its center at
/// u = (col + 0.5) / resolution, v = (row + 0.5) / resolution. Stored values
/// are normalized, stored = (position - offset) * scale.
struct RestAtlas {
  int resolution = 0;
  std::vector<Vec3> positions;
  std::vector<std::uint8_t> mask;
  double scale = 1.0;
  Vec3 offset = Vec3::Zero();

  bool valid(int row, int col) const { return mask[index(row, col)] != 0; }
  Vec3 normalized(int row, int col) const { return positions[index(row, col)]; }
  Vec3 position(int row, int col) const { return positions[index(row, col)] / scale + offset; }
  Vec2 pixel_center(int row, int col) const {
    return {(col + 0.5) / resolution, (row + 0.5) / resolution};
  }
  double valid_fraction() const;

  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * resolution + col;
  }
};

RestAtlas build_atlas(const RestMapping& rest, int resolution);

/// Binary atlas file: magic "NDATLAS1", int32 resolution, float64 scale,
/// 3 x float64 offset, then per pixel 3 x float32 normalized position and a
/// uint8 mask, row-major.
void save_atlas(const RestAtlas& atlas, const std::string& path);
RestAtlas load_atlas(const std::string& path);

/// Debug dump: 16-bit RGBA PNG (alpha = mask) plus `<png>.txt` carrying
/// scale and offset.
void save_atlas_png(const RestAtlas& atlas, const std::string& png_path);

}  // namespace drape
